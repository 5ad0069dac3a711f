#include "xlalign/mapping.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "xlalign/checkpoint.hpp"
#include "xlalign/svd.hpp"

namespace xlalign::mapping {

namespace {

Tensor column_mean(const Tensor& x) {
  Tensor mu = Tensor::matrix(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mu[c] += x(r, c);
  for (auto& v : mu.data()) v /= static_cast<double>(x.rows());
  return mu;
}

Tensor subtract_row(const Tensor& x, const Tensor& row) {
  Tensor out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) -= row[c];
  return out;
}

Tensor as_rows(const Tensor& t) {
  if (t.rank() == 2) return t;
  return Tensor({1, t.size()}, std::vector<double>(t.data().begin(), t.data().end()));
}

}  // namespace

AlignmentMap fit_orthogonal_map(const Tensor& x_in, const Tensor& y_in, const FitOptions& options) {
  Tensor x = as_rows(x_in);
  Tensor y = as_rows(y_in);
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("fit_orthogonal_map: source " + x.shape_str() + " vs target " +
                         y.shape_str());
  }
  AlignmentMap m;
  m.src_lang = options.src_lang;
  m.tgt_lang = options.tgt_lang;
  m.pairs = x.rows();
  m.centered = options.center;
  if (options.center) {
    m.src_mean = column_mean(x);
    m.tgt_mean = column_mean(y);
    x = subtract_row(x, m.src_mean);
    y = subtract_row(y, m.tgt_mean);
  }
  Tensor cross = Tensor::matrix(x.cols(), y.cols());
  gemm_accumulate(x, true, y, false, cross);
  SvdResult d = svd(cross);
  m.w = matmul(d.u, d.vt);
  m.residual = frobenius_norm(matmul(x, m.w) - y);
  return m;
}

Tensor apply_map(const Tensor& rows_in, const AlignmentMap& m) {
  Tensor rows = as_rows(rows_in);
  if (rows.cols() != m.dim()) {
    throw DimensionError("apply_map: embedding dim " + std::to_string(rows.cols()) +
                         " vs map dim " + std::to_string(m.dim()));
  }
  if (!m.centered) return matmul(rows, m.w);
  Tensor out = matmul(subtract_row(rows, m.src_mean), m.w);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += m.tgt_mean[c];
  return out;
}

Tensor apply_inverse(const Tensor& rows_in, const AlignmentMap& m) {
  Tensor rows = as_rows(rows_in);
  if (rows.cols() != m.dim()) {
    throw DimensionError("apply_inverse: embedding dim " + std::to_string(rows.cols()) +
                         " vs map dim " + std::to_string(m.dim()));
  }
  Tensor out = Tensor::matrix(rows.rows(), m.dim());
  if (!m.centered) {
    gemm_accumulate(rows, false, m.w, true, out);
    return out;
  }
  gemm_accumulate(subtract_row(rows, m.tgt_mean), false, m.w, true, out);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += m.src_mean[c];
  return out;
}

encoders::SentenceEmbedding apply_map(const encoders::SentenceEmbedding& e, const AlignmentMap& m) {
  Tensor mapped = apply_map(Tensor::vector(e.values), m);
  return {std::vector<double>(mapped.data().begin(), mapped.data().end()),
          e.producer + "->" + m.tgt_lang};
}

double orthogonality_error(const Tensor& w) {
  Tensor gram = Tensor::matrix(w.cols(), w.cols());
  gemm_accumulate(w, true, w, false, gram);
  return max_abs_diff(gram, Tensor::identity(w.cols()));
}

AlignmentMap fit_dictionary_map(const text::WordVectors& src, const text::WordVectors& tgt,
                                std::span<const std::pair<std::string, std::string>> dictionary,
                                const FitOptions& options) {
  if (src.vectors.cols() != tgt.vectors.cols()) {
    throw DimensionError("fit_dictionary_map: source dim " + std::to_string(src.vectors.cols()) +
                         " vs target dim " + std::to_string(tgt.vectors.cols()));
  }
  auto si = src.index();
  auto ti = tgt.index();
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (const auto& [a, b] : dictionary) {
    auto ia = si.find(a);
    auto ib = ti.find(b);
    if (ia != si.end() && ib != ti.end()) rows.emplace_back(ia->second, ib->second);
  }
  if (rows.empty()) throw ValidationError("fit_dictionary_map: no dictionary entry has vectors on both sides");
  const std::size_t d = src.vectors.cols();
  Tensor x = Tensor::matrix(rows.size(), d);
  Tensor y = Tensor::matrix(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto a = src.vectors.row(rows[r].first);
    auto b = tgt.vectors.row(rows[r].second);
    std::copy(a.begin(), a.end(), x.row(r).begin());
    std::copy(b.begin(), b.end(), y.row(r).begin());
  }
  return fit_orthogonal_map(x, y, options);
}

void save_map(const std::filesystem::path& path, const AlignmentMap& m) {
  Checkpoint ckpt;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", m.residual);
  ckpt.comments.push_back("src=" + m.src_lang + " tgt=" + m.tgt_lang +
                          " pairs=" + std::to_string(m.pairs) + " residual=" + buf);
  ckpt.add("W", m.w);
  if (m.centered) {
    ckpt.add("src_mean", m.src_mean);
    ckpt.add("tgt_mean", m.tgt_mean);
  }
  save_checkpoint(path, ckpt);
}

AlignmentMap load_map(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  AlignmentMap m;
  m.w = ckpt.get("W");
  if (m.w.rank() != 2 || m.w.rows() != m.w.cols()) {
    throw ValidationError(path.string() + ": W must be square, got " + m.w.shape_str());
  }
  for (const auto& c : ckpt.comments) {
    std::istringstream is(c);
    std::string kv;
    while (is >> kv) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "src") m.src_lang = val;
      else if (key == "tgt") m.tgt_lang = val;
      else if (key == "pairs") m.pairs = std::stoull(val);
      else if (key == "residual") m.residual = std::stod(val);
    }
  }
  if (ckpt.contains("src_mean")) {
    m.centered = true;
    m.src_mean = ckpt.get("src_mean");
    m.tgt_mean = ckpt.get("tgt_mean");
  }
  return m;
}

}  // namespace xlalign::mapping
