#include "xlalign/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "xlalign/parallel.hpp"
#include "xlalign/rng.hpp"
#include "xlalign/svd.hpp"

namespace xlalign::encoders {

EncoderParams EncoderParams::init(std::string lang, std::size_t vocab_size,
                                  std::size_t embed_dim, std::size_t hidden_dim, Rng& rng) {
  if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0) {
    throw DimensionError("encoder dimensions must be positive");
  }
  EncoderParams p;
  p.lang = std::move(lang);
  const std::string prefix = "enc." + p.lang;
  p.embeddings = Parameter(prefix + ".emb",
                           Tensor::normal(vocab_size, embed_dim,
                                          1.0 / std::sqrt(static_cast<double>(embed_dim)), rng));
  p.forward = LstmParams::init(prefix + ".fwd", embed_dim, hidden_dim, rng);
  p.backward = LstmParams::init(prefix + ".bwd", embed_dim, hidden_dim, rng);
  return p;
}

std::vector<Parameter*> EncoderParams::parameters() {
  std::vector<Parameter*> out;
  if (embeddings.trainable) out.push_back(&embeddings);
  for (Parameter* q : forward.parameters()) out.push_back(q);
  for (Parameter* q : backward.parameters()) out.push_back(q);
  return out;
}

std::size_t EncoderParams::load_embeddings(const text::WordVectors& vectors,
                                           const text::Vocabulary& vocab) {
  if (vectors.vectors.cols() != embed_dim()) {
    throw DimensionError("embedding file has dim " + std::to_string(vectors.vectors.cols()) +
                         ", encoder expects " + std::to_string(embed_dim()));
  }
  std::size_t loaded = 0;
  for (std::size_t i = 0; i < vectors.words.size(); ++i) {
    if (!vocab.contains(vectors.words[i])) continue;
    const int id = vocab.id(vectors.words[i]);
    if (static_cast<std::size_t>(id) >= vocab_size()) continue;
    auto src = vectors.vectors.row(i);
    std::copy(src.begin(), src.end(), embeddings.value.row(static_cast<std::size_t>(id)).begin());
    ++loaded;
  }
  return loaded;
}

void EncoderParams::save_to(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.add(prefix + ".emb", embeddings.value);
  ckpt.add(prefix + ".fwd.W", forward.weight.value);
  ckpt.add(prefix + ".fwd.b", forward.bias.value);
  ckpt.add(prefix + ".bwd.W", backward.weight.value);
  ckpt.add(prefix + ".bwd.b", backward.bias.value);
}

EncoderParams EncoderParams::load_from(const Checkpoint& ckpt, const std::string& prefix,
                                       std::string lang) {
  EncoderParams p;
  p.lang = std::move(lang);
  p.embeddings = Parameter(prefix + ".emb", ckpt.get(prefix + ".emb"));
  auto load_dir = [&](const std::string& dir) {
    LstmParams l;
    l.weight = Parameter(prefix + dir + ".W", ckpt.get(prefix + dir + ".W"));
    l.bias = Parameter(prefix + dir + ".b", ckpt.get(prefix + dir + ".b"));
    l.hidden_dim = l.bias.value.cols() / 4;
    if (l.hidden_dim == 0 || l.bias.value.cols() != 4 * l.hidden_dim ||
        l.weight.value.rows() <= l.hidden_dim || l.weight.value.cols() != 4 * l.hidden_dim) {
      throw ValidationError("checkpoint LSTM '" + prefix + dir + "' has inconsistent shapes");
    }
    l.input_dim = l.weight.value.rows() - l.hidden_dim;
    return l;
  };
  p.forward = load_dir(".fwd");
  p.backward = load_dir(".bwd");
  if (p.forward.input_dim != p.embed_dim() || p.backward.input_dim != p.embed_dim() ||
      p.forward.hidden_dim != p.backward.hidden_dim) {
    throw ValidationError("checkpoint encoder '" + prefix + "' directions disagree on D or H");
  }
  return p;
}

EncoderVars bind(Graph& g, EncoderParams& p) {
  return {g.param(p.embeddings), g.param(p.forward.weight), g.param(p.forward.bias),
          g.param(p.backward.weight), g.param(p.backward.bias), p.hidden_dim()};
}

EncoderVars bind_frozen(Graph& g, const EncoderParams& p) {
  return {g.constant(p.embeddings.value),     g.constant(p.forward.weight.value),
          g.constant(p.forward.bias.value),   g.constant(p.backward.weight.value),
          g.constant(p.backward.bias.value), p.hidden_dim()};
}

Graph::Var encode_batch(Graph& g, const EncoderVars& vars, std::span<const IdSequence> batch) {
  if (batch.empty()) throw DimensionError("encode_batch: empty batch");
  const std::size_t B = batch.size();
  const std::size_t H = vars.hidden_dim;
  std::size_t T = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (batch[b].empty()) {
      throw DimensionError("encode: sentence " + std::to_string(b) + " of the batch is empty");
    }
    T = std::max(T, batch[b].size());
  }
  std::vector<double> mask(T * B, 0.0);
  std::vector<std::vector<int>> ids(T, std::vector<int>(B, text::kPad));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < batch[b].size(); ++t) {
      mask[t * B + b] = 1.0;
      ids[t][b] = batch[b][t];
    }
  }
  std::vector<Graph::Var> inputs(T);
  for (std::size_t t = 0; t < T; ++t) inputs[t] = g.gather_rows(vars.embeddings, ids[t]);

  auto run = [&](Graph::Var weight, Graph::Var bias, bool reverse) {
    std::vector<Graph::Var> states(T);
    Graph::Var h = g.constant(Tensor::matrix(B, H));
    Graph::Var c = g.constant(Tensor::matrix(B, H));
    for (std::size_t k = 0; k < T; ++k) {
      const std::size_t t = reverse ? T - 1 - k : k;
      std::span<const double> m(mask.data() + t * B, B);
      LstmVars next = lstm_step(g, inputs[t], h, c, weight, bias, H);
      h = g.blend_rows(next.h, h, m);
      c = g.blend_rows(next.c, c, m);
      states[t] = h;
    }
    return g.masked_max(states, mask);
  };
  Graph::Var fwd = run(vars.fwd_weight, vars.fwd_bias, false);
  Graph::Var bwd = run(vars.bwd_weight, vars.bwd_bias, true);
  return g.concat_cols({fwd, bwd});
}

SentenceEmbedding encode_bilstm_maxpool(const IdSequence& s, const EncoderParams& p) {
  if (s.empty()) throw DimensionError("encode_bilstm_maxpool: empty sentence");
  Graph g;
  EncoderVars vars = bind_frozen(g, p);
  std::vector<IdSequence> batch{s};
  const Tensor& out = g.value(encode_batch(g, vars, batch));
  return {std::vector<double>(out.data().begin(), out.data().end()), "bilstm_maxpool." + p.lang};
}

Tensor encode_bilstm_maxpool(std::span<const IdSequence> sentences, const EncoderParams& p,
                             std::size_t batch_size) {
  if (sentences.empty()) throw DimensionError("encode_bilstm_maxpool: no sentences");
  batch_size = std::max<std::size_t>(1, batch_size);
  const std::size_t n = sentences.size();
  const std::size_t dim = p.output_dim();
  Tensor out = Tensor::matrix(n, dim);
  const std::size_t n_batches = (n + batch_size - 1) / batch_size;
  parallel_for(n_batches, worker_count(), [&](std::size_t bi) {
    const std::size_t begin = bi * batch_size;
    const std::size_t end = std::min(n, begin + batch_size);
    Graph g;
    EncoderVars vars = bind_frozen(g, p);
    const Tensor& enc = g.value(encode_batch(g, vars, sentences.subspan(begin, end - begin)));
    for (std::size_t r = begin; r < end; ++r) {
      auto src = enc.row(r - begin);
      std::copy(src.begin(), src.end(), out.row(r).begin());
    }
  });
  return out;
}

Tensor table_from_vectors(const text::WordVectors& vectors, const text::Vocabulary& vocab) {
  Tensor table = Tensor::matrix(vocab.size(), vectors.vectors.cols());
  for (std::size_t i = 0; i < vectors.words.size(); ++i) {
    if (!vocab.contains(vectors.words[i])) continue;
    const int id = vocab.id(vectors.words[i]);
    if (id < text::kNumReserved) continue;
    auto src = vectors.vectors.row(i);
    std::copy(src.begin(), src.end(), table.row(static_cast<std::size_t>(id)).begin());
  }
  return table;
}

SentenceEmbedding encode_sif(const IdSequence& s, const Tensor& table,
                             const text::Vocabulary& vocab, double a) {
  if (s.empty()) throw DimensionError("encode_sif: empty sentence");
  const std::size_t dim = table.cols();
  std::vector<double> acc(dim, 0.0);
  for (int id : s) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw DimensionError("encode_sif: id " + std::to_string(id) + " outside table " +
                           table.shape_str());
    }
    const double w = text::sif_weight(vocab.frequency(id), vocab.total(), a);
    auto row = table.row(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < dim; ++k) acc[k] += w * row[k];
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  for (auto& x : acc) x *= inv;
  return {std::move(acc), "sif"};
}

Tensor encode_sif(std::span<const IdSequence> sentences, const Tensor& table,
                  const text::Vocabulary& vocab, double a) {
  if (sentences.empty()) throw DimensionError("encode_sif: no sentences");
  Tensor out = Tensor::matrix(sentences.size(), table.cols());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    SentenceEmbedding e = encode_sif(sentences[i], table, vocab, a);
    std::copy(e.values.begin(), e.values.end(), out.row(i).begin());
  }
  return out;
}

void remove_common_component(Tensor& embeddings) {
  SvdResult d = svd(embeddings);
  auto pc = d.vt.row(0);
  for (std::size_t r = 0; r < embeddings.rows(); ++r) {
    auto row = embeddings.row(r);
    const double proj = dot(row, pc);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] -= proj * pc[k];
  }
}

std::vector<IdSequence> encode_all(const text::Vocabulary& vocab,
                                   std::span<const text::TokenSequence> sentences) {
  std::vector<IdSequence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(vocab.encode(s));
  return out;
}

}  // namespace xlalign::encoders
