#include "xlalign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "xlalign/graph.hpp"
#include "xlalign/parallel.hpp"
#include "xlalign/rng.hpp"

namespace xlalign::eval {

Tensor normalize_rows(const Tensor& m, std::string_view side) {
  Tensor out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double n = norm(row);
    if (!(n > 0.0)) {
      throw NumericError("zero-norm embedding: cosine undefined for " + std::string(side) +
                         " row " + std::to_string(r));
    }
    for (auto& x : row) x /= n;
  }
  return out;
}

RetrievalReport retrieval_accuracy(const Tensor& src, const Tensor& tgt, std::string direction,
                                   bool keep_ranks) {
  if (src.rows() != tgt.rows() || src.cols() != tgt.cols()) {
    throw DimensionError("retrieval_accuracy: source " + src.shape_str() + " vs target " +
                         tgt.shape_str());
  }
  const std::size_t n = src.rows();
  if (n < 2) throw DimensionError("retrieval_accuracy needs at least 2 pairs");
  const Tensor qs = normalize_rows(src, "source");
  const Tensor ts = normalize_rows(tgt, "target");

  std::vector<std::size_t> best(n), rank(n);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, worker_count(), [&](std::size_t bi) {
    const std::size_t begin = bi * kBlock;
    const std::size_t end = std::min(n, begin + kBlock);
    std::vector<double> sims(n);
    for (std::size_t i = begin; i < end; ++i) {
      auto q = qs.row(i);
      for (std::size_t j = 0; j < n; ++j) sims[j] = dot(q, ts.row(j));
      std::size_t arg = 0;
      for (std::size_t j = 1; j < n; ++j)
        if (sims[j] > sims[arg]) arg = j;
      best[i] = arg;
      std::size_t r = 1;
      for (std::size_t j = 0; j < n; ++j) {
        if (sims[j] > sims[i] || (sims[j] == sims[i] && j < i)) ++r;
      }
      rank[i] = r;
    }
  });

  RetrievalReport rep;
  rep.direction = std::move(direction);
  rep.n = n;
  for (std::size_t i = 0; i < n; ++i) rep.correct += best[i] == i;
  rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(n);
  if (keep_ranks) rep.ranks = std::move(rank);
  return rep;
}

std::vector<Neighbor> nearest_neighbors(std::span<const double> query, const Tensor& pool,
                                        std::span<const std::string> texts, std::size_t k) {
  if (pool.empty() || pool.rows() == 0) throw DimensionError("nearest_neighbors: empty pool");
  if (query.size() != pool.cols()) {
    throw DimensionError("nearest_neighbors: query dim " + std::to_string(query.size()) +
                         " vs pool " + pool.shape_str());
  }
  if (!texts.empty() && texts.size() != pool.rows()) {
    throw DimensionError("nearest_neighbors: " + std::to_string(texts.size()) + " texts for " +
                         std::to_string(pool.rows()) + " pool rows");
  }
  if (k > pool.rows()) {
    throw DimensionError("nearest_neighbors: k=" + std::to_string(k) + " exceeds pool size " +
                         std::to_string(pool.rows()));
  }
  const double qn = norm(query);
  if (!(qn > 0.0)) throw NumericError("zero-norm query: cosine undefined");
  const Tensor ps = normalize_rows(pool, "pool");
  std::vector<double> q(query.begin(), query.end());
  for (auto& x : q) x /= qn;
  std::vector<double> sims(pool.rows());
  for (std::size_t j = 0; j < pool.rows(); ++j) sims[j] = dot(q, ps.row(j));
  std::vector<std::size_t> order(pool.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t j = order[r];
    out.push_back({j, texts.empty() ? std::string() : texts[j], sims[j]});
  }
  return out;
}

CosineGap cosine_gap(const Tensor& src, const Tensor& tgt) {
  if (src.rows() != tgt.rows() || src.cols() != tgt.cols() || src.rows() < 2) {
    throw DimensionError("cosine_gap: need two aligned matrices with >= 2 rows");
  }
  const Tensor a = normalize_rows(src, "source");
  const Tensor b = normalize_rows(tgt, "target");
  const std::size_t n = a.rows();
  double gold = 0.0, other = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double c = dot(a.row(i), b.row(j));
      if (i == j) gold += c;
      else other += c;
    }
  }
  return {gold / static_cast<double>(n), other / static_cast<double>(n * (n - 1))};
}

std::vector<double> document_embedding(const Tensor& sentences) {
  if (sentences.empty()) throw DimensionError("document_embedding: document has no sentences");
  std::vector<double> mean(sentences.cols(), 0.0);
  for (std::size_t r = 0; r < sentences.rows(); ++r)
    for (std::size_t c = 0; c < sentences.cols(); ++c) mean[c] += sentences(r, c);
  for (auto& x : mean) x /= static_cast<double>(sentences.rows());
  return mean;
}

namespace {

Tensor stack_documents(std::span<const EmbeddedDoc> docs) {
  const std::size_t d = docs.front().sentences.cols();
  Tensor out = Tensor::matrix(docs.size(), d);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].sentences.cols() != d) {
      throw DimensionError("cldc: document " + std::to_string(i) + " has embedding dim " +
                           std::to_string(docs[i].sentences.cols()) + ", expected " +
                           std::to_string(d));
    }
    auto mean = document_embedding(docs[i].sentences);
    std::copy(mean.begin(), mean.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

CLDCReport cldc_train_eval(std::span<const EmbeddedDoc> train, std::span<const EmbeddedDoc> test,
                           const CldcConfig& config, std::string train_lang,
                           std::string test_lang) {
  if (train.empty() || test.empty()) throw ValidationError("cldc: empty train or test set");
  std::vector<std::size_t> class_count(kNumDocClasses, 0);
  for (const auto& d : train) {
    if (d.label < 0 || d.label >= kNumDocClasses) {
      throw ValidationError("cldc: label " + std::to_string(d.label) + " outside 0..3");
    }
    ++class_count[static_cast<std::size_t>(d.label)];
  }
  for (const auto& d : test) {
    if (d.label < 0 || d.label >= kNumDocClasses) {
      throw ValidationError("cldc: label " + std::to_string(d.label) + " outside 0..3");
    }
  }
  for (int c = 0; c < kNumDocClasses; ++c) {
    if (class_count[static_cast<std::size_t>(c)] == 0) {
      throw ValidationError("cldc: class " + std::to_string(c) + " absent from the training set");
    }
  }
  const Tensor x_train = stack_documents(train);
  const Tensor x_test = stack_documents(test);
  if (x_train.cols() != x_test.cols()) {
    throw DimensionError("cldc: train dim " + std::to_string(x_train.cols()) + " vs test dim " +
                         std::to_string(x_test.cols()));
  }
  const std::size_t d = x_train.cols();

  Rng rng(config.seed);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(d));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  Parameter w1("cldc.w1", Tensor::uniform(d, config.hidden, -b1, b1, rng));
  Parameter c1("cldc.b1", Tensor::matrix(1, config.hidden));
  Parameter w2("cldc.w2", Tensor::uniform(config.hidden, kNumDocClasses, -b2, b2, rng));
  Parameter c2("cldc.b2", Tensor::matrix(1, kNumDocClasses));
  AdamOptimizer opt({&w1, &c1, &w2, &c2}, config.adam);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  std::size_t cursor = 0;
  const std::size_t batch = std::min(config.batch_size, train.size());
  std::vector<double> ones(batch, 1.0);
  for (std::size_t step = 0; step < config.steps; ++step) {
    Tensor xb = Tensor::matrix(batch, d);
    std::vector<int> yb(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      if (cursor == order.size()) {
        rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      std::copy(x_train.row(i).begin(), x_train.row(i).end(), xb.row(r).begin());
      yb[r] = train[i].label;
    }
    opt.zero_grad();
    Graph g;
    Graph::Var h = g.tanh(g.add_row(g.matmul(g.constant(std::move(xb)), g.param(w1)), g.param(c1)));
    Graph::Var logits = g.add_row(g.matmul(h, g.param(w2)), g.param(c2));
    Graph::Var loss = g.softmax_cross_entropy(logits, yb, ones, static_cast<double>(batch));
    g.backward(loss);
    opt.step();
  }

  Graph g;
  Graph::Var h = g.tanh(g.add_row(g.matmul(g.constant(x_test), g.constant(w1.value)),
                                  g.constant(c1.value)));
  const Tensor& logits =
      g.value(g.add_row(g.matmul(h, g.constant(w2.value)), g.constant(c2.value)));
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == test[r].label;
  }
  CLDCReport rep;
  rep.train_lang = std::move(train_lang);
  rep.test_lang = std::move(test_lang);
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return rep;
}

CLDCReport cldc_train_eval(std::span<const Document> train, std::span<const Document> test,
                           const SentenceEmbedder& train_embedder,
                           const SentenceEmbedder& test_embedder, const CldcConfig& config,
                           std::string train_lang, std::string test_lang) {
  auto embed = [](std::span<const Document> docs, const SentenceEmbedder& f) {
    std::vector<EmbeddedDoc> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back({f(d.sentences), d.label});
    return out;
  };
  auto tr = embed(train, train_embedder);
  auto te = embed(test, test_embedder);
  return cldc_train_eval(tr, te, config, std::move(train_lang), std::move(test_lang));
}

std::vector<CurvePoint> accuracy_curve(const std::string& model, const ModelFactory& factory,
                                       const text::ParallelCorpus& corpus,
                                       const text::SplitPlan& plan,
                                       const text::ParallelCorpus& test) {
  if (plan.count() == 0) throw ValidationError("accuracy_curve: empty split plan");
  if (plan.sizes.back() > corpus.size()) {
    throw ValidationError("accuracy_curve: split size " + std::to_string(plan.sizes.back()) +
                          " exceeds corpus of " + std::to_string(corpus.size()));
  }
  if (test.size() < 2) throw ValidationError("accuracy_curve: test set needs at least 2 pairs");
  // Splits are nested prefixes, so checking the largest one covers them all.
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < plan.sizes.back(); ++i) {
    seen.insert(text::join(corpus.pairs[i].first) + "\t" + text::join(corpus.pairs[i].second));
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (seen.count(text::join(test.pairs[i].first) + "\t" + text::join(test.pairs[i].second))) {
      throw ValidationError("accuracy_curve: test pair " + std::to_string(i) +
                            " overlaps a training split");
    }
  }
  const auto test_src = test.source_side();
  const auto test_tgt = test.target_side();
  const std::string fwd = corpus.src_lang + "-" + corpus.tgt_lang;
  const std::string bwd = corpus.tgt_lang + "-" + corpus.src_lang;

  std::vector<CurvePoint> points(plan.count() * 2);
  parallel_for(plan.count(), worker_count(), [&](std::size_t si) {
    const std::size_t size = plan.sizes[si];
    AlignedEmbedder emb = factory(corpus.slice(0, size));
    Tensor s = emb.embed_src(test_src);
    Tensor t = emb.embed_tgt(test_tgt);
    points[2 * si] = {size, model, fwd, retrieval_accuracy(s, t, fwd).accuracy};
    points[2 * si + 1] = {size, model, bwd, retrieval_accuracy(t, s, bwd).accuracy};
  });
  return points;
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> points) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << "size,model,direction,accuracy\n";
  char buf[32];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f", p.accuracy);
    os << p.size << ',' << p.model << ',' << p.direction << ',' << buf << '\n';
  }
}

void write_cldc_csv(const std::filesystem::path& path, std::span<const CLDCReport> reports) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << "train_lang,test_lang,accuracy\n";
  char buf[32];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.6f", r.accuracy);
    os << r.train_lang << ',' << r.test_lang << ',' << buf << '\n';
  }
}

void write_neighbor_report(const std::filesystem::path& path,
                           std::span<const NeighborQuery> queries) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  char buf[32];
  for (const auto& q : queries) {
    os << "Query: " << q.query << '\n';
    for (const auto& block : q.blocks) {
      os << "  [" << block.lang << "]\n";
      for (std::size_t r = 0; r < block.neighbors.size(); ++r) {
        const auto& n = block.neighbors[r];
        std::snprintf(buf, sizeof buf, "%.4f", n.cosine);
        os << "    " << (r + 1) << ". (" << buf << ") " << n.text << '\n';
      }
    }
    os << '\n';
  }
}

}  // namespace xlalign::eval
