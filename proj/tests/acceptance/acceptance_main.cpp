// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [criterion ids...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/gradcheck.hpp"
#include "support/reference.hpp"
#include "support/tempdir.hpp"
#include "support/toy_losses.hpp"
#include "xlalign/checkpoint.hpp"
#include "xlalign/cipher.hpp"
#include "xlalign/config.hpp"
#include "xlalign/encoders.hpp"
#include "xlalign/eval.hpp"
#include "xlalign/experiment.hpp"
#include "xlalign/mapping.hpp"
#include "xlalign/objectives.hpp"

using namespace xlalign;
using encoders::EncoderParams;
using text::IdSequence;
using text::TokenSequence;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string serialize(const EncoderParams& p) {
  Checkpoint c;
  p.save_to(c, "p");
  std::ostringstream os;
  write_checkpoint(os, c);
  return os.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Upper tail of the chi-square distribution with 3 degrees of freedom.
double chi_square_3_sf(double x) {
  return std::erfc(std::sqrt(x / 2.0)) + std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0);
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  Outcome o;
  testing::ToyModels models(2024);
  for (auto& loss : models.losses()) {
    auto r = testing::check_gradients(loss.params, loss.build);
    o.require(r.max_rel_error < 1e-4 && r.checked > 0,
              loss.name + " max rel err " + fmt("%.2e", r.max_rel_error) + " over " +
                  std::to_string(r.checked) + " entries");
  }
  return o;
}

Outcome procrustes() {
  Outcome o;
  Rng rng(16);
  const std::size_t d = 16, n = 64;
  Tensor r = cipher::random_orthogonal(d, rng);
  Tensor x = Tensor::normal(n, d, 1.0, rng);
  Tensor y = matmul(x, r);
  auto m = mapping::fit_orthogonal_map(x, y);
  const double err = max_abs_diff(m.w, r);
  const double orth = mapping::orthogonality_error(m.w);
  const double acc = eval::retrieval_accuracy(mapping::apply_map(x, m), y).accuracy;
  o.require(err < 1e-6, "max |W-R| " + fmt("%.2e", err));
  o.require(orth < 1e-6, "max |W'W-I| " + fmt("%.2e", orth));
  o.require(acc == 1.0, "mapped retrieval " + fmt("%.3f", acc));
  return o;
}

Outcome retrieval_oracle() {
  Outcome o;
  Rng rng(3);
  std::size_t mismatches = 0, nn_mismatches = 0, largest = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = inst == 0 ? 1000 : 2 + rng.below(999);
    const std::size_t d = 2 + rng.below(15);
    largest = std::max(largest, n);
    Tensor s = Tensor::normal(n, d, 1.0, rng);
    Tensor t = s + Tensor::normal(n, d, 0.5 + 2.0 * rng.uniform(), rng);
    // Duplicate target rows on every fourth instance so ties get exercised.
    if (inst % 4 == 1) {
      for (std::size_t k = 0; k < n / 10; ++k) {
        const std::size_t a = rng.below(n), b = rng.below(n);
        for (std::size_t c = 0; c < d; ++c) t(b, c) = t(a, c);
      }
    }
    if (eval::retrieval_accuracy(s, t).correct != testing::ref_retrieval_correct(s, t)) ++mismatches;

    std::vector<std::string> texts(n);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 20));
    const std::size_t qi = rng.below(n);
    auto got = eval::nearest_neighbors(s.row(qi), t, texts, k);
    std::vector<double> cos(n);
    for (std::size_t j = 0; j < n; ++j) cos[j] = testing::ref_cosine(s.row(qi), t.row(j));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cos[a] > cos[b]; });
    bool same = got.size() == k;
    for (std::size_t r = 0; same && r < k; ++r) same = got[r].index == order[r];
    if (!same) ++nn_mismatches;
  }
  o.require(mismatches == 0, "retrieval mismatches " + std::to_string(mismatches) + "/100");
  o.require(nn_mismatches == 0, "neighbour mismatches " + std::to_string(nn_mismatches) + "/100");
  o.detail += "; largest n " + std::to_string(largest);
  return o;
}

Outcome isometry() {
  Outcome o;
  Rng rng(4);
  std::size_t acc_changes = 0, rank_changes = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 20 + rng.below(200), d = 2 + rng.below(14);
    Tensor s = Tensor::normal(n, d, 1.0, rng);
    Tensor t = s + Tensor::normal(n, d, 1.0, rng);
    auto m = mapping::fit_orthogonal_map(Tensor::normal(n, d, 1.0, rng), Tensor::normal(n, d, 1.0, rng));
    const auto base = eval::retrieval_accuracy(s, t, "s-t", true);
    const auto mapped = eval::retrieval_accuracy(mapping::apply_map(s, m), mapping::apply_map(t, m));
    if (mapped.accuracy != base.accuracy) ++acc_changes;

    Tensor& side = inst % 2 ? s : t;
    const std::size_t row = rng.below(n);
    const double scale = std::exp(8.0 * rng.uniform() - 4.0);
    for (std::size_t c = 0; c < d; ++c) side(row, c) *= scale;
    if (eval::retrieval_accuracy(s, t, "s-t", true).ranks != base.ranks) ++rank_changes;
  }
  o.require(acc_changes == 0, "accuracy changed under a map in " + std::to_string(acc_changes) + "/50");
  o.require(rank_changes == 0, "ranks changed under rescaling in " + std::to_string(rank_changes) + "/50");
  return o;
}

// Shared cipher benchmark for criteria 5-7: 2000 training pairs, 200 held out.
struct CipherBench {
  static constexpr std::size_t kTrain = 2000, kTest = 200, kSmall = 200;
  static constexpr std::size_t kDim = 32;
  static constexpr double kLr = 3e-3;

  cipher::CipherCorpus cc;
  text::Vocabulary va, vb;
  std::vector<IdSequence> train_a, train_b, test_a, test_b;
  std::optional<EncoderParams> pivot;

  struct Score {
    double b_a = 0.0, a_b = 0.0;
    eval::CosineGap gap;
  };
  std::optional<Score> transfer_full, transfer_small, joint_full, joint_small;
  bool pivot_untouched = true;

  CipherBench() {
    cipher::CipherSpec spec;
    spec.n_sentences = kTrain + kTest;
    spec.seed = 1;
    cc = cipher::gen_cipher_corpus(spec);
    auto train = cc.corpus.slice(0, kTrain), test = cc.corpus.slice(kTrain, kTrain + kTest);
    auto sa = train.source_side(), sb = train.target_side();
    va = text::build_vocab(std::span<const TokenSequence>(sa), 1);
    vb = text::build_vocab(std::span<const TokenSequence>(sb), 1);
    train_a = encoders::encode_all(va, sa);
    train_b = encoders::encode_all(vb, sb);
    auto ta = test.source_side(), tb = test.target_side();
    test_a = encoders::encode_all(va, ta);
    test_b = encoders::encode_all(vb, tb);
  }

  objectives::TrainSchedule schedule(std::size_t steps, std::uint64_t seed) const {
    objectives::TrainSchedule s;
    s.steps = steps;
    s.adam.lr = kLr;
    s.seed = seed;
    return s;
  }

  Score score(const EncoderParams& ea, const EncoderParams& eb) const {
    Tensor a = encoders::encode_bilstm_maxpool(test_a, ea);
    Tensor b = encoders::encode_bilstm_maxpool(test_b, eb);
    return {eval::retrieval_accuracy(b, a).accuracy, eval::retrieval_accuracy(a, b).accuracy,
            eval::cosine_gap(b, a)};
  }

  // Pivot encoder pre-trained as a denoising autoencoder on language A.
  const EncoderParams& pretrained_pivot() {
    if (!pivot) {
      Rng rng(11);
      EncoderParams enc = EncoderParams::init("a", va.size(), kDim, kDim, rng);
      auto dec = objectives::DecoderParams::init("a", va.size(), kDim, 2 * kDim, 2 * kDim, rng);
      std::vector<objectives::Seq2SeqTask> tasks{{"a", train_a, train_a, true}};
      std::vector<EncoderParams*> encs{&enc};
      objectives::train_joint_seq2seq(tasks, encs, dec, schedule(2000, 12), text::NoiseParams{});
      pivot = std::move(enc);
    }
    return *pivot;
  }

  Score transfer(std::size_t pairs) {
    const EncoderParams& p = pretrained_pivot();
    const std::string before = serialize(p);
    Rng rng(21);
    EncoderParams fresh = EncoderParams::init("b", vb.size(), kDim, kDim, rng);
    std::span<const IdSequence> src(train_b.data(), pairs), tgt(train_a.data(), pairs);
    objectives::train_transfer(src, tgt, p, fresh, schedule(2000, 22));
    pivot_untouched = pivot_untouched && serialize(p) == before;
    return score(p, fresh);
  }

  // Pivot reconstruction on all monolingual A data, B->A translation on the split.
  Score joint(std::size_t pairs) {
    Rng rng(31);
    EncoderParams ea = EncoderParams::init("a", va.size(), kDim, kDim, rng);
    EncoderParams eb = EncoderParams::init("b", vb.size(), kDim, kDim, rng);
    auto dec = objectives::DecoderParams::init("a", va.size(), kDim, 2 * kDim, 2 * kDim, rng);
    std::vector<IdSequence> src(train_b.begin(), train_b.begin() + pairs);
    std::vector<IdSequence> tgt(train_a.begin(), train_a.begin() + pairs);
    std::vector<objectives::Seq2SeqTask> tasks{{"a", train_a, train_a, true}, {"b", src, tgt, false}};
    std::vector<EncoderParams*> encs{&ea, &eb};
    objectives::train_joint_seq2seq(tasks, encs, dec, schedule(4000, 32), text::NoiseParams{});
    return score(ea, eb);
  }

  const Score& cached(std::optional<Score>& slot, bool is_joint, std::size_t pairs) {
    if (!slot) slot = is_joint ? joint(pairs) : transfer(pairs);
    return *slot;
  }
};

CipherBench& bench() {
  static CipherBench b;
  return b;
}

std::string both(const CipherBench::Score& s) {
  return "b->a " + fmt("%.3f", s.b_a) + ", a->b " + fmt("%.3f", s.a_b);
}

Outcome transfer_end_to_end() {
  Outcome o;
  auto& b = bench();
  const auto& s = b.cached(b.transfer_full, false, CipherBench::kTrain);
  o.require(s.b_a >= 0.9 && s.a_b >= 0.9, "held-out retrieval " + both(s));
  o.require(b.pivot_untouched, "pivot bit-identical");
  return o;
}

Outcome joint_end_to_end() {
  Outcome o;
  auto& b = bench();
  const auto& s = b.cached(b.joint_full, true, CipherBench::kTrain);
  o.require(s.b_a >= 0.8 && s.a_b >= 0.8, "held-out retrieval " + both(s));
  const double gap = s.gap.gold - s.gap.mismatched;
  o.require(gap >= 0.2, "cosine gold " + fmt("%.3f", s.gap.gold) + " vs mismatched " +
                           fmt("%.3f", s.gap.mismatched) + " (gap " + fmt("%.3f", gap) + ")");
  return o;
}

Outcome data_efficiency() {
  Outcome o;
  auto& b = bench();
  const auto& t = b.cached(b.transfer_small, false, CipherBench::kSmall);
  const auto& j = b.cached(b.joint_small, true, CipherBench::kSmall);
  o.require(t.b_a >= j.b_a && t.a_b >= j.a_b,
            "at " + std::to_string(CipherBench::kSmall) + " pairs transfer " + both(t) + " vs joint " + both(j));
  const auto& tf = b.cached(b.transfer_full, false, CipherBench::kTrain);
  const auto& jf = b.cached(b.joint_full, true, CipherBench::kTrain);
  const bool overtakes = jf.b_a + jf.a_b > tf.b_a + tf.a_b;
  o.detail += "; at " + std::to_string(CipherBench::kTrain) + " pairs joint " +
              (overtakes ? "overtakes" : "does not overtake") + " transfer (" + both(jf) + " vs " + both(tf) +
              ")";
  return o;
}

Outcome sentence_mapping() {
  Outcome o;
  cipher::CipherSpec spec;
  spec.n_sentences = 2200;
  auto cc = cipher::gen_cipher_corpus(spec);
  auto wv = cipher::gen_word_vectors(cc, 32, 0.05, 101);
  auto train = cc.corpus.slice(0, 2000), test = cc.corpus.slice(2000, 2200);
  auto sa = train.source_side(), sb = train.target_side();
  auto va = text::build_vocab(std::span<const TokenSequence>(sa), 1);
  auto vb = text::build_vocab(std::span<const TokenSequence>(sb), 1);
  Tensor table_a = encoders::table_from_vectors(wv.a, va), table_b = encoders::table_from_vectors(wv.b, vb);
  auto embed = [](const text::Vocabulary& v, const Tensor& table, std::span<const TokenSequence> s) {
    return encoders::encode_sif(encoders::encode_all(v, s), table, v, 1e-3);
  };
  auto ta = test.source_side(), tb = test.target_side();
  Tensor xb = embed(vb, table_b, sb), xa = embed(va, table_a, sa);
  Tensor test_b = embed(vb, table_b, tb), test_a = embed(va, table_a, ta);
  auto m = mapping::fit_orthogonal_map(xb, xa);
  const double mapped = eval::retrieval_accuracy(mapping::apply_map(test_b, m), test_a).accuracy;
  const double raw = eval::retrieval_accuracy(test_b, test_a).accuracy;
  o.require(mapped >= 0.7, "mapped " + fmt("%.3f", mapped));
  o.require(raw <= 0.1, "unmapped " + fmt("%.3f", raw));
  return o;
}

Outcome joint_infersent() {
  Outcome o;
  const std::uint64_t seed = 41;

  // The sampler as seeded inside training (fork advances the parent), drawn
  // once per batch.
  Rng parent(seed);
  parent.fork(1);
  objectives::LanguagePairSampler sampler(2, parent.fork(2));
  double counts[4] = {};
  std::vector<std::pair<std::size_t, std::size_t>> first;
  for (int i = 0; i < 10000; ++i) {
    auto p = sampler.next();
    if (first.size() < 1000) first.push_back(p);
    counts[2 * p.first + p.second] += 1.0;
  }
  double chi = 0.0;
  for (double c : counts) chi += (c - 2500.0) * (c - 2500.0) / 2500.0;
  const double p = chi_square_3_sf(chi);
  o.require(p > 0.01, "chi-square " + fmt("%.3f", chi) + " p=" + fmt("%.3f", p));

  cipher::CipherSpec spec;
  spec.n_sentences = 200;
  auto cc = cipher::gen_cipher_corpus(spec);
  auto nli = cipher::gen_nli_toy_set(cc, 600, 3, 6, 202);
  auto vocab_of = [](const std::vector<TokenSequence>& prem, const std::vector<TokenSequence>& hyp) {
    auto all = prem;
    all.insert(all.end(), hyp.begin(), hyp.end());
    return text::build_vocab(std::span<const TokenSequence>(all), 1);
  };
  auto va = vocab_of(nli.premises_a, nli.hypotheses_a), vb = vocab_of(nli.premises_b, nli.hypotheses_b);
  std::vector<objectives::NliDataset> data{
      {"a", encoders::encode_all(va, nli.premises_a), encoders::encode_all(va, nli.hypotheses_a), nli.labels},
      {"b", encoders::encode_all(vb, nli.premises_b), encoders::encode_all(vb, nli.hypotheses_b), nli.labels}};
  Rng rng(3);
  auto ea = EncoderParams::init("a", va.size(), 32, 32, rng);
  auto eb = EncoderParams::init("b", vb.size(), 32, 32, rng);
  auto head = objectives::ClassifierHead::init(64, 128, rng);
  objectives::TrainSchedule sched;
  sched.steps = 1000;
  sched.adam.lr = 3e-3;
  sched.seed = seed;
  std::vector<EncoderParams*> encs{&ea, &eb};
  auto r = objectives::train_joint_infersent(data, encs, head, sched);
  o.require(r.head == &head, "single shared head");
  o.require(r.language_pairs == first, "training batches follow the tested sampler");

  double worst = 1.0;
  std::string per;
  for (std::size_t pi = 0; pi < 2; ++pi) {
    for (std::size_t hi = 0; hi < 2; ++hi) {
      const double acc = objectives::infersent_accuracy(data[pi], data[hi], *encs[pi], *encs[hi], head);
      worst = std::min(worst, acc);
      per += (per.empty() ? "" : " ") + data[pi].lang + data[hi].lang + "=" + fmt("%.3f", acc);
    }
  }
  o.require(worst > 0.9, "training accuracy " + per + " (chance 0.333)");
  return o;
}

std::vector<eval::EmbeddedDoc> clustered_docs(std::size_t n, std::size_t d, Rng& rng) {
  Tensor centers = Tensor::normal(eval::kNumDocClasses, d, 3.0, rng);
  std::vector<eval::EmbeddedDoc> docs;
  for (std::size_t i = 0; i < n; ++i) {
    eval::EmbeddedDoc doc;
    doc.label = static_cast<int>(i % eval::kNumDocClasses);
    doc.sentences = Tensor::normal(3, d, 0.5, rng);
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t k = 0; k < d; ++k) doc.sentences(s, k) += centers(doc.label, k);
    docs.push_back(std::move(doc));
  }
  return docs;
}

Outcome cldc() {
  Outcome o;
  Rng rng(10);
  const std::size_t d = 16;
  auto docs = clustered_docs(800, d, rng);
  std::span<const eval::EmbeddedDoc> all(docs);
  eval::CldcConfig cfg;
  const auto mono = eval::cldc_train_eval(all.subspan(0, 400), all.subspan(400), cfg);
  o.require(mono.accuracy >= 0.95, "separable " + fmt("%.3f", mono.accuracy));

  double lo = 1.0, hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng srng(100 + seed);
    auto shuffled = docs;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
      std::swap(shuffled[i].label, shuffled[srng.below(i + 1)].label);
    std::span<const eval::EmbeddedDoc> s(shuffled);
    cfg.seed = seed;
    const double acc = eval::cldc_train_eval(s.subspan(0, 400), s.subspan(400), cfg).accuracy;
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  cfg.seed = 1;
  o.require(lo >= 0.15 && hi <= 0.35, "shuffled in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) + "]");

  Tensor r = cipher::random_orthogonal(d, rng);
  Tensor anchors = Tensor::normal(64, d, 1.0, rng);
  auto m = mapping::fit_orthogonal_map(matmul(anchors, r), anchors);
  std::vector<eval::EmbeddedDoc> foreign(docs.begin() + 400, docs.end());
  for (auto& doc : foreign) doc.sentences = mapping::apply_map(matmul(doc.sentences, r), m);
  const auto cross = eval::cldc_train_eval(all.subspan(0, 400), foreign, cfg);
  o.require(std::abs(cross.accuracy - mono.accuracy) <= 0.02,
            "rotated " + fmt("%.3f", cross.accuracy) + " vs mono " + fmt("%.3f", mono.accuracy));
  return o;
}

Outcome determinism() {
  Outcome o;
  testing::TempDir dir("accept-det");
  cipher::GenerateOptions gen;
  gen.spec.n_sentences = 400;
  gen.test_size = 60;
  gen.nli_examples = 90;
  gen.docs = 80;
  gen.embed_dim = 8;
  cipher::write_cipher_dataset(dir / "data", gen);

  for (const char* framework : {"transfer", "joint_seq2seq", "joint_infersent", "sentence_map"}) {
    ExperimentConfig cfg;
    cfg.base_dir = dir.path();
    cfg.data_dir = "data";
    cfg.set("framework", framework);
    cfg.embed_dim = cfg.hidden_dim = cfg.decoder_hidden = 8;
    cfg.head_hidden = 16;
    cfg.steps = cfg.pretrain_steps = 40;
    cfg.cldc_steps = 40;
    cfg.splits = {50, 200};
    cfg.test_size = 60;
    std::vector<std::string> outputs[2];
    for (int run = 0; run < 2; ++run) {
      cfg.out_dir = (dir / (std::string(framework) + std::to_string(run))).string();
      run_experiment(cfg, Stage::Full);
      for (const char* f : {"curve.csv", "cldc.csv", "trace.csv"}) outputs[run].push_back(slurp(std::filesystem::path(cfg.out_dir) / f));
    }
    const bool same = outputs[0] == outputs[1] && !outputs[0][0].empty();
    o.require(same, std::string(framework) + (same ? " identical" : " differs"));
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 30, gradients},
      {2, "procrustes recovery", 5, procrustes},
      {3, "retrieval oracle equivalence", 60, retrieval_oracle},
      {4, "cosine isometry", 60, isometry},
      {5, "transfer end-to-end", 600, transfer_end_to_end},
      {6, "joint sdae/nmt end-to-end", 900, joint_end_to_end},
      {7, "data-efficiency ordering", 900, data_efficiency},
      {8, "sentence mapping beats no alignment", 120, sentence_mapping},
      {9, "joint infersent mechanics", 300, joint_infersent},
      {10, "cldc harness", 120, cldc},
      {11, "determinism", 300, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) o.require(false, "runtime " + fmt("%.1f", secs) + "s over " + fmt("%.0f", c.budget_s) + "s");
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
