#include "xlalign/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "xlalign/rng.hpp"

namespace xlalign::objectives {

namespace {

template <typename T>
std::vector<T> gather(std::span<const T> items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx) {
  Tensor out = Tensor::matrix(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto src = m.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

// One optimizer per distinct parameter owner, so a step only moves the
// modules that actually took part in it.
std::vector<Parameter*> concat_params(std::initializer_list<std::vector<Parameter*>> groups) {
  std::vector<Parameter*> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Decoder

DecoderParams DecoderParams::init(std::string lang, std::size_t vocab_size, std::size_t embed_dim,
                                  std::size_t sentence_dim, std::size_t hidden_dim, Rng& rng) {
  if (vocab_size == 0 || embed_dim == 0 || sentence_dim == 0 || hidden_dim == 0) {
    throw DimensionError("decoder dimensions must be positive");
  }
  DecoderParams p;
  p.lang = std::move(lang);
  const std::string prefix = "dec." + p.lang;
  p.embeddings = Parameter(prefix + ".emb",
                           Tensor::normal(vocab_size, embed_dim,
                                          1.0 / std::sqrt(static_cast<double>(embed_dim)), rng));
  p.lstm = LstmParams::init(prefix + ".lstm", embed_dim + sentence_dim, hidden_dim, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  p.projection = Parameter(prefix + ".proj",
                           Tensor::uniform(hidden_dim, vocab_size, -bound, bound, rng));
  p.projection_bias = Parameter(prefix + ".proj_b", Tensor::matrix(1, vocab_size));
  return p;
}

std::vector<Parameter*> DecoderParams::parameters() {
  return {&embeddings, &lstm.weight, &lstm.bias, &projection, &projection_bias};
}

void DecoderParams::save_to(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.add(prefix + ".emb", embeddings.value);
  ckpt.add(prefix + ".lstm.W", lstm.weight.value);
  ckpt.add(prefix + ".lstm.b", lstm.bias.value);
  ckpt.add(prefix + ".proj", projection.value);
  ckpt.add(prefix + ".proj_b", projection_bias.value);
}

DecoderParams DecoderParams::load_from(const Checkpoint& ckpt, const std::string& prefix,
                                       std::string lang) {
  DecoderParams p;
  p.lang = std::move(lang);
  p.embeddings = Parameter(prefix + ".emb", ckpt.get(prefix + ".emb"));
  p.lstm.weight = Parameter(prefix + ".lstm.W", ckpt.get(prefix + ".lstm.W"));
  p.lstm.bias = Parameter(prefix + ".lstm.b", ckpt.get(prefix + ".lstm.b"));
  p.lstm.hidden_dim = p.lstm.bias.value.cols() / 4;
  p.lstm.input_dim = p.lstm.weight.value.rows() - p.lstm.hidden_dim;
  p.projection = Parameter(prefix + ".proj", ckpt.get(prefix + ".proj"));
  p.projection_bias = Parameter(prefix + ".proj_b", ckpt.get(prefix + ".proj_b"));
  if (p.projection.value.rows() != p.lstm.hidden_dim ||
      p.projection_bias.value.cols() != p.projection.value.cols() ||
      p.lstm.input_dim <= p.embeddings.value.cols()) {
    throw ValidationError("checkpoint decoder '" + prefix + "' has inconsistent shapes");
  }
  return p;
}

DecoderVars bind(Graph& g, DecoderParams& p) {
  return {g.param(p.embeddings), g.param(p.lstm.weight), g.param(p.lstm.bias),
          g.param(p.projection), g.param(p.projection_bias), p.lstm.hidden_dim};
}

Graph::Var decoder_loss(Graph& g, const DecoderVars& dec, Graph::Var sentence,
                        std::span<const IdSequence> targets, const Seq2SeqOptions& options) {
  const std::size_t B = targets.size();
  if (B == 0) throw DimensionError("decoder_loss: empty batch");
  if (g.value(sentence).rows() != B) {
    throw DimensionError("decoder_loss: " + std::to_string(B) + " targets for sentence batch " +
                         g.value(sentence).shape_str());
  }
  const std::size_t V = g.value(dec.projection).cols();
  const std::size_t extra = options.append_eos ? 1 : 0;
  std::size_t steps = 0;
  double n_tokens = 0.0;
  for (const auto& t : targets) {
    for (int id : t) {
      if (id < 0 || static_cast<std::size_t>(id) >= V) {
        throw DimensionError("vocabulary mismatch: target id " + std::to_string(id) +
                             " but decoder vocabulary has " + std::to_string(V) + " entries");
      }
    }
    steps = std::max(steps, t.size() + extra);
    n_tokens += static_cast<double>(t.size() + extra);
  }
  if (steps == 0) throw DimensionError("decoder_loss: all targets are empty");

  const std::size_t H = dec.hidden_dim;
  Graph::Var h = g.constant(Tensor::matrix(B, H));
  Graph::Var c = g.constant(Tensor::matrix(B, H));
  Graph::Var total{};
  bool have_total = false;
  std::vector<int> prev(B, text::kBos), gold(B);
  std::vector<double> weight(B);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& seq = targets[b];
      if (t < seq.size()) {
        gold[b] = seq[t];
        weight[b] = 1.0;
      } else if (t == seq.size() && options.append_eos) {
        gold[b] = text::kEos;
        weight[b] = 1.0;
      } else {
        gold[b] = text::kPad;
        weight[b] = 0.0;
      }
      if (static_cast<std::size_t>(gold[b]) >= V) {
        throw DimensionError("vocabulary mismatch: decoder vocabulary of " + std::to_string(V) +
                             " cannot emit reserved id " + std::to_string(gold[b]));
      }
    }
    for (int id : prev) {
      if (static_cast<std::size_t>(id) >= g.value(dec.embeddings).rows()) {
        throw DimensionError("vocabulary mismatch: decoder embedding table too small for id " +
                             std::to_string(id));
      }
    }
    Graph::Var x = g.concat_cols({g.gather_rows(dec.embeddings, prev), sentence});
    LstmVars next = lstm_step(g, x, h, c, dec.weight, dec.bias, H);
    h = next.h;
    c = next.c;
    Graph::Var logits = g.add_row(g.matmul(h, dec.projection), dec.projection_bias);
    Graph::Var ce = g.softmax_cross_entropy(logits, gold, weight, n_tokens);
    total = have_total ? g.add(total, ce) : ce;
    have_total = true;
    for (std::size_t b = 0; b < B; ++b) prev[b] = weight[b] != 0.0 ? gold[b] : text::kPad;
  }
  return total;
}

Graph::Var seq2seq_loss(Graph& g, const EncoderVars& enc, const DecoderVars& dec,
                        std::span<const IdSequence> inputs, std::span<const IdSequence> targets,
                        const text::NoiseParams* denoise, Rng* rng, const Seq2SeqOptions& options) {
  if (inputs.size() != targets.size()) {
    throw DimensionError("seq2seq_loss: " + std::to_string(inputs.size()) + " inputs vs " +
                         std::to_string(targets.size()) + " targets");
  }
  Graph::Var sentence;
  if (denoise != nullptr) {
    if (rng == nullptr) throw std::invalid_argument("seq2seq_loss: denoising needs an rng");
    std::vector<IdSequence> noisy;
    noisy.reserve(inputs.size());
    for (const auto& s : inputs) noisy.push_back(text::corrupt<int>(s, *denoise, *rng));
    sentence = encoders::encode_batch(g, enc, noisy);
  } else {
    sentence = encoders::encode_batch(g, enc, inputs);
  }
  return decoder_loss(g, dec, sentence, targets, options);
}

double seq2seq_loss(std::span<const IdSequence> inputs, std::span<const IdSequence> targets,
                    EncoderParams& enc, DecoderParams& dec, const text::NoiseParams* denoise,
                    const Seq2SeqOptions& options) {
  Graph g;
  Rng rng(denoise ? denoise->seed : 0);
  EncoderVars ev = encoders::bind(g, enc);
  DecoderVars dv = bind(g, dec);
  return g.value(seq2seq_loss(g, ev, dv, inputs, targets, denoise, &rng, options))[0];
}

// ---------------------------------------------------------------------------
// Training plumbing

void TrainSchedule::validate() const {
  if (batch_size < 1) throw ValidationError("schedule: batch size must be >= 1");
  if (steps < 1) throw ValidationError("schedule: steps must be >= 1");
  if (!(adam.lr > 0.0)) throw ValidationError("schedule: learning rate must be positive");
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRecord> trace) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write trace " + path.string());
  os << "step,objective,language_pair,value\n";
  char buf[64];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%.10g", r.value);
    os << r.step << ',' << r.objective << ',' << r.language_pair << ',' << buf << '\n';
  }
}

BatchSampler::BatchSampler(std::size_t n, Rng rng) : order_(n), rng_(rng) {
  if (n == 0) throw ValidationError("cannot sample batches from an empty dataset");
  std::iota(order_.begin(), order_.end(), 0);
  rng_.shuffle(std::span<std::size_t>(order_));
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch_size) {
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    if (cursor_ == order_.size()) {
      rng_.shuffle(std::span<std::size_t>(order_));
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Joint SDAE / NMT

JointSeq2SeqResult train_joint_seq2seq(std::span<const Seq2SeqTask> tasks,
                                       std::span<EncoderParams* const> encoders,
                                       DecoderParams& shared_decoder,
                                       const TrainSchedule& schedule,
                                       const text::NoiseParams& noise) {
  schedule.validate();
  if (tasks.empty()) throw ValidationError("train_joint_seq2seq: no tasks");
  if (encoders.size() != tasks.size()) {
    throw ValidationError("train_joint_seq2seq: missing encoder for a scheduled language (" +
                          std::to_string(tasks.size()) + " tasks, " +
                          std::to_string(encoders.size()) + " encoders)");
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (encoders[i] == nullptr) {
      throw ValidationError("train_joint_seq2seq: missing encoder for language '" +
                            tasks[i].lang + "'");
    }
    if (tasks[i].inputs.size() != tasks[i].targets.size() || tasks[i].inputs.empty()) {
      throw ValidationError("train_joint_seq2seq: task '" + tasks[i].lang +
                            "' needs aligned, non-empty inputs and targets");
    }
    if (encoders[i]->output_dim() != shared_decoder.sentence_dim()) {
      throw DimensionError("train_joint_seq2seq: encoder '" + tasks[i].lang + "' emits " +
                           std::to_string(encoders[i]->output_dim()) +
                           " dims, decoder expects " +
                           std::to_string(shared_decoder.sentence_dim()));
    }
  }

  Rng rng(schedule.seed);
  std::vector<BatchSampler> samplers;
  for (std::size_t i = 0; i < tasks.size(); ++i) samplers.emplace_back(tasks[i].inputs.size(), rng.fork(i));
  Rng noise_rng = rng.fork(0xD0A5E);

  // Encoders shared between tasks keep a single optimizer.
  std::unordered_map<EncoderParams*, std::size_t> enc_slot;
  std::vector<AdamOptimizer> enc_opts;
  for (EncoderParams* e : encoders) {
    if (enc_slot.emplace(e, enc_opts.size()).second) enc_opts.emplace_back(e->parameters(), schedule.adam);
  }
  AdamOptimizer dec_opt(shared_decoder.parameters(), schedule.adam);

  JointSeq2SeqResult result;
  result.decoder = &shared_decoder;
  for (std::size_t step = 0; step < schedule.steps; ++step) {
    const std::size_t ti = step % tasks.size();
    const Seq2SeqTask& task = tasks[ti];
    EncoderParams& enc = *encoders[ti];
    AdamOptimizer& enc_opt = enc_opts[enc_slot.at(&enc)];

    auto idx = samplers[ti].next(schedule.batch_size);
    auto inputs = gather(std::span<const IdSequence>(task.inputs), idx);
    auto targets = gather(std::span<const IdSequence>(task.targets), idx);

    enc_opt.zero_grad();
    dec_opt.zero_grad();
    Graph g;
    EncoderVars ev = encoders::bind(g, enc);
    DecoderVars dv = bind(g, shared_decoder);
    Graph::Var loss = seq2seq_loss(g, ev, dv, inputs, targets, task.denoise ? &noise : nullptr,
                                   &noise_rng);
    const double value = g.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite seq2seq loss at step " + std::to_string(step) +
                         " (language '" + task.lang + "')");
    }
    g.backward(loss);
    auto used = concat_params({enc.parameters(), shared_decoder.parameters()});
    clip_global_norm(used, schedule.clip_norm);
    enc_opt.step();
    dec_opt.step();
    ++result.decoder_updates;

    result.encoder_usage.push_back(enc.lang);
    result.trace.push_back({step, task.denoise ? "sdae" : "nmt", task.lang + "-" + shared_decoder.lang,
                            value});
  }
  return result;
}

// ---------------------------------------------------------------------------
// InferSent

ClassifierHead ClassifierHead::init(std::size_t sentence_dim, std::size_t hidden_dim, Rng& rng) {
  ClassifierHead h;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(4 * sentence_dim));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  h.w1 = Parameter("head.w1", Tensor::uniform(4 * sentence_dim, hidden_dim, -b1, b1, rng));
  h.b1 = Parameter("head.b1", Tensor::matrix(1, hidden_dim));
  h.w2 = Parameter("head.w2", Tensor::uniform(hidden_dim, kNumNliLabels, -b2, b2, rng));
  h.b2 = Parameter("head.b2", Tensor::matrix(1, kNumNliLabels));
  return h;
}

void ClassifierHead::save_to(Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.add(prefix + ".w1", w1.value);
  ckpt.add(prefix + ".b1", b1.value);
  ckpt.add(prefix + ".w2", w2.value);
  ckpt.add(prefix + ".b2", b2.value);
}

Graph::Var infersent_features(Graph& g, Graph::Var u, Graph::Var v) {
  if (g.value(u).cols() != g.value(v).cols() || g.value(u).rows() != g.value(v).rows()) {
    throw DimensionError("infersent: premise " + g.value(u).shape_str() + " vs hypothesis " +
                         g.value(v).shape_str());
  }
  return g.concat_cols({u, v, g.abs(g.sub(u, v)), g.mul(u, v)});
}

namespace {

Graph::Var head_logits(Graph& g, Graph::Var features, Graph::Var w1, Graph::Var b1, Graph::Var w2,
                       Graph::Var b2) {
  Graph::Var hidden = g.tanh(g.add_row(g.matmul(features, w1), b1));
  return g.add_row(g.matmul(hidden, w2), b2);
}

}  // namespace

Graph::Var infersent_logits(Graph& g, ClassifierHead& head, Graph::Var u, Graph::Var v) {
  Graph::Var f = infersent_features(g, u, v);
  if (g.value(f).cols() != head.w1.value.rows()) {
    throw DimensionError("infersent: feature width " + std::to_string(g.value(f).cols()) +
                         " vs head input " + std::to_string(head.w1.value.rows()));
  }
  return head_logits(g, f, g.param(head.w1), g.param(head.b1), g.param(head.w2), g.param(head.b2));
}

std::array<double, 3> infersent_classify(const SentenceEmbedding& u, const SentenceEmbedding& v,
                                         const ClassifierHead& head) {
  if (u.dim() != v.dim() || 4 * u.dim() != head.w1.value.rows()) {
    throw DimensionError("infersent_classify: dims u=" + std::to_string(u.dim()) + " v=" +
                         std::to_string(v.dim()) + " head expects " +
                         std::to_string(head.sentence_dim()));
  }
  Graph g;
  Graph::Var uv = g.constant(Tensor::vector(u.values));
  Graph::Var vv = g.constant(Tensor::vector(v.values));
  Graph::Var logits = head_logits(g, infersent_features(g, uv, vv), g.constant(head.w1.value),
                                  g.constant(head.b1.value), g.constant(head.w2.value),
                                  g.constant(head.b2.value));
  const Tensor& l = g.value(logits);
  std::array<double, 3> p{};
  for (std::size_t k = 0; k < 3; ++k) p[k] = softmax_at(l.data(), k);
  return p;
}

LanguagePairSampler::LanguagePairSampler(std::size_t languages, Rng rng)
    : languages_(languages), rng_(rng) {
  if (languages == 0) throw ValidationError("language sampler needs at least one language");
}

std::pair<std::size_t, std::size_t> LanguagePairSampler::next() {
  std::size_t p = rng_.below(languages_);
  std::size_t h = rng_.below(languages_);
  return {p, h};
}

JointInferSentResult train_joint_infersent(std::span<const NliDataset> datasets,
                                           std::span<EncoderParams* const> encoders,
                                           ClassifierHead& head, const TrainSchedule& schedule) {
  schedule.validate();
  if (datasets.empty()) throw ValidationError("train_joint_infersent: no datasets");
  if (encoders.size() != datasets.size()) {
    throw ValidationError("train_joint_infersent: one encoder per language required");
  }
  const std::size_t n = datasets[0].size();
  for (const auto& d : datasets) {
    if (d.size() != n || d.premises.size() != n || d.hypotheses.size() != n || n == 0) {
      throw ValidationError("train_joint_infersent: datasets must be non-empty and index-aligned");
    }
    for (int label : d.labels) {
      if (label < 0 || label >= kNumNliLabels) {
        throw ValidationError("train_joint_infersent: label " + std::to_string(label) +
                              " outside {0,1,2}");
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& d : datasets) {
      if (d.labels[i] != datasets[0].labels[i]) {
        throw ValidationError("train_joint_infersent: label semantics differ at example " +
                              std::to_string(i));
      }
    }
  }

  Rng rng(schedule.seed);
  BatchSampler sampler(n, rng.fork(1));
  LanguagePairSampler languages(datasets.size(), rng.fork(2));
  std::unordered_map<EncoderParams*, std::size_t> slot;
  std::vector<AdamOptimizer> enc_opts;
  for (EncoderParams* e : encoders) {
    if (slot.emplace(e, enc_opts.size()).second) enc_opts.emplace_back(e->parameters(), schedule.adam);
  }
  AdamOptimizer head_opt(head.parameters(), schedule.adam);

  JointInferSentResult result;
  result.head = &head;
  std::vector<double> ones(schedule.batch_size, 1.0);
  for (std::size_t step = 0; step < schedule.steps; ++step) {
    auto [pl, hl] = languages.next();
    result.language_pairs.emplace_back(pl, hl);
    auto idx = sampler.next(schedule.batch_size);
    const NliDataset& pd = datasets[pl];
    const NliDataset& hd = datasets[hl];
    auto prem = gather(std::span<const IdSequence>(pd.premises), idx);
    auto hyp = gather(std::span<const IdSequence>(hd.hypotheses), idx);
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(pd.labels[i]);

    for (auto& o : enc_opts) o.zero_grad();
    head_opt.zero_grad();
    Graph g;
    EncoderParams& penc = *encoders[pl];
    EncoderParams& henc = *encoders[hl];
    Graph::Var u = encoders::encode_batch(g, encoders::bind(g, penc), prem);
    Graph::Var v = encoders::encode_batch(g, encoders::bind(g, henc), hyp);
    Graph::Var logits = infersent_logits(g, head, u, v);
    Graph::Var loss = g.softmax_cross_entropy(logits, labels, ones,
                                              static_cast<double>(labels.size()));
    if (!std::isfinite(g.value(loss)[0])) {
      throw NumericError("non-finite infersent loss at step " + std::to_string(step));
    }
    g.backward(loss);

    std::vector<Parameter*> used = head.parameters();
    for (Parameter* p : penc.parameters()) used.push_back(p);
    if (&henc != &penc)
      for (Parameter* p : henc.parameters()) used.push_back(p);
    clip_global_norm(used, schedule.clip_norm);
    enc_opts[slot.at(&penc)].step();
    if (&henc != &penc) enc_opts[slot.at(&henc)].step();
    head_opt.step();

    const Tensor& lv = g.value(logits);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      auto row = lv.row(r);
      auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      correct += best == labels[r];
    }
    const std::string pair = pd.lang + "-" + hd.lang;
    result.trace.push_back({step, "infersent_loss", pair, g.value(loss)[0]});
    result.trace.push_back({step, "infersent_acc", pair,
                            static_cast<double>(correct) / static_cast<double>(labels.size())});
  }
  return result;
}

double infersent_accuracy(const NliDataset& premises, const NliDataset& hypotheses,
                          const EncoderParams& premise_enc, const EncoderParams& hypothesis_enc,
                          const ClassifierHead& head) {
  if (premises.size() != hypotheses.size() || premises.size() == 0) {
    throw ValidationError("infersent_accuracy: datasets must be aligned and non-empty");
  }
  Tensor u = encoders::encode_bilstm_maxpool(premises.premises, premise_enc);
  Tensor v = encoders::encode_bilstm_maxpool(hypotheses.hypotheses, hypothesis_enc);
  Graph g;
  Graph::Var logits =
      head_logits(g, infersent_features(g, g.constant(u), g.constant(v)), g.constant(head.w1.value),
                  g.constant(head.b1.value), g.constant(head.w2.value), g.constant(head.b2.value));
  const Tensor& lv = g.value(logits);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    auto row = lv.row(r);
    auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += best == premises.labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(lv.rows());
}

// ---------------------------------------------------------------------------
// Representation transfer

Graph::Var l1_loss(Graph& g, Graph::Var a, Graph::Var b) {
  const double rows = static_cast<double>(g.value(a).rows());
  return g.scale(g.sum(g.abs(g.sub(a, b))), 1.0 / rows);
}

namespace {

double mean_l1(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.rows());
}

}  // namespace

TransferResult train_transfer(std::span<const IdSequence> sources,
                              std::span<const IdSequence> targets, const EncoderParams& pivot,
                              EncoderParams& fresh_encoder, const TrainSchedule& schedule) {
  schedule.validate();
  if (sources.size() != targets.size() || sources.empty()) {
    throw ValidationError("train_transfer: parallel sides must be aligned and non-empty");
  }
  if (pivot.output_dim() != fresh_encoder.output_dim()) {
    throw DimensionError("train_transfer: pivot emits " + std::to_string(pivot.output_dim()) +
                         " dims, new encoder emits " + std::to_string(fresh_encoder.output_dim()));
  }
  if (&pivot == &fresh_encoder) {
    throw ValidationError("train_transfer: the pivot cannot also be the trained encoder");
  }
  const Tensor pivot_targets = encoders::encode_bilstm_maxpool(targets, pivot);

  TransferResult result;
  result.initial_loss = mean_l1(encoders::encode_bilstm_maxpool(sources, fresh_encoder), pivot_targets);

  Rng rng(schedule.seed);
  BatchSampler sampler(sources.size(), rng.fork(1));
  AdamOptimizer opt(fresh_encoder.parameters(), schedule.adam);
  const std::string pair = fresh_encoder.lang + "-" + pivot.lang;
  for (std::size_t step = 0; step < schedule.steps; ++step) {
    auto idx = sampler.next(schedule.batch_size);
    auto batch = gather(sources, idx);
    opt.zero_grad();
    Graph g;
    Graph::Var out = encoders::encode_batch(g, encoders::bind(g, fresh_encoder), batch);
    Graph::Var loss = l1_loss(g, out, g.constant(gather_rows(pivot_targets, idx)));
    const double value = g.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite transfer loss at step " + std::to_string(step));
    }
    g.backward(loss);
    opt.clip_grad_norm(schedule.clip_norm);
    opt.step();
    result.trace.push_back({step, "transfer_l1", pair, value});
  }
  result.final_loss = mean_l1(encoders::encode_bilstm_maxpool(sources, fresh_encoder), pivot_targets);
  return result;
}

}  // namespace xlalign::objectives
