#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlalign/adam.hpp"
#include "xlalign/encoders.hpp"
#include "xlalign/text.hpp"

namespace xlalign::objectives {

using encoders::EncoderParams;
using encoders::EncoderVars;
using encoders::SentenceEmbedding;
using text::IdSequence;

/// LSTM decoder conditioned on the sentence embedding at every step: the
/// step input is [embedding(previous token); sentence embedding].
struct DecoderParams {
  std::string lang;
  Parameter embeddings;       // V x D
  LstmParams lstm;            // (D + E) -> H_dec
  Parameter projection;       // H_dec x V
  Parameter projection_bias;  // 1 x V

  static DecoderParams init(std::string lang, std::size_t vocab_size, std::size_t embed_dim,
                            std::size_t sentence_dim, std::size_t hidden_dim, Rng& rng);

  std::size_t vocab_size() const { return projection.value.cols(); }
  std::size_t sentence_dim() const { return lstm.input_dim - embeddings.value.cols(); }
  std::vector<Parameter*> parameters();

  void save_to(Checkpoint& ckpt, const std::string& prefix) const;
  static DecoderParams load_from(const Checkpoint& ckpt, const std::string& prefix,
                                 std::string lang);
};

struct DecoderVars {
  Graph::Var embeddings, weight, bias, projection, projection_bias;
  std::size_t hidden_dim = 0;
};

DecoderVars bind(Graph& g, DecoderParams& p);

struct Seq2SeqOptions {
  // Predict EOS after the last target token. Disable only for degenerate
  // single-class decoders.
  bool append_eos = true;
};

/// Teacher-forced token cross-entropy averaged over non-pad target tokens.
Graph::Var decoder_loss(Graph& g, const DecoderVars& dec, Graph::Var sentence,
                        std::span<const IdSequence> targets, const Seq2SeqOptions& options = {});

/// Full encoder-decoder loss node. With `denoise` set the encoder reads
/// corrupt(input) drawn from `rng` (SDAE); otherwise it reads the input as is
/// (NMT when input and target are translations).
Graph::Var seq2seq_loss(Graph& g, const EncoderVars& enc, const DecoderVars& dec,
                        std::span<const IdSequence> inputs, std::span<const IdSequence> targets,
                        const text::NoiseParams* denoise, Rng* rng,
                        const Seq2SeqOptions& options = {});

// Forward-only convenience.
double seq2seq_loss(std::span<const IdSequence> inputs, std::span<const IdSequence> targets,
                    EncoderParams& enc, DecoderParams& dec, const text::NoiseParams* denoise,
                    const Seq2SeqOptions& options = {});

struct TrainSchedule {
  std::size_t batch_size = 16;
  std::size_t steps = 1000;
  AdamConfig adam{};
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TraceRecord {
  std::size_t step = 0;
  std::string objective;
  std::string language_pair;
  double value = 0.0;
};

// CSV with header "step,objective,language_pair,value".
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRecord> trace);

/// Epoch-style sampler: walks a seeded permutation of [0, n) and reshuffles
/// when exhausted.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, Rng rng);
  std::vector<std::size_t> next(std::size_t batch_size);

 private:
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

/// One language's stream in joint seq2seq training. The pivot task
/// reconstructs its own sentences under noise; other tasks translate into the
/// pivot language.
struct Seq2SeqTask {
  std::string lang;
  std::vector<IdSequence> inputs;
  std::vector<IdSequence> targets;
  bool denoise = false;
};

struct JointSeq2SeqResult {
  std::vector<TraceRecord> trace;
  std::vector<std::string> encoder_usage;  // encoder language per step
  const DecoderParams* decoder = nullptr;  // the single instance updated
  std::size_t decoder_updates = 0;
};

/// Strict round-robin over tasks: step s trains tasks[s % tasks.size()].
/// encoders[i] must be the encoder for tasks[i].lang (the same pointer may
/// appear for several tasks).
JointSeq2SeqResult train_joint_seq2seq(std::span<const Seq2SeqTask> tasks,
                                       std::span<EncoderParams* const> encoders,
                                       DecoderParams& shared_decoder,
                                       const TrainSchedule& schedule,
                                       const text::NoiseParams& noise);

/// MLP over [u; v; |u - v|; u * v] with one tanh hidden layer and 3 logits
/// (entailment, contradiction, neutral).
struct ClassifierHead {
  Parameter w1;  // 4E x hidden
  Parameter b1;  // 1 x hidden
  Parameter w2;  // hidden x 3
  Parameter b2;  // 1 x 3

  static ClassifierHead init(std::size_t sentence_dim, std::size_t hidden_dim, Rng& rng);
  std::size_t sentence_dim() const { return w1.value.rows() / 4; }
  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
  void save_to(Checkpoint& ckpt, const std::string& prefix) const;
};

inline constexpr int kNumNliLabels = 3;

Graph::Var infersent_features(Graph& g, Graph::Var u, Graph::Var v);
Graph::Var infersent_logits(Graph& g, ClassifierHead& head, Graph::Var u, Graph::Var v);
std::array<double, 3> infersent_classify(const SentenceEmbedding& u, const SentenceEmbedding& v,
                                         const ClassifierHead& head);

/// Index-aligned NLI examples in one language.
struct NliDataset {
  std::string lang;
  std::vector<IdSequence> premises;
  std::vector<IdSequence> hypotheses;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Draws (premise language, hypothesis language) independently and uniformly.
class LanguagePairSampler {
 public:
  LanguagePairSampler(std::size_t languages, Rng rng);
  std::pair<std::size_t, std::size_t> next();

 private:
  std::size_t languages_;
  Rng rng_;
};

struct JointInferSentResult {
  std::vector<TraceRecord> trace;  // loss and batch accuracy per step
  std::vector<std::pair<std::size_t, std::size_t>> language_pairs;
  const ClassifierHead* head = nullptr;
};

JointInferSentResult train_joint_infersent(std::span<const NliDataset> datasets,
                                           std::span<EncoderParams* const> encoders,
                                           ClassifierHead& head, const TrainSchedule& schedule);

// Accuracy with premises in one language and hypotheses in another.
double infersent_accuracy(const NliDataset& premises, const NliDataset& hypotheses,
                          const EncoderParams& premise_enc, const EncoderParams& hypothesis_enc,
                          const ClassifierHead& head);

struct TransferResult {
  std::vector<TraceRecord> trace;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Regresses fresh_encoder(sources[i]) onto pivot(targets[i]) with mean L1
/// distance. The pivot is read-only.
TransferResult train_transfer(std::span<const IdSequence> sources,
                              std::span<const IdSequence> targets, const EncoderParams& pivot,
                              EncoderParams& fresh_encoder, const TrainSchedule& schedule);

// Mean over rows of sum_j |a - b|.
Graph::Var l1_loss(Graph& g, Graph::Var a, Graph::Var b);

}  // namespace xlalign::objectives
