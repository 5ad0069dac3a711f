#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "xlalign/checkpoint.hpp"
#include "xlalign/graph.hpp"
#include "xlalign/lstm.hpp"
#include "xlalign/text.hpp"

namespace xlalign::encoders {

using text::IdSequence;

/// Word-embedding table plus one LSTM per direction.
struct EncoderParams {
  std::string lang;
  Parameter embeddings;  // V x D
  LstmParams forward;    // D -> H
  LstmParams backward;   // D -> H

  static EncoderParams init(std::string lang, std::size_t vocab_size, std::size_t embed_dim,
                            std::size_t hidden_dim, Rng& rng);

  std::size_t vocab_size() const { return embeddings.value.rows(); }
  std::size_t embed_dim() const { return embeddings.value.cols(); }
  std::size_t hidden_dim() const { return forward.hidden_dim; }
  std::size_t output_dim() const { return 2 * forward.hidden_dim; }

  // Trainable parameters only; a frozen embedding table is left out.
  std::vector<Parameter*> parameters();
  void set_embeddings_trainable(bool trainable) { embeddings.trainable = trainable; }

  // Copies rows of `vectors` into the table for every vocabulary word found.
  // Returns how many rows were overwritten.
  std::size_t load_embeddings(const text::WordVectors& vectors, const text::Vocabulary& vocab);

  void save_to(Checkpoint& ckpt, const std::string& prefix) const;
  static EncoderParams load_from(const Checkpoint& ckpt, const std::string& prefix,
                                 std::string lang);
};

struct SentenceEmbedding {
  std::vector<double> values;
  std::string producer;

  std::size_t dim() const { return values.size(); }
};

/// Graph leaves for one encoder. Built with bind() for training or
/// bind_frozen() for a pivot that must not receive gradient.
struct EncoderVars {
  Graph::Var embeddings, fwd_weight, fwd_bias, bwd_weight, bwd_bias;
  std::size_t hidden_dim = 0;
};

EncoderVars bind(Graph& g, EncoderParams& p);
EncoderVars bind_frozen(Graph& g, const EncoderParams& p);

/// Batched BiLSTM with temporal max-pooling: B x 2H. Padding steps neither
/// advance the recurrent state nor take part in the max.
Graph::Var encode_batch(Graph& g, const EncoderVars& vars, std::span<const IdSequence> batch);

SentenceEmbedding encode_bilstm_maxpool(const IdSequence& s, const EncoderParams& p);
// n x 2H, row i encodes sentences[i]. Uses worker_count() threads.
Tensor encode_bilstm_maxpool(std::span<const IdSequence> sentences, const EncoderParams& p,
                             std::size_t batch_size = 64);

/// Builds a V x D lookup table aligned with vocabulary ids. Words missing from
/// `vectors` (and reserved ids) get zero rows.
Tensor table_from_vectors(const text::WordVectors& vectors, const text::Vocabulary& vocab);

/// Mean over tokens of sif_weight(w) * table[w].
SentenceEmbedding encode_sif(const IdSequence& s, const Tensor& table,
                             const text::Vocabulary& vocab, double a);
Tensor encode_sif(std::span<const IdSequence> sentences, const Tensor& table,
                  const text::Vocabulary& vocab, double a);

/// Subtracts each row's projection on the first right singular vector of the
/// embedding matrix. Off unless the caller asks for it.
void remove_common_component(Tensor& embeddings);

std::vector<IdSequence> encode_all(const text::Vocabulary& vocab,
                                   std::span<const text::TokenSequence> sentences);

}  // namespace xlalign::encoders
