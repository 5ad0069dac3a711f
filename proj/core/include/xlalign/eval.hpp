#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xlalign/adam.hpp"
#include "xlalign/tensor.hpp"
#include "xlalign/text.hpp"

namespace xlalign::eval {

using text::TokenSequence;

struct RetrievalReport {
  std::string direction;  // "<src>-<tgt>"
  double accuracy = 0.0;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::vector<std::size_t> ranks;  // 1-based rank of the gold row, when requested
};

/// Row i of src translates row i of tgt. Each source row retrieves the target
/// row of highest cosine, lowest index on ties; accuracy is the fraction of
/// queries whose top hit is the gold row. Zero-norm rows are rejected.
RetrievalReport retrieval_accuracy(const Tensor& src, const Tensor& tgt,
                                   std::string direction = "src-tgt", bool keep_ranks = false);

// Unit-normalised copy; throws NumericError naming the first zero-norm row.
Tensor normalize_rows(const Tensor& m, std::string_view side);

struct Neighbor {
  std::size_t index = 0;
  std::string text;
  double cosine = 0.0;
};

/// Top-k pool rows by cosine, descending, lowest index first on ties.
std::vector<Neighbor> nearest_neighbors(std::span<const double> query, const Tensor& pool,
                                        std::span<const std::string> texts, std::size_t k);

struct CosineGap {
  double gold = 0.0;        // mean cos(src_i, tgt_i)
  double mismatched = 0.0;  // mean cos(src_i, tgt_j), i != j
};
CosineGap cosine_gap(const Tensor& src, const Tensor& tgt);

// ---------------------------------------------------------------------------
// Cross-lingual document classification

inline constexpr int kNumDocClasses = 4;

struct EmbeddedDoc {
  Tensor sentences;  // one row per sentence
  int label = 0;
};

struct Document {
  std::vector<TokenSequence> sentences;
  int label = 0;
};

struct CldcConfig {
  std::size_t hidden = 64;
  std::size_t steps = 300;
  std::size_t batch_size = 32;
  AdamConfig adam{1e-2};
  std::uint64_t seed = 1;
};

struct CLDCReport {
  std::string train_lang;
  std::string test_lang;
  double accuracy = 0.0;
  std::size_t class_count = kNumDocClasses;
};

// Unweighted mean of the sentence rows.
std::vector<double> document_embedding(const Tensor& sentences);

/// One-hidden-layer MLP trained with Adam on train docs, scored on test docs.
CLDCReport cldc_train_eval(std::span<const EmbeddedDoc> train, std::span<const EmbeddedDoc> test,
                           const CldcConfig& config, std::string train_lang = "a",
                           std::string test_lang = "b");

using SentenceEmbedder = std::function<Tensor(std::span<const TokenSequence>)>;

CLDCReport cldc_train_eval(std::span<const Document> train, std::span<const Document> test,
                           const SentenceEmbedder& train_embedder,
                           const SentenceEmbedder& test_embedder, const CldcConfig& config,
                           std::string train_lang, std::string test_lang);

// ---------------------------------------------------------------------------
// Accuracy vs. parallel-corpus size

struct CurvePoint {
  std::size_t size = 0;
  std::string model;
  std::string direction;
  double accuracy = 0.0;
};

/// What a trained/fitted model exposes to the harness: embeddings of source-
/// and target-language sentences in one shared space.
struct AlignedEmbedder {
  std::function<Tensor(std::span<const TokenSequence>)> embed_src;
  std::function<Tensor(std::span<const TokenSequence>)> embed_tgt;
};

using ModelFactory = std::function<AlignedEmbedder(const text::ParallelCorpus& split)>;

/// For every split size the factory trains on the prefix split; the model is
/// then scored src->tgt and tgt->src on the held-out test corpus. Throws
/// ValidationError when a test pair also appears in the training corpus.
std::vector<CurvePoint> accuracy_curve(const std::string& model, const ModelFactory& factory,
                                       const text::ParallelCorpus& corpus,
                                       const text::SplitPlan& plan,
                                       const text::ParallelCorpus& test);

void write_curve_csv(const std::filesystem::path& path, std::span<const CurvePoint> points);
void write_cldc_csv(const std::filesystem::path& path, std::span<const CLDCReport> reports);

struct NeighborBlock {
  std::string lang;
  std::vector<Neighbor> neighbors;
};

struct NeighborQuery {
  std::string query;
  std::vector<NeighborBlock> blocks;
};

// Plain-text layout: a "Query:" line, then one block of ranked neighbours per
// language.
void write_neighbor_report(const std::filesystem::path& path,
                           std::span<const NeighborQuery> queries);

}  // namespace xlalign::eval
