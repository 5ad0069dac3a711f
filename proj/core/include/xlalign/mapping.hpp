#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlalign/encoders.hpp"
#include "xlalign/tensor.hpp"
#include "xlalign/text.hpp"

namespace xlalign::mapping {

/// Orthogonal d x d map W from a source embedding space onto a target space,
/// applied to row vectors as e^T W.
struct AlignmentMap {
  Tensor w;
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
  std::size_t pairs = 0;
  double residual = 0.0;  // ||X W - Y||_F on the fitting pairs
  bool centered = false;
  Tensor src_mean;        // 1 x d, only when centered
  Tensor tgt_mean;

  std::size_t dim() const { return w.rows(); }
};

struct FitOptions {
  bool center = false;
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
};

/// Procrustes solution: with X^T Y = U S V^T, W = U V^T minimises ||X W - Y||_F
/// over orthogonal W. Rows of X and Y are paired translations.
AlignmentMap fit_orthogonal_map(const Tensor& x, const Tensor& y, const FitOptions& options = {});

encoders::SentenceEmbedding apply_map(const encoders::SentenceEmbedding& e, const AlignmentMap& m);
// Row-wise e^T W for every row.
Tensor apply_map(const Tensor& rows, const AlignmentMap& m);
// Target -> source direction: row-wise e^T W^T.
Tensor apply_inverse(const Tensor& rows, const AlignmentMap& m);

// max |W^T W - I| over entries.
double orthogonality_error(const Tensor& w);

/// Word-level baseline: fits the same Procrustes map on word-vector pairs
/// taken from a bilingual dictionary. Entries with a word missing from either
/// vector set are skipped; duplicates are kept.
AlignmentMap fit_dictionary_map(const text::WordVectors& src, const text::WordVectors& tgt,
                                std::span<const std::pair<std::string, std::string>> dictionary,
                                const FitOptions& options = {});

void save_map(const std::filesystem::path& path, const AlignmentMap& m);
AlignmentMap load_map(const std::filesystem::path& path);

}  // namespace xlalign::mapping
