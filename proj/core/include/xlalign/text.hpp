#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xlalign/errors.hpp"
#include "xlalign/rng.hpp"
#include "xlalign/tensor.hpp"

namespace xlalign::text {

using TokenSequence = std::vector<std::string>;
using IdSequence = std::vector<int>;

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumReserved = 4;

/// Lowercases ASCII, splits on whitespace and emits every ASCII punctuation
/// character as its own token. Bytes >= 0x80 pass through untouched.
TokenSequence tokenize(std::string_view line);
std::string join(const TokenSequence& tokens, std::string_view sep = " ");
bool is_valid_utf8(std::string_view s);

/// Token <-> id map with corpus frequencies. Ids 0..3 are PAD, UNK, BOS, EOS.
/// UNK carries the summed frequency of every token dropped by min_count, so
/// total() equals the number of tokens in the corpus it was built from.
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(std::span<const TokenSequence> corpus, std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  int id(std::string_view token) const;  // kUnk when absent
  const std::string& token(int id) const;
  std::uint64_t frequency(int id) const;
  std::uint64_t total() const { return total_; }
  double probability(int id) const;

  IdSequence encode(const TokenSequence& tokens) const;
  TokenSequence decode(const IdSequence& ids) const;

  // One "token<TAB>frequency" line per id, reserved ids included.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void add(std::string token, std::uint64_t freq);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, int> index_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocab(std::span<const TokenSequence> corpus, std::size_t min_count);
// Convenience: tokenizes each line first.
Vocabulary build_vocab(std::span<const std::string> lines, std::size_t min_count);

struct NoiseParams {
  double p_del = 0.1;
  double p_swap = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// SDAE input noise. Pass 1 walks the non-overlapping bigrams (0,1), (2,3), ...
/// drawing one uniform per bigram and swapping it when the draw is < p_swap.
/// Pass 2 draws one uniform per token and deletes it when the draw is < p_del.
/// If every token was deleted, the last deleted token is kept.
template <typename T>
std::vector<T> corrupt(std::span<const T> s, const NoiseParams& np, Rng& rng) {
  np.validate();
  if (s.empty()) throw DimensionError("corrupt: empty input sequence");
  std::vector<T> work(s.begin(), s.end());
  for (std::size_t i = 0; i + 1 < work.size(); i += 2) {
    if (rng.uniform() < np.p_swap) std::swap(work[i], work[i + 1]);
  }
  std::vector<T> out;
  out.reserve(work.size());
  std::size_t last_deleted = work.size();
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (rng.uniform() < np.p_del) {
      last_deleted = i;
    } else {
      out.push_back(work[i]);
    }
  }
  if (out.empty()) out.push_back(work[last_deleted]);
  return out;
}

// Seeds a fresh Rng from np.seed.
TokenSequence corrupt(const TokenSequence& s, const NoiseParams& np);

/// Smooth inverse frequency weight a / (a + freq / total).
double sif_weight(std::uint64_t freq, std::uint64_t total, double a);

struct ParallelCorpus {
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
  std::vector<std::pair<TokenSequence, TokenSequence>> pairs;
  std::size_t skipped = 0;  // pairs dropped because a side tokenized to nothing

  std::size_t size() const { return pairs.size(); }
  std::vector<TokenSequence> source_side() const;
  std::vector<TokenSequence> target_side() const;
  // Pairs [begin, end).
  ParallelCorpus slice(std::size_t begin, std::size_t end) const;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

/// Line i of src pairs with line i of tgt. Throws ValidationError naming both
/// line counts when they differ, or the line number of invalid UTF-8.
ParallelCorpus load_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path, std::string src_lang,
                             std::string tgt_lang);

/// Nested prefix splits of a corpus: split i is pairs [0, sizes[i]).
struct SplitPlan {
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.size(); }
  std::pair<std::size_t, std::size_t> range(std::size_t i) const { return {0, sizes.at(i)}; }
};

// 1K..1M on a 1-2-5 grid.
inline const std::vector<std::size_t> kReferenceSplitGrid = {
    1000, 2000, 5000, 10000, 20000, 50000, 100000, 200000, 500000, 1000000};
inline const std::vector<std::size_t> kDeskSplitGrid = {100, 200, 500, 1000, 2000};

SplitPlan make_splits(std::size_t corpus_size, std::vector<std::size_t> sizes);
SplitPlan make_splits(const ParallelCorpus& corpus, std::vector<std::size_t> sizes);

/// word2vec text format: "<count> <dim>" then "<word> <v1> ... <vdim>".
struct WordVectors {
  std::vector<std::string> words;
  Tensor vectors;  // count x dim

  std::unordered_map<std::string, std::size_t> index() const;
};

WordVectors read_word2vec(const std::filesystem::path& path);
void write_word2vec(const std::filesystem::path& path, std::span<const std::string> words,
                    const Tensor& vectors);

/// "<source_word> <target_word>" per line; duplicates kept.
std::vector<std::pair<std::string, std::string>> read_dictionary(
    const std::filesystem::path& path);

}  // namespace xlalign::text
