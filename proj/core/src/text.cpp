#include "xlalign/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace xlalign::text {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

const char* const kReservedTokens[kNumReserved] = {"<pad>", "<unk>", "<s>", "</s>"};

}  // namespace

TokenSequence tokenize(std::string_view line) {
  TokenSequence out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : line) {
    auto c = static_cast<unsigned char>(ch);
    if (is_ascii_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return out;
}

std::string join(const TokenSequence& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates, out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumReserved; ++i) add(kReservedTokens[i], 0);
}

void Vocabulary::add(std::string token, std::uint64_t freq) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  freqs_.push_back(freq);
  total_ += freq;
}

Vocabulary Vocabulary::build(std::span<const TokenSequence> corpus, std::size_t min_count) {
  if (min_count < 1) throw ValidationError("build_vocab: min_count must be >= 1");
  if (corpus.empty()) throw ValidationError("build_vocab: empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) ++counts[tok];
  if (counts.empty()) throw ValidationError("build_vocab: corpus contains no tokens");

  std::vector<std::pair<std::string, std::uint64_t>> kept;
  std::uint64_t oov_mass = 0;
  for (auto& [tok, n] : counts) {
    bool reserved = std::find(std::begin(kReservedTokens), std::end(kReservedTokens), tok) !=
                    std::end(kReservedTokens);
    if (n >= min_count && !reserved) {
      kept.emplace_back(tok, n);
    } else {
      oov_mass += n;
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  });

  Vocabulary v;
  v.freqs_[kUnk] = oov_mass;
  v.total_ = oov_mass;
  for (auto& [tok, n] : kept) v.add(std::move(tok), n);
  return v;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DimensionError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::frequency(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= freqs_.size()) {
    throw DimensionError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return freqs_[static_cast<std::size_t>(id)];
}

double Vocabulary::probability(int id) const {
  if (total_ == 0) throw ValidationError("vocabulary has zero total count");
  return static_cast<double>(frequency(id)) / static_cast<double>(total_);
}

IdSequence Vocabulary::encode(const TokenSequence& tokens) const {
  IdSequence ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

TokenSequence Vocabulary::decode(const IdSequence& ids) const {
  TokenSequence out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write vocabulary " + path.string());
  for (std::size_t i = 0; i < tokens_.size(); ++i) os << tokens_[i] << '\t' << freqs_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open vocabulary " + path.string());
  Vocabulary v;
  v.tokens_.clear();
  v.freqs_.clear();
  v.index_.clear();
  v.total_ = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected token<TAB>count");
    }
    v.add(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  if (v.tokens_.size() < static_cast<std::size_t>(kNumReserved)) {
    throw ValidationError(path.string() + ": vocabulary missing reserved entries");
  }
  return v;
}

Vocabulary build_vocab(std::span<const TokenSequence> corpus, std::size_t min_count) {
  return Vocabulary::build(corpus, min_count);
}

Vocabulary build_vocab(std::span<const std::string> lines, std::size_t min_count) {
  std::vector<TokenSequence> corpus;
  corpus.reserve(lines.size());
  for (const auto& l : lines) corpus.push_back(tokenize(l));
  return Vocabulary::build(corpus, min_count);
}

void NoiseParams::validate() const {
  if (!(p_del >= 0.0 && p_del <= 1.0) || !(p_swap >= 0.0 && p_swap <= 1.0)) {
    throw ValidationError("noise probabilities must lie in [0, 1]");
  }
}

TokenSequence corrupt(const TokenSequence& s, const NoiseParams& np) {
  Rng rng(np.seed);
  return corrupt<std::string>(std::span<const std::string>(s), np, rng);
}

double sif_weight(std::uint64_t freq, std::uint64_t total, double a) {
  if (total == 0) throw ValidationError("sif_weight: total count is zero");
  if (!(a > 0.0)) throw ValidationError("sif_weight: a must be positive");
  if (freq > total) throw ValidationError("sif_weight: freq exceeds total");
  const double p = static_cast<double>(freq) / static_cast<double>(total);
  return a / (a + p);
}

std::vector<TokenSequence> ParallelCorpus::source_side() const {
  std::vector<TokenSequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.first);
  return out;
}

std::vector<TokenSequence> ParallelCorpus::target_side() const {
  std::vector<TokenSequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.second);
  return out;
}

ParallelCorpus ParallelCorpus::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > pairs.size()) {
    throw DimensionError("corpus slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + std::to_string(pairs.size()) + " pairs");
  }
  ParallelCorpus out;
  out.src_lang = src_lang;
  out.tgt_lang = tgt_lang;
  out.pairs.assign(pairs.begin() + static_cast<std::ptrdiff_t>(begin),
                   pairs.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  for (const auto& l : lines) os << l << '\n';
}

ParallelCorpus load_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path, std::string src_lang,
                             std::string tgt_lang) {
  auto src = read_lines(src_path);
  auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    throw ValidationError("parallel corpus misaligned: " + src_path.string() + " has " +
                          std::to_string(src.size()) + " lines, " + tgt_path.string() + " has " +
                          std::to_string(tgt.size()));
  }
  ParallelCorpus corpus;
  corpus.src_lang = std::move(src_lang);
  corpus.tgt_lang = std::move(tgt_lang);
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!is_valid_utf8(src[i]) || !is_valid_utf8(tgt[i])) {
      throw ValidationError("invalid UTF-8 on line " + std::to_string(i + 1) + " of the corpus");
    }
    auto s = tokenize(src[i]);
    auto t = tokenize(tgt[i]);
    if (s.empty() || t.empty()) {
      ++corpus.skipped;
      continue;
    }
    corpus.pairs.emplace_back(std::move(s), std::move(t));
  }
  return corpus;
}

SplitPlan make_splits(std::size_t corpus_size, std::vector<std::size_t> sizes) {
  if (sizes.empty()) throw ValidationError("make_splits: no sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ValidationError("make_splits: split sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) {
      throw ValidationError("make_splits: sizes must be strictly increasing (" +
                            std::to_string(sizes[i - 1]) + " then " + std::to_string(sizes[i]) +
                            ")");
    }
  }
  if (sizes.back() > corpus_size) {
    throw ValidationError("make_splits: requested size " + std::to_string(sizes.back()) +
                          " exceeds corpus of " + std::to_string(corpus_size) + " pairs");
  }
  return SplitPlan{std::move(sizes)};
}

SplitPlan make_splits(const ParallelCorpus& corpus, std::vector<std::size_t> sizes) {
  return make_splits(corpus.size(), std::move(sizes));
}

std::unordered_map<std::string, std::size_t> WordVectors::index() const {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < words.size(); ++i) idx.emplace(words[i], i);
  return idx;
}

WordVectors read_word2vec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open embedding file " + path.string());
  std::size_t count = 0, dim = 0;
  std::string header;
  if (!std::getline(is, header)) throw ValidationError(path.string() + ": empty embedding file");
  {
    std::istringstream hs(header);
    if (!(hs >> count >> dim) || count == 0 || dim == 0) {
      throw ValidationError(path.string() + ": header must be '<count> <dim>'");
    }
  }
  WordVectors wv;
  wv.words.reserve(count);
  std::vector<double> data;
  data.reserve(count * dim);
  std::string line;
  std::size_t lineno = 1;
  while (wv.words.size() < count && std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    for (std::size_t k = 0; k < dim; ++k) {
      double x;
      if (!(ls >> x)) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(dim) + " values");
      }
      data.push_back(x);
    }
    wv.words.push_back(std::move(word));
  }
  if (wv.words.size() != count) {
    throw ValidationError(path.string() + ": header promises " + std::to_string(count) +
                          " vectors, found " + std::to_string(wv.words.size()));
  }
  wv.vectors = Tensor({count, dim}, std::move(data));
  return wv;
}

void write_word2vec(const std::filesystem::path& path, std::span<const std::string> words,
                    const Tensor& vectors) {
  if (words.size() != vectors.rows()) {
    throw DimensionError("write_word2vec: " + std::to_string(words.size()) + " words for " +
                         vectors.shape_str() + " vectors");
  }
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write embedding file " + path.string());
  os << vectors.rows() << ' ' << vectors.cols() << '\n';
  char buf[64];
  for (std::size_t r = 0; r < vectors.rows(); ++r) {
    os << words[r];
    for (double x : vectors.row(r)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      os << buf;
    }
    os << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> read_dictionary(
    const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected '<source_word> <target_word>'");
    }
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

}  // namespace xlalign::text
