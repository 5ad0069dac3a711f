#include "xlalign/cipher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "xlalign/rng.hpp"

namespace xlalign::cipher {

namespace {

bool is_plain_tag(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::size_t draw_length(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

// Index of an A-language word "<lang><i>".
std::size_t word_index(const std::string& token, const std::string& lang) {
  if (token.rfind(lang, 0) != 0) throw ValidationError("token '" + token + "' not in language " + lang);
  return std::stoull(token.substr(lang.size()));
}

}  // namespace

void CipherSpec::validate() const {
  if (vocab_size < 10) throw ValidationError("cipher corpus: vocab_size must be >= 10");
  if (n_sentences < 1) throw ValidationError("cipher corpus: need at least one sentence");
  if (min_len < 1 || max_len < min_len) {
    throw ValidationError("cipher corpus: degenerate length range [" + std::to_string(min_len) +
                          ", " + std::to_string(max_len) + "]");
  }
  if (!(zipf >= 0.0)) throw ValidationError("cipher corpus: zipf exponent must be >= 0");
  if (!is_plain_tag(lang_a) || !is_plain_tag(lang_b) || lang_a == lang_b) {
    throw ValidationError("cipher corpus: language tags must be distinct lowercase alphanumerics");
  }
}

TokenSequence CipherCorpus::encipher(const TokenSequence& a) const {
  TokenSequence out;
  out.reserve(a.size());
  for (const auto& t : a) out.push_back(words_b[permutation.at(word_index(t, spec.lang_a))]);
  return out;
}

TokenSequence CipherCorpus::decipher(const TokenSequence& b) const {
  std::vector<std::size_t> inverse(permutation.size());
  for (std::size_t i = 0; i < permutation.size(); ++i) inverse[permutation[i]] = i;
  TokenSequence out;
  out.reserve(b.size());
  for (const auto& t : b) out.push_back(words_a[inverse.at(word_index(t, spec.lang_b))]);
  return out;
}

CipherCorpus gen_cipher_corpus(const CipherSpec& spec) {
  spec.validate();
  CipherCorpus cc;
  cc.spec = spec;
  Rng rng(spec.seed);
  Rng cipher_rng = rng.fork(1);
  Rng sentence_rng = rng.fork(2);

  for (std::size_t i = 0; i < spec.vocab_size; ++i) {
    cc.words_a.push_back(spec.lang_a + std::to_string(i));
    cc.words_b.push_back(spec.lang_b + std::to_string(i));
  }
  cc.permutation.resize(spec.vocab_size);
  std::iota(cc.permutation.begin(), cc.permutation.end(), 0);
  cipher_rng.shuffle(std::span<std::size_t>(cc.permutation));

  cc.corpus.src_lang = spec.lang_a;
  cc.corpus.tgt_lang = spec.lang_b;
  ZipfSampler zipf(spec.vocab_size, spec.zipf);
  std::unordered_set<std::string> seen;
  std::size_t attempts = 0;
  const std::size_t max_attempts = spec.n_sentences * 1000 + 1000;
  while (cc.corpus.size() < spec.n_sentences) {
    if (++attempts > max_attempts) {
      throw ValidationError("cipher corpus: cannot draw " + std::to_string(spec.n_sentences) +
                            " distinct sentences from this vocabulary and length range");
    }
    TokenSequence a;
    const std::size_t len = draw_length(sentence_rng, spec.min_len, spec.max_len);
    for (std::size_t k = 0; k < len; ++k) a.push_back(cc.words_a[zipf(sentence_rng)]);
    if (spec.unique_sentences && !seen.insert(text::join(a)).second) continue;
    TokenSequence b = cc.encipher(a);
    cc.corpus.pairs.emplace_back(std::move(a), std::move(b));
  }
  return cc;
}

int nli_rule_label(const TokenSequence& premise, const TokenSequence& hypothesis) {
  std::set<std::string> p(premise.begin(), premise.end());
  std::size_t shared = 0;
  for (const auto& t : hypothesis) shared += p.count(t);
  if (shared == hypothesis.size()) return 0;
  if (shared == 0) return 1;
  return 2;
}

NliToySet gen_nli_toy_set(const CipherCorpus& cc, std::size_t n_examples, std::size_t min_len,
                          std::size_t max_len, std::uint64_t seed) {
  if (n_examples == 0) throw ValidationError("nli toy set: need at least one example");
  if (min_len < 2 || max_len < min_len || max_len + 2 > cc.words_a.size()) {
    throw ValidationError("nli toy set: degenerate premise length range");
  }
  Rng rng(seed);
  NliToySet set;
  const std::size_t V = cc.words_a.size();
  for (std::size_t i = 0; i < n_examples; ++i) {
    const int label = static_cast<int>(i % 3);
    TokenSequence premise;
    const std::size_t len = draw_length(rng, min_len, max_len);
    for (std::size_t k = 0; k < len; ++k) premise.push_back(cc.words_a[rng.below(V)]);
    std::set<std::string> in_premise(premise.begin(), premise.end());
    std::vector<std::string> outside;
    for (const auto& w : cc.words_a)
      if (!in_premise.count(w)) outside.push_back(w);

    TokenSequence hyp;
    const std::size_t hyp_len = 1 + rng.below(std::min<std::size_t>(3, premise.size()));
    if (label == 0) {
      std::vector<std::size_t> pos(premise.size());
      std::iota(pos.begin(), pos.end(), 0);
      rng.shuffle(std::span<std::size_t>(pos));
      pos.resize(hyp_len);
      std::sort(pos.begin(), pos.end());
      for (std::size_t p : pos) hyp.push_back(premise[p]);
    } else if (label == 1) {
      for (std::size_t k = 0; k < hyp_len; ++k) hyp.push_back(outside[rng.below(outside.size())]);
    } else {
      const std::size_t n = std::max<std::size_t>(2, hyp_len);
      hyp.push_back(premise[rng.below(premise.size())]);
      for (std::size_t k = 1; k < n; ++k) hyp.push_back(outside[rng.below(outside.size())]);
      rng.shuffle(std::span<std::string>(hyp));
    }
    if (nli_rule_label(premise, hyp) != label) {
      throw std::logic_error("nli toy set: generated pair disagrees with its rule label");
    }
    set.premises_b.push_back(cc.encipher(premise));
    set.hypotheses_b.push_back(cc.encipher(hyp));
    set.premises_a.push_back(std::move(premise));
    set.hypotheses_a.push_back(std::move(hyp));
    set.labels.push_back(label);
  }
  return set;
}

DocumentSet gen_documents(const CipherCorpus& cc, std::size_t n_docs, std::uint64_t seed) {
  if (n_docs < static_cast<std::size_t>(eval::kNumDocClasses)) {
    throw ValidationError("documents: need at least one document per class");
  }
  Rng rng(seed);
  const std::size_t V = cc.words_a.size();
  DocumentSet out;
  for (std::size_t i = 0; i < n_docs; ++i) {
    const int label = static_cast<int>(i % eval::kNumDocClasses);
    std::vector<std::size_t> topic;
    for (std::size_t w = static_cast<std::size_t>(label); w < V; w += eval::kNumDocClasses) topic.push_back(w);
    eval::Document a{{}, label};
    const std::size_t n_sent = 3 + rng.below(3);
    for (std::size_t s = 0; s < n_sent; ++s) {
      TokenSequence sent;
      const std::size_t len = draw_length(rng, cc.spec.min_len, cc.spec.max_len);
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t w = rng.uniform() < 0.6 ? topic[rng.below(topic.size())] : rng.below(V);
        sent.push_back(cc.words_a[w]);
      }
      a.sentences.push_back(std::move(sent));
    }
    eval::Document b{{}, label};
    for (const auto& s : a.sentences) b.sentences.push_back(cc.encipher(s));
    out.docs_a.push_back(std::move(a));
    out.docs_b.push_back(std::move(b));
  }
  return out;
}

Tensor random_orthogonal(std::size_t d, Rng& rng) {
  Tensor q = Tensor::normal(d, d, 1.0, rng);
  // Modified Gram-Schmidt over columns, twice for stability.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < d; ++i) q(i, j) -= proj * q(i, k);
      }
      double n = 0.0;
      for (std::size_t i = 0; i < d; ++i) n += q(i, j) * q(i, j);
      n = std::sqrt(n);
      for (std::size_t i = 0; i < d; ++i) q(i, j) /= n;
    }
  }
  return q;
}

WordVectorPair gen_word_vectors(const CipherCorpus& cc, std::size_t dim, double noise,
                                std::uint64_t seed) {
  if (dim == 0) throw ValidationError("word vectors: dim must be positive");
  Rng rng(seed);
  const std::size_t V = cc.words_a.size();
  Tensor a = Tensor::normal(V, dim, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
  Tensor r = random_orthogonal(dim, rng);
  Tensor rotated = matmul(a, r);
  Tensor b = Tensor::matrix(V, dim);
  for (std::size_t i = 0; i < V; ++i) {
    auto dst = b.row(cc.permutation[i]);
    auto src = rotated.row(i);
    for (std::size_t k = 0; k < dim; ++k) {
      dst[k] = src[k] + noise / std::sqrt(static_cast<double>(dim)) * rng.normal();
    }
  }
  return {text::WordVectors{cc.words_a, std::move(a)}, text::WordVectors{cc.words_b, std::move(b)}};
}

std::vector<std::string> write_cipher_dataset(const std::filesystem::path& dir,
                                              const GenerateOptions& options) {
  std::filesystem::create_directories(dir);
  CipherSpec spec = options.spec;
  const std::size_t n_train = spec.n_sentences;
  spec.n_sentences = n_train + options.test_size;
  CipherCorpus cc = gen_cipher_corpus(spec);
  const std::string& la = spec.lang_a;
  const std::string& lb = spec.lang_b;
  std::vector<std::string> written;

  auto dump_side = [&](std::size_t begin, std::size_t end, bool side_b, const std::string& name) {
    std::vector<std::string> lines;
    for (std::size_t i = begin; i < end; ++i) {
      lines.push_back(text::join(side_b ? cc.corpus.pairs[i].second : cc.corpus.pairs[i].first));
    }
    text::write_lines(dir / name, lines);
    written.push_back(name);
  };
  dump_side(0, n_train, false, "train." + la);
  dump_side(0, n_train, true, "train." + lb);
  if (options.test_size > 0) {
    dump_side(n_train, spec.n_sentences, false, "test." + la);
    dump_side(n_train, spec.n_sentences, true, "test." + lb);
  }

  {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < cc.words_a.size(); ++i) {
      lines.push_back(cc.words_b[cc.permutation[i]] + " " + cc.words_a[i]);
    }
    const std::string name = "dict." + lb + "-" + la + ".txt";
    text::write_lines(dir / name, lines);
    written.push_back(name);
  }

  if (options.embed_dim > 0) {
    WordVectorPair wv = gen_word_vectors(cc, options.embed_dim, options.vector_noise, spec.seed + 101);
    text::write_word2vec(dir / ("emb." + la + ".vec"), wv.a.words, wv.a.vectors);
    text::write_word2vec(dir / ("emb." + lb + ".vec"), wv.b.words, wv.b.vectors);
    written.push_back("emb." + la + ".vec");
    written.push_back("emb." + lb + ".vec");
  }

  if (options.nli_examples > 0) {
    NliToySet nli = gen_nli_toy_set(cc, options.nli_examples, 3, 6, spec.seed + 202);
    std::vector<std::string> la_lines, lb_lines;
    for (std::size_t i = 0; i < nli.size(); ++i) {
      la_lines.push_back(std::to_string(nli.labels[i]) + "\t" + text::join(nli.premises_a[i]) +
                         "\t" + text::join(nli.hypotheses_a[i]));
      lb_lines.push_back(std::to_string(nli.labels[i]) + "\t" + text::join(nli.premises_b[i]) +
                         "\t" + text::join(nli.hypotheses_b[i]));
    }
    text::write_lines(dir / ("nli." + la + ".tsv"), la_lines);
    text::write_lines(dir / ("nli." + lb + ".tsv"), lb_lines);
    written.push_back("nli." + la + ".tsv");
    written.push_back("nli." + lb + ".tsv");
  }

  if (options.docs > 0) {
    DocumentSet docs = gen_documents(cc, options.docs, spec.seed + 303);
    auto dump_docs = [&](const std::vector<eval::Document>& ds, const std::string& name) {
      std::vector<std::string> lines;
      for (const auto& d : ds) {
        std::string line = std::to_string(d.label) + "\t";
        for (std::size_t s = 0; s < d.sentences.size(); ++s) {
          if (s) line += " ||| ";
          line += text::join(d.sentences[s]);
        }
        lines.push_back(std::move(line));
      }
      text::write_lines(dir / name, lines);
      written.push_back(name);
    };
    dump_docs(docs.docs_a, "docs." + la + ".tsv");
    dump_docs(docs.docs_b, "docs." + lb + ".tsv");
  }
  return written;
}

objectives::NliDataset read_nli(const std::filesystem::path& path, const text::Vocabulary& vocab,
                                const std::string& lang) {
  objectives::NliDataset ds;
  ds.lang = lang;
  std::size_t lineno = 0;
  for (const auto& line : text::read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected label<TAB>premise<TAB>hypothesis");
    }
    int label = std::stoi(line.substr(0, t1));
    auto p = text::tokenize(line.substr(t1 + 1, t2 - t1 - 1));
    auto h = text::tokenize(line.substr(t2 + 1));
    if (p.empty() || h.empty()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": empty sentence");
    }
    ds.premises.push_back(vocab.encode(p));
    ds.hypotheses.push_back(vocab.encode(h));
    ds.labels.push_back(label);
  }
  return ds;
}

std::vector<eval::Document> read_documents(const std::filesystem::path& path) {
  std::vector<eval::Document> docs;
  std::size_t lineno = 0;
  for (const auto& line : text::read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected label<TAB>sentences");
    }
    eval::Document d;
    d.label = std::stoi(line.substr(0, tab));
    std::string body = line.substr(tab + 1);
    std::size_t start = 0;
    while (start <= body.size()) {
      auto sep = body.find("|||", start);
      auto piece = body.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
      auto toks = text::tokenize(piece);
      if (!toks.empty()) d.sentences.push_back(std::move(toks));
      if (sep == std::string::npos) break;
      start = sep + 3;
    }
    if (d.sentences.empty()) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": document has no sentences");
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace xlalign::cipher
