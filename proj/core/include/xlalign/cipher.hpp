#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xlalign/eval.hpp"
#include "xlalign/objectives.hpp"
#include "xlalign/text.hpp"

namespace xlalign::cipher {

using text::TokenSequence;

struct CipherSpec {
  std::size_t vocab_size = 40;
  std::size_t n_sentences = 2200;
  std::size_t min_len = 3;
  std::size_t max_len = 8;
  double zipf = 0.5;  // token distribution exponent; 0 is uniform
  std::uint64_t seed = 1;
  std::string lang_a = "a";
  std::string lang_b = "b";
  bool unique_sentences = true;

  void validate() const;
};

/// Toy NLI pairs in both languages; label 0 = entailment (hypothesis tokens
/// all in the premise), 1 = contradiction (no shared token), 2 = neutral.
struct NliToySet {
  std::vector<TokenSequence> premises_a, hypotheses_a;
  std::vector<TokenSequence> premises_b, hypotheses_b;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Two languages that differ only by a bijective renaming of tokens.
/// corpus.pairs[i] = (sentence in A, its cipher in B).
struct CipherCorpus {
  CipherSpec spec;
  text::ParallelCorpus corpus;
  std::vector<std::size_t> permutation;  // A word i <-> B word permutation[i]
  std::vector<std::string> words_a, words_b;

  TokenSequence encipher(const TokenSequence& a) const;
  TokenSequence decipher(const TokenSequence& b) const;
};

CipherCorpus gen_cipher_corpus(const CipherSpec& spec);

// Rule-derived NLI label of a (premise, hypothesis) pair.
int nli_rule_label(const TokenSequence& premise, const TokenSequence& hypothesis);

NliToySet gen_nli_toy_set(const CipherCorpus& cc, std::size_t n_examples, std::size_t min_len,
                          std::size_t max_len, std::uint64_t seed);

/// Topic documents: class c favours vocabulary words i with i % 4 == c.
/// Index-aligned: docs_b[i] is the cipher of docs_a[i].
struct DocumentSet {
  std::vector<eval::Document> docs_a;
  std::vector<eval::Document> docs_b;
};

DocumentSet gen_documents(const CipherCorpus& cc, std::size_t n_docs, std::uint64_t seed);

/// Word vectors for both languages: A is Gaussian, B is A rotated by a random
/// orthogonal matrix plus isotropic noise of the given stddev, so a near-exact
/// orthogonal alignment exists.
struct WordVectorPair {
  text::WordVectors a;
  text::WordVectors b;
};

WordVectorPair gen_word_vectors(const CipherCorpus& cc, std::size_t dim, double noise,
                                std::uint64_t seed);

// Orthogonal matrix from Gram-Schmidt on a seeded Gaussian matrix.
Tensor random_orthogonal(std::size_t d, Rng& rng);

/// Writes train/test corpora, dictionary, word vectors, NLI and document files
/// under dir. Returns the written paths, relative to dir.
struct GenerateOptions {
  CipherSpec spec;
  std::size_t test_size = 200;
  std::size_t nli_examples = 600;
  std::size_t docs = 400;
  std::size_t embed_dim = 32;
  double vector_noise = 0.05;
};

std::vector<std::string> write_cipher_dataset(const std::filesystem::path& dir,
                                              const GenerateOptions& options);

// File readers for the formats written above.
objectives::NliDataset read_nli(const std::filesystem::path& path, const text::Vocabulary& vocab,
                                const std::string& lang);
std::vector<eval::Document> read_documents(const std::filesystem::path& path);

}  // namespace xlalign::cipher
