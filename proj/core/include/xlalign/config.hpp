#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace xlalign {

enum class Framework { JointSeq2Seq, JointInferSent, Transfer, SentenceMap, WordDictMap };
enum class EncoderKind { BiLstmMaxPool, Sif };

std::string to_string(Framework f);
std::string to_string(EncoderKind e);
Framework parse_framework(const std::string& s);
EncoderKind parse_encoder(const std::string& s);

/// Flat key=value experiment description. Blank lines and lines starting with
/// '#' are ignored. Relative input paths resolve against base_dir (the config
/// file's directory); every output lands under out_dir.
struct ExperimentConfig {
  Framework framework = Framework::Transfer;
  EncoderKind encoder = EncoderKind::BiLstmMaxPool;
  std::vector<std::string> languages = {"a", "b"};  // pivot first

  std::filesystem::path base_dir = ".";
  std::string data_dir = ".";
  std::string out_dir = "out";
  // Files under data_dir: <train>.<lang>, <test>.<lang>, <vectors>.<lang>.vec,
  // <nli>.<lang>.tsv, <docs>.<lang>.tsv and the dictionary. Empty disables.
  std::string train_prefix = "train";
  std::string test_prefix = "test";
  std::string vectors_prefix = "";
  std::string nli_prefix = "nli";
  std::string docs_prefix = "docs";
  std::string dictionary = "";

  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t decoder_hidden = 32;
  std::size_t head_hidden = 128;
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t steps = 2000;
  std::size_t pretrain_steps = 2000;
  double sif_a = 1e-3;
  bool sif_remove_pc = false;
  double p_del = 0.1;
  double p_swap = 0.1;
  bool center = false;
  std::vector<std::size_t> splits = {100, 200, 500, 1000, 2000};
  std::size_t min_count = 1;
  std::size_t test_size = 200;
  std::size_t neighbors_k = 5;
  std::size_t neighbor_queries = 3;
  std::size_t cldc_steps = 300;
  std::uint64_t seed = 1;

  const std::string& pivot() const { return languages.front(); }

  // Applies one key=value assignment; unknown keys and bad values throw
  // ValidationError naming the key.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  std::filesystem::path input_path(const std::string& relative) const;
  std::filesystem::path data_file(const std::string& prefix, const std::string& suffix) const;

  // Canonical "key=value" lines in a fixed order; the manifest and hash use it.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::uint64_t hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
// "key=value" override, as passed to --set.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

}  // namespace xlalign
