#include "xlalign/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "xlalign/errors.hpp"

namespace xlalign {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ValidationError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config: " + key + " expects a real number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError("config: " + key + " expects true/false, got '" + v + "'");
}

std::string fmt_real(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::string to_string(Framework f) {
  switch (f) {
    case Framework::JointSeq2Seq: return "joint_seq2seq";
    case Framework::JointInferSent: return "joint_infersent";
    case Framework::Transfer: return "transfer";
    case Framework::SentenceMap: return "sentence_map";
    case Framework::WordDictMap: return "word_dict_map";
  }
  return "?";
}

std::string to_string(EncoderKind e) {
  return e == EncoderKind::Sif ? "sif" : "bilstm_maxpool";
}

Framework parse_framework(const std::string& s) {
  for (auto f : {Framework::JointSeq2Seq, Framework::JointInferSent, Framework::Transfer,
                 Framework::SentenceMap, Framework::WordDictMap}) {
    if (to_string(f) == s) return f;
  }
  throw ValidationError("config: framework '" + s +
                        "' is not one of joint_seq2seq, joint_infersent, transfer, sentence_map, "
                        "word_dict_map");
}

EncoderKind parse_encoder(const std::string& s) {
  if (s == "bilstm_maxpool") return EncoderKind::BiLstmMaxPool;
  if (s == "sif") return EncoderKind::Sif;
  throw ValidationError("config: encoder '" + s + "' is not one of bilstm_maxpool, sif");
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "framework") framework = parse_framework(v);
  else if (key == "encoder") encoder = parse_encoder(v);
  else if (key == "languages") languages = split_list(v);
  else if (key == "data_dir") data_dir = v;
  else if (key == "out_dir") out_dir = v;
  else if (key == "train_prefix") train_prefix = v;
  else if (key == "test_prefix") test_prefix = v;
  else if (key == "vectors_prefix") vectors_prefix = v;
  else if (key == "nli_prefix") nli_prefix = v;
  else if (key == "docs_prefix") docs_prefix = v;
  else if (key == "dictionary") dictionary = v;
  else if (key == "embed_dim") embed_dim = parse_size(key, v);
  else if (key == "hidden_dim") hidden_dim = parse_size(key, v);
  else if (key == "decoder_hidden") decoder_hidden = parse_size(key, v);
  else if (key == "head_hidden") head_hidden = parse_size(key, v);
  else if (key == "lr") lr = parse_real(key, v);
  else if (key == "batch") batch = parse_size(key, v);
  else if (key == "steps") steps = parse_size(key, v);
  else if (key == "pretrain_steps") pretrain_steps = parse_size(key, v);
  else if (key == "sif_a") sif_a = parse_real(key, v);
  else if (key == "sif_remove_pc") sif_remove_pc = parse_bool(key, v);
  else if (key == "p_del") p_del = parse_real(key, v);
  else if (key == "p_swap") p_swap = parse_real(key, v);
  else if (key == "center") center = parse_bool(key, v);
  else if (key == "splits") {
    splits.clear();
    for (const auto& s : split_list(v)) splits.push_back(parse_size(key, s));
  }
  else if (key == "min_count") min_count = parse_size(key, v);
  else if (key == "test_size") test_size = parse_size(key, v);
  else if (key == "neighbors_k") neighbors_k = parse_size(key, v);
  else if (key == "neighbor_queries") neighbor_queries = parse_size(key, v);
  else if (key == "cldc_steps") cldc_steps = parse_size(key, v);
  else if (key == "seed") seed = parse_size(key, v);
  else throw ValidationError("config: unknown key '" + key + "'");
}

void ExperimentConfig::validate() const {
  if (languages.size() < 2) throw ValidationError("config: languages needs at least two tags");
  if (std::set<std::string>(languages.begin(), languages.end()).size() != languages.size()) {
    throw ValidationError("config: languages contains duplicates");
  }
  if (framework == Framework::WordDictMap && encoder != EncoderKind::Sif) {
    throw ValidationError("config: framework word_dict_map requires encoder sif");
  }
  if ((framework == Framework::JointSeq2Seq || framework == Framework::JointInferSent ||
       framework == Framework::Transfer) &&
      encoder != EncoderKind::BiLstmMaxPool) {
    throw ValidationError("config: framework " + to_string(framework) +
                          " requires encoder bilstm_maxpool");
  }
  if (framework == Framework::WordDictMap && dictionary.empty()) {
    throw ValidationError("config: framework word_dict_map needs a dictionary");
  }
  if (encoder == EncoderKind::Sif && vectors_prefix.empty() && framework == Framework::WordDictMap) {
    throw ValidationError("config: framework word_dict_map needs vectors_prefix");
  }
  if (framework == Framework::JointInferSent && nli_prefix.empty()) {
    throw ValidationError("config: framework joint_infersent needs nli_prefix");
  }
  for (auto [name, v] : {std::pair{"embed_dim", embed_dim}, {"hidden_dim", hidden_dim},
                         {"decoder_hidden", decoder_hidden}, {"head_hidden", head_hidden},
                         {"batch", batch}, {"steps", steps}, {"min_count", min_count},
                         {"test_size", test_size}}) {
    if (v == 0) throw ValidationError(std::string("config: ") + name + " must be positive");
  }
  if (test_size < 2) throw ValidationError("config: test_size must be at least 2");
  if (!(lr > 0.0)) throw ValidationError("config: lr must be positive");
  if (!(sif_a > 0.0)) throw ValidationError("config: sif_a must be positive");
  if (!(p_del >= 0.0 && p_del <= 1.0)) throw ValidationError("config: p_del must lie in [0, 1]");
  if (!(p_swap >= 0.0 && p_swap <= 1.0)) throw ValidationError("config: p_swap must lie in [0, 1]");
  if (splits.empty()) throw ValidationError("config: splits must not be empty");
  for (std::size_t i = 1; i < splits.size(); ++i) {
    if (splits[i] <= splits[i - 1]) throw ValidationError("config: splits must be strictly increasing");
  }
}

std::filesystem::path ExperimentConfig::input_path(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path ExperimentConfig::data_file(const std::string& prefix,
                                                  const std::string& suffix) const {
  return input_path(data_dir) / (prefix + suffix);
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::string split_text;
  for (std::size_t i = 0; i < splits.size(); ++i) split_text += (i ? "," : "") + std::to_string(splits[i]);
  return {
      {"framework", to_string(framework)},
      {"encoder", to_string(encoder)},
      {"languages", join_list(languages)},
      {"data_dir", data_dir},
      {"out_dir", out_dir},
      {"train_prefix", train_prefix},
      {"test_prefix", test_prefix},
      {"vectors_prefix", vectors_prefix},
      {"nli_prefix", nli_prefix},
      {"docs_prefix", docs_prefix},
      {"dictionary", dictionary},
      {"embed_dim", std::to_string(embed_dim)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"decoder_hidden", std::to_string(decoder_hidden)},
      {"head_hidden", std::to_string(head_hidden)},
      {"lr", fmt_real(lr)},
      {"batch", std::to_string(batch)},
      {"steps", std::to_string(steps)},
      {"pretrain_steps", std::to_string(pretrain_steps)},
      {"sif_a", fmt_real(sif_a)},
      {"sif_remove_pc", sif_remove_pc ? "true" : "false"},
      {"p_del", fmt_real(p_del)},
      {"p_swap", fmt_real(p_swap)},
      {"center", center ? "true" : "false"},
      {"splits", split_text},
      {"min_count", std::to_string(min_count)},
      {"test_size", std::to_string(test_size)},
      {"neighbors_k", std::to_string(neighbors_k)},
      {"neighbor_queries", std::to_string(neighbor_queries)},
      {"cldc_steps", std::to_string(cldc_steps)},
      {"seed", std::to_string(seed)},
  };
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical entries.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : entries()) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  auto base = path.parent_path();
  return parse_config(ss.str(), base.empty() ? std::filesystem::path(".") : base);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("--set expects key=value, got '" + assignment + "'");
  }
  cfg.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

}  // namespace xlalign
