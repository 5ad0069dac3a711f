// xlalign command-line driver.
//
// Exit codes: 0 success, 1 validation error, 2 runtime or numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xlalign/cipher.hpp"
#include "xlalign/config.hpp"
#include "xlalign/errors.hpp"
#include "xlalign/eval.hpp"
#include "xlalign/experiment.hpp"
#include "xlalign/mapping.hpp"
#include "xlalign/text.hpp"

namespace fs = std::filesystem;
using namespace xlalign;

namespace {

struct ConfigArgs {
  std::string config;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config, "Experiment config (key=value lines)")->required();
  cmd->add_option("--out-dir", args.out_dir, "Output directory; overrides out_dir");
  cmd->add_option("--set", args.overrides, "Override a config entry, key=value");
  cmd->add_flag("-q,--quiet", args.quiet, "No progress output");
}

ExperimentConfig resolve_config(const ConfigArgs& args) {
  ExperimentConfig cfg = load_config(args.config);
  for (const auto& o : args.overrides) apply_override(cfg, o);
  if (!args.out_dir.empty()) {
    // --out-dir is relative to the working directory, not the config file.
    cfg.out_dir = fs::absolute(args.out_dir).string();
  }
  return cfg;
}

int run_stage(const ConfigArgs& args, Stage stage, std::optional<Framework> force = std::nullopt) {
  ExperimentConfig cfg = resolve_config(args);
  if (force) cfg.framework = *force;
  RunResult r = run_experiment(cfg, stage, args.quiet ? nullptr : &std::cerr);
  for (const auto& p : r.curve) {
    std::printf("%zu %s %s %.4f\n", p.size, p.model.c_str(), p.direction.c_str(), p.accuracy);
  }
  for (const auto& c : r.cldc) {
    std::printf("cldc %s->%s %.4f\n", c.train_lang.c_str(), c.test_lang.c_str(), c.accuracy);
  }
  std::printf("wrote %zu files to %s\n", r.files.size(), r.out_dir.string().c_str());
  return 0;
}

fs::path under(const std::string& out_dir, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute() || out_dir.empty()) return p;
  fs::create_directories(out_dir);
  return fs::path(out_dir) / p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual sentence embedding alignment toolkit"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic two-language cipher corpus");
  cipher::GenerateOptions gen_opts;
  std::string gen_out;
  std::string gen_langs = "a,b";
  gen->add_option("--out-dir", gen_out, "Destination directory")->required();
  gen->add_option("--vocab-size", gen_opts.spec.vocab_size, "Words per language")->capture_default_str();
  gen->add_option("--sentences", gen_opts.spec.n_sentences, "Training pairs")->capture_default_str();
  gen->add_option("--test-size", gen_opts.test_size, "Held-out pairs")->capture_default_str();
  gen->add_option("--min-len", gen_opts.spec.min_len)->capture_default_str();
  gen->add_option("--max-len", gen_opts.spec.max_len)->capture_default_str();
  gen->add_option("--zipf", gen_opts.spec.zipf, "Token frequency exponent")->capture_default_str();
  gen->add_option("--seed", gen_opts.spec.seed)->capture_default_str();
  gen->add_option("--langs", gen_langs, "Two language tags, comma separated")->capture_default_str();
  gen->add_option("--nli", gen_opts.nli_examples, "Toy NLI examples (0 disables)")->capture_default_str();
  gen->add_option("--docs", gen_opts.docs, "Topic documents (0 disables)")->capture_default_str();
  gen->add_option("--embed-dim", gen_opts.embed_dim, "Word vector dim (0 disables)")->capture_default_str();
  gen->add_option("--vector-noise", gen_opts.vector_noise)->capture_default_str();

  // config-driven stages
  ConfigArgs train_args, transfer_args, run_args, curve_args, cldc_args;
  auto* train = app.add_subcommand("train", "Train the configured framework on the largest split");
  add_config_options(train, train_args);
  auto* transfer = app.add_subcommand("transfer", "Train a new encoder against a frozen pivot");
  add_config_options(transfer, transfer_args);
  auto* curve = app.add_subcommand("curve", "Accuracy vs. parallel corpus size");
  add_config_options(curve, curve_args);
  auto* cldc = app.add_subcommand("eval-cldc", "Cross-lingual document classification");
  add_config_options(cldc, cldc_args);
  auto* run = app.add_subcommand("run", "Train, align and evaluate");
  add_config_options(run, run_args);

  // fit-map
  auto* fit = app.add_subcommand("fit-map", "Fit an orthogonal map between embedding spaces");
  std::string fit_src, fit_tgt, fit_dict, fit_out = "map.ckpt", fit_dir, fit_src_lang = "src",
                                               fit_tgt_lang = "tgt";
  bool fit_center = false;
  fit->add_option("--src", fit_src, "Source embeddings (word2vec text)")->required();
  fit->add_option("--tgt", fit_tgt, "Target embeddings (word2vec text)")->required();
  fit->add_option("--dictionary", fit_dict,
                  "Word dictionary; without it rows are paired by position");
  fit->add_option("--out", fit_out, "Map file")->capture_default_str();
  fit->add_option("--out-dir", fit_dir, "Directory for --out");
  fit->add_option("--src-lang", fit_src_lang)->capture_default_str();
  fit->add_option("--tgt-lang", fit_tgt_lang)->capture_default_str();
  fit->add_flag("--center", fit_center, "Mean-centre both sides before fitting");

  // eval-retrieval
  auto* ret = app.add_subcommand("eval-retrieval", "Translation retrieval accuracy");
  std::string ret_src, ret_tgt, ret_map, ret_out, ret_dir;
  ret->add_option("--src", ret_src, "Source sentence embeddings")->required();
  ret->add_option("--tgt", ret_tgt, "Target sentence embeddings")->required();
  ret->add_option("--map", ret_map, "Map applied to the source side first");
  ret->add_option("--out", ret_out, "CSV report (direction,n,correct,accuracy)");
  ret->add_option("--out-dir", ret_dir, "Directory for --out");

  // neighbors
  auto* nn = app.add_subcommand("neighbors", "Nearest-neighbour report");
  std::string nn_queries, nn_query_texts, nn_out = "neighbors.txt", nn_dir;
  std::vector<std::string> nn_pools, nn_texts, nn_langs;
  std::size_t nn_k = 5, nn_count = 3;
  nn->add_option("--queries", nn_queries, "Query embeddings")->required();
  nn->add_option("--query-texts", nn_query_texts, "One line per query row")->required();
  nn->add_option("--pool", nn_pools, "Pool embeddings (repeatable)")->required();
  nn->add_option("--pool-texts", nn_texts, "One line per pool row (repeatable)")->required();
  nn->add_option("--lang", nn_langs, "Label per pool (repeatable)");
  nn->add_option("-k", nn_k, "Neighbours per pool")->capture_default_str();
  nn->add_option("--count", nn_count, "Number of queries")->capture_default_str();
  nn->add_option("--out", nn_out)->capture_default_str();
  nn->add_option("--out-dir", nn_dir, "Directory for --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      auto langs = CLI::detail::split(gen_langs, ',');
      if (langs.size() != 2) throw ValidationError("--langs expects exactly two tags");
      gen_opts.spec.lang_a = langs[0];
      gen_opts.spec.lang_b = langs[1];
      auto files = cipher::write_cipher_dataset(gen_out, gen_opts);
      for (const auto& f : files) std::printf("%s\n", (fs::path(gen_out) / f).string().c_str());
      return 0;
    }
    if (*train) return run_stage(train_args, Stage::Train);
    if (*transfer) return run_stage(transfer_args, Stage::Train, Framework::Transfer);
    if (*curve) return run_stage(curve_args, Stage::Curve);
    if (*cldc) return run_stage(cldc_args, Stage::Cldc);
    if (*run) return run_stage(run_args, Stage::Full);

    if (*fit) {
      auto src = text::read_word2vec(fit_src);
      auto tgt = text::read_word2vec(fit_tgt);
      mapping::FitOptions opts{fit_center, fit_src_lang, fit_tgt_lang};
      mapping::AlignmentMap m;
      if (!fit_dict.empty()) {
        auto dict = text::read_dictionary(fit_dict);
        m = mapping::fit_dictionary_map(src, tgt, dict, opts);
      } else {
        if (src.words.size() != tgt.words.size()) {
          throw ValidationError("fit-map: " + std::to_string(src.words.size()) + " source rows vs " +
                                std::to_string(tgt.words.size()) + " target rows");
        }
        m = mapping::fit_orthogonal_map(src.vectors, tgt.vectors, opts);
      }
      const fs::path out = under(fit_dir, fit_out);
      mapping::save_map(out, m);
      std::printf("pairs=%zu residual=%.6g orthogonality=%.3g -> %s\n", m.pairs, m.residual,
                  mapping::orthogonality_error(m.w), out.string().c_str());
      return 0;
    }

    if (*ret) {
      Tensor src = text::read_word2vec(ret_src).vectors;
      Tensor tgt = text::read_word2vec(ret_tgt).vectors;
      std::string sl = "src", tl = "tgt";
      if (!ret_map.empty()) {
        auto m = mapping::load_map(ret_map);
        src = mapping::apply_map(src, m);
        sl = m.src_lang;
        tl = m.tgt_lang;
      }
      auto fwd = eval::retrieval_accuracy(src, tgt, sl + "-" + tl);
      auto bwd = eval::retrieval_accuracy(tgt, src, tl + "-" + sl);
      std::vector<std::string> lines{"direction,n,correct,accuracy"};
      for (const auto* r : {&fwd, &bwd}) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6f", r->direction.c_str(), r->n, r->correct,
                      r->accuracy);
        lines.push_back(buf);
      }
      for (const auto& l : lines) std::printf("%s\n", l.c_str());
      if (!ret_out.empty()) text::write_lines(under(ret_dir, ret_out), lines);
      return 0;
    }

    if (*nn) {
      if (nn_pools.size() != nn_texts.size()) {
        throw ValidationError("neighbors: every --pool needs a matching --pool-texts");
      }
      Tensor queries = text::read_word2vec(nn_queries).vectors;
      auto qtexts = text::read_lines(nn_query_texts);
      if (qtexts.size() != queries.rows()) {
        throw ValidationError("neighbors: " + std::to_string(queries.rows()) + " query rows but " +
                              std::to_string(qtexts.size()) + " query lines");
      }
      std::vector<Tensor> pools;
      std::vector<std::vector<std::string>> texts;
      for (std::size_t i = 0; i < nn_pools.size(); ++i) {
        pools.push_back(text::read_word2vec(nn_pools[i]).vectors);
        texts.push_back(text::read_lines(nn_texts[i]));
        if (texts.back().size() != pools.back().rows()) {
          throw ValidationError("neighbors: pool " + nn_pools[i] + " and its texts differ in length");
        }
      }
      std::vector<eval::NeighborQuery> report;
      for (std::size_t q = 0; q < std::min(nn_count, queries.rows()); ++q) {
        eval::NeighborQuery nq{qtexts[q], {}};
        for (std::size_t i = 0; i < pools.size(); ++i) {
          const std::string lang = i < nn_langs.size() ? nn_langs[i] : "pool" + std::to_string(i);
          nq.blocks.push_back({lang, eval::nearest_neighbors(queries.row(q), pools[i], texts[i],
                                                             std::min(nn_k, pools[i].rows()))});
        }
        report.push_back(std::move(nq));
      }
      const fs::path out = under(nn_dir, nn_out);
      eval::write_neighbor_report(out, report);
      std::printf("%s\n", out.string().c_str());
      return 0;
    }
  } catch (...) {
    return exit_code_for_current_exception(std::cerr);
  }
  return 0;
}
