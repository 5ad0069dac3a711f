#include "xlalign/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>

#include "xlalign/checkpoint.hpp"
#include "xlalign/cipher.hpp"
#include "xlalign/encoders.hpp"
#include "xlalign/errors.hpp"
#include "xlalign/mapping.hpp"

namespace xlalign {

namespace fs = std::filesystem;
using encoders::EncoderParams;
using objectives::TraceRecord;
using text::IdSequence;
using text::TokenSequence;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag, std::uint64_t n = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h ^ splitmix64(n)));
}

std::vector<TokenSequence> tokenize_lines(std::span<const std::string> lines) {
  std::vector<TokenSequence> out;
  for (const auto& l : lines) {
    auto t = text::tokenize(l);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ValidationError("missing " + what + " file " + p.string());
}

// Per-language data shared by every framework.
struct LanguageData {
  std::string lang;
  std::vector<TokenSequence> mono;  // every training sentence of the language
  text::Vocabulary vocab;
  std::optional<text::WordVectors> vectors;
  Tensor sif_table;
};

struct Model {
  eval::AlignedEmbedder embedder;  // src = non-pivot language, tgt = pivot
  Checkpoint checkpoint;
  std::string checkpoint_name;
  std::vector<TraceRecord> trace;
  std::optional<mapping::AlignmentMap> map;
};

using Trainer = std::function<Model(const text::ParallelCorpus& split)>;

class Experiment {
 public:
  Experiment(const ExperimentConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log) {}

  RunResult run(Stage stage);

 private:
  void say(const std::string& msg) {
    if (!log_) return;
    std::lock_guard<std::mutex> lock(log_mutex_);
    *log_ << msg << '\n';
  }

  LanguageData load_language(const std::string& lang);
  objectives::TrainSchedule schedule(std::size_t steps, const std::string& tag, std::uint64_t n) const;
  EncoderParams fresh_encoder(const LanguageData& d, const std::string& tag, std::uint64_t n) const;
  EncoderParams pretrain_sdae(const LanguageData& d, std::vector<TraceRecord>* trace);
  Trainer make_trainer(const LanguageData& pivot, const LanguageData& other);

  std::function<Tensor(std::span<const TokenSequence>)> bilstm_embedder(
      std::shared_ptr<const EncoderParams> enc, const text::Vocabulary& vocab) const;
  std::function<Tensor(std::span<const TokenSequence>)> sif_embedder(const LanguageData& d,
                                                                     Tensor table) const;

  std::string write(const std::string& name, const std::function<void(const fs::path&)>& fn) {
    fn(out_ / name);
    files_.push_back(name);
    return name;
  }

  const ExperimentConfig& cfg_;
  std::ostream* log_;
  std::mutex log_mutex_;
  fs::path out_;
  std::vector<std::string> files_;
  std::vector<std::unique_ptr<LanguageData>> langs_;
};

LanguageData Experiment::load_language(const std::string& lang) {
  LanguageData d;
  d.lang = lang;
  const fs::path train = cfg_.data_file(cfg_.train_prefix, "." + lang);
  require_file(train, "training corpus");
  d.mono = tokenize_lines(text::read_lines(train));
  d.vocab = text::build_vocab(std::span<const TokenSequence>(d.mono), cfg_.min_count);
  if (!cfg_.vectors_prefix.empty()) {
    const fs::path vec = cfg_.data_file(cfg_.vectors_prefix, "." + lang + ".vec");
    require_file(vec, "word vector");
    d.vectors = text::read_word2vec(vec);
    if (d.vectors->vectors.cols() != cfg_.embed_dim) {
      throw ValidationError("config: embed_dim is " + std::to_string(cfg_.embed_dim) + " but " +
                            vec.string() + " has dim " + std::to_string(d.vectors->vectors.cols()));
    }
    d.sif_table = encoders::table_from_vectors(*d.vectors, d.vocab);
  } else {
    Rng rng(derive_seed(cfg_.seed, "sif-table." + lang));
    d.sif_table = Tensor::normal(d.vocab.size(), cfg_.embed_dim, 1.0, rng);
  }
  return d;
}

objectives::TrainSchedule Experiment::schedule(std::size_t steps, const std::string& tag,
                                               std::uint64_t n) const {
  objectives::TrainSchedule s;
  s.batch_size = cfg_.batch;
  s.steps = steps;
  s.adam.lr = cfg_.lr;
  s.seed = derive_seed(cfg_.seed, tag, n);
  return s;
}

EncoderParams Experiment::fresh_encoder(const LanguageData& d, const std::string& tag,
                                        std::uint64_t n) const {
  Rng rng(derive_seed(cfg_.seed, "init." + tag + "." + d.lang, n));
  auto enc = EncoderParams::init(d.lang, d.vocab.size(), cfg_.embed_dim, cfg_.hidden_dim, rng);
  if (d.vectors) enc.load_embeddings(*d.vectors, d.vocab);
  return enc;
}

// Monolingual SDAE pre-training with a throwaway decoder.
EncoderParams Experiment::pretrain_sdae(const LanguageData& d, std::vector<TraceRecord>* trace) {
  if (cfg_.pretrain_steps == 0) throw ValidationError("config: pretrain_steps must be positive");
  say("pretraining " + d.lang + " encoder with SDAE for " + std::to_string(cfg_.pretrain_steps) +
      " steps");
  EncoderParams enc = fresh_encoder(d, "sdae", 0);
  Rng rng(derive_seed(cfg_.seed, "init.sdae-decoder." + d.lang));
  auto dec = objectives::DecoderParams::init(d.lang, d.vocab.size(), cfg_.embed_dim,
                                             enc.output_dim(), cfg_.decoder_hidden, rng);
  const auto ids = encoders::encode_all(d.vocab, d.mono);
  std::vector<objectives::Seq2SeqTask> tasks{{d.lang, ids, ids, true}};
  std::vector<EncoderParams*> encs{&enc};
  text::NoiseParams noise{cfg_.p_del, cfg_.p_swap, derive_seed(cfg_.seed, "noise." + d.lang)};
  auto result = objectives::train_joint_seq2seq(tasks, encs, dec,
                                                schedule(cfg_.pretrain_steps, "sdae." + d.lang, 0),
                                                noise);
  if (trace) trace->insert(trace->end(), result.trace.begin(), result.trace.end());
  return enc;
}

std::function<Tensor(std::span<const TokenSequence>)> Experiment::bilstm_embedder(
    std::shared_ptr<const EncoderParams> enc, const text::Vocabulary& vocab) const {
  return [enc, &vocab](std::span<const TokenSequence> sentences) {
    return encoders::encode_bilstm_maxpool(encoders::encode_all(vocab, sentences), *enc);
  };
}

std::function<Tensor(std::span<const TokenSequence>)> Experiment::sif_embedder(
    const LanguageData& d, Tensor table) const {
  const double a = cfg_.sif_a;
  const bool remove_pc = cfg_.sif_remove_pc;
  return [&d, table = std::move(table), a, remove_pc](std::span<const TokenSequence> sentences) {
    Tensor e = encoders::encode_sif(encoders::encode_all(d.vocab, sentences), table, d.vocab, a);
    if (remove_pc) encoders::remove_common_component(e);
    return e;
  };
}

Trainer Experiment::make_trainer(const LanguageData& pivot, const LanguageData& other) {
  const std::string pair = other.lang + "-" + pivot.lang;
  switch (cfg_.framework) {
    case Framework::Transfer: {
      std::vector<TraceRecord> pre_trace;
      auto pivot_enc = std::make_shared<const EncoderParams>(pretrain_sdae(pivot, &pre_trace));
      return [this, &pivot, &other, pivot_enc, pre_trace](const text::ParallelCorpus& split) {
        say("transfer " + other.lang + " -> " + pivot.lang + " on " + std::to_string(split.size()) +
            " pairs");
        auto fresh = std::make_shared<EncoderParams>(fresh_encoder(other, "transfer", split.size()));
        auto src = encoders::encode_all(other.vocab, split.source_side());
        auto tgt = encoders::encode_all(pivot.vocab, split.target_side());
        auto res = objectives::train_transfer(src, tgt, *pivot_enc, *fresh,
                                              schedule(cfg_.steps, "transfer." + other.lang, split.size()));
        Model m;
        m.trace = pre_trace;
        m.trace.insert(m.trace.end(), res.trace.begin(), res.trace.end());
        pivot_enc->save_to(m.checkpoint, "pivot");
        fresh->save_to(m.checkpoint, "encoder");
        m.checkpoint.comments.push_back("framework=transfer pair=" + other.lang + "-" + pivot.lang);
        m.checkpoint_name = "model." + other.lang + ".ckpt";
        m.embedder = {bilstm_embedder(fresh, other.vocab), bilstm_embedder(pivot_enc, pivot.vocab)};
        return m;
      };
    }
    case Framework::JointSeq2Seq: {
      return [this, &pivot, &other](const text::ParallelCorpus& split) {
        say("joint seq2seq " + other.lang + "+" + pivot.lang + " on " + std::to_string(split.size()) +
            " pairs");
        auto enc_p = std::make_shared<EncoderParams>(fresh_encoder(pivot, "joint", split.size()));
        auto enc_o = std::make_shared<EncoderParams>(fresh_encoder(other, "joint", split.size()));
        Rng rng(derive_seed(cfg_.seed, "init.joint-decoder", split.size()));
        auto dec = objectives::DecoderParams::init(pivot.lang, pivot.vocab.size(), cfg_.embed_dim,
                                                   enc_p->output_dim(), cfg_.decoder_hidden, rng);
        const auto mono = encoders::encode_all(pivot.vocab, pivot.mono);
        std::vector<objectives::Seq2SeqTask> tasks{
            {pivot.lang, mono, mono, true},
            {other.lang, encoders::encode_all(other.vocab, split.source_side()),
             encoders::encode_all(pivot.vocab, split.target_side()), false}};
        std::vector<EncoderParams*> encs{enc_p.get(), enc_o.get()};
        text::NoiseParams noise{cfg_.p_del, cfg_.p_swap, derive_seed(cfg_.seed, "noise.joint", split.size())};
        auto res = objectives::train_joint_seq2seq(tasks, encs, dec,
                                                   schedule(cfg_.steps, "joint." + other.lang, split.size()),
                                                   noise);
        Model m;
        m.trace = std::move(res.trace);
        enc_p->save_to(m.checkpoint, "encoder." + pivot.lang);
        enc_o->save_to(m.checkpoint, "encoder." + other.lang);
        dec.save_to(m.checkpoint, "decoder");
        m.checkpoint.comments.push_back("framework=joint_seq2seq pair=" + other.lang + "-" + pivot.lang);
        m.checkpoint_name = "model." + other.lang + ".ckpt";
        m.embedder = {bilstm_embedder(enc_o, other.vocab), bilstm_embedder(enc_p, pivot.vocab)};
        return m;
      };
    }
    case Framework::JointInferSent: {
      // Trained once on the NLI data; parallel splits are not used.
      const fs::path np = cfg_.data_file(cfg_.nli_prefix, "." + pivot.lang + ".tsv");
      const fs::path no = cfg_.data_file(cfg_.nli_prefix, "." + other.lang + ".tsv");
      require_file(np, "NLI");
      require_file(no, "NLI");
      std::vector<objectives::NliDataset> data{cipher::read_nli(np, pivot.vocab, pivot.lang),
                                              cipher::read_nli(no, other.vocab, other.lang)};
      auto enc_p = std::make_shared<EncoderParams>(fresh_encoder(pivot, "infersent", 0));
      auto enc_o = std::make_shared<EncoderParams>(fresh_encoder(other, "infersent", 0));
      Rng rng(derive_seed(cfg_.seed, "init.head"));
      auto head = objectives::ClassifierHead::init(enc_p->output_dim(), cfg_.head_hidden, rng);
      say("joint InferSent on " + std::to_string(data[0].size()) + " examples per language");
      std::vector<EncoderParams*> encs{enc_p.get(), enc_o.get()};
      auto res = objectives::train_joint_infersent(data, encs, head,
                                                   schedule(cfg_.steps, "infersent", 0));
      Model m;
      m.trace = std::move(res.trace);
      for (std::size_t pi = 0; pi < 2; ++pi) {
        for (std::size_t hi = 0; hi < 2; ++hi) {
          const double acc = objectives::infersent_accuracy(data[pi], data[hi], pi ? *enc_o : *enc_p,
                                                            hi ? *enc_o : *enc_p, head);
          m.trace.push_back({cfg_.steps, "nli_train_acc", data[pi].lang + "-" + data[hi].lang, acc});
        }
      }
      enc_p->save_to(m.checkpoint, "encoder." + pivot.lang);
      enc_o->save_to(m.checkpoint, "encoder." + other.lang);
      head.save_to(m.checkpoint, "head");
      m.checkpoint.comments.push_back("framework=joint_infersent pair=" + other.lang + "-" + pivot.lang);
      m.checkpoint_name = "model." + other.lang + ".ckpt";
      m.embedder = {bilstm_embedder(enc_o, other.vocab), bilstm_embedder(enc_p, pivot.vocab)};
      auto shared = std::make_shared<const Model>(std::move(m));
      return [shared](const text::ParallelCorpus&) { return *shared; };
    }
    case Framework::SentenceMap: {
      std::function<Tensor(std::span<const TokenSequence>)> embed_p, embed_o;
      Checkpoint base;
      std::vector<TraceRecord> pre_trace;
      if (cfg_.encoder == EncoderKind::Sif) {
        embed_p = sif_embedder(pivot, pivot.sif_table);
        embed_o = sif_embedder(other, other.sif_table);
      } else {
        auto enc_p = std::make_shared<const EncoderParams>(pretrain_sdae(pivot, &pre_trace));
        auto enc_o = std::make_shared<const EncoderParams>(pretrain_sdae(other, &pre_trace));
        enc_p->save_to(base, "encoder." + pivot.lang);
        enc_o->save_to(base, "encoder." + other.lang);
        embed_p = bilstm_embedder(enc_p, pivot.vocab);
        embed_o = bilstm_embedder(enc_o, other.vocab);
      }
      return [this, &pivot, &other, embed_p, embed_o, base, pre_trace](const text::ParallelCorpus& split) {
        say("sentence map " + other.lang + " -> " + pivot.lang + " on " + std::to_string(split.size()) +
            " pairs");
        const auto src = split.source_side();
        const auto tgt = split.target_side();
        auto map = mapping::fit_orthogonal_map(embed_o(src), embed_p(tgt),
                                               {cfg_.center, other.lang, pivot.lang});
        Model m;
        m.trace = pre_trace;
        m.trace.push_back({split.size(), "map_residual", other.lang + "-" + pivot.lang, map.residual});
        m.checkpoint = base;
        m.checkpoint_name = "model." + other.lang + ".ckpt";
        m.map = map;
        auto shared_map = std::make_shared<const mapping::AlignmentMap>(std::move(map));
        m.embedder = {[embed_o, shared_map](std::span<const TokenSequence> s) {
                        return mapping::apply_map(embed_o(s), *shared_map);
                      },
                      embed_p};
        return m;
      };
    }
    case Framework::WordDictMap: {
      const fs::path dict_path = cfg_.data_file(cfg_.dictionary, "");
      require_file(dict_path, "dictionary");
      auto dict = text::read_dictionary(dict_path);
      auto map = mapping::fit_dictionary_map(*other.vectors, *pivot.vectors, dict,
                                             {cfg_.center, other.lang, pivot.lang});
      say("dictionary map fitted on " + std::to_string(map.pairs) + " word pairs");
      Model m;
      m.trace.push_back({0, "map_residual", pair, map.residual});
      m.checkpoint_name = "";
      Tensor mapped = mapping::apply_map(other.sif_table, map);
      m.embedder = {sif_embedder(other, std::move(mapped)), sif_embedder(pivot, pivot.sif_table)};
      m.map = std::move(map);
      auto shared = std::make_shared<const Model>(std::move(m));
      return [shared](const text::ParallelCorpus&) { return *shared; };
    }
  }
  throw ValidationError("config: unsupported framework");
}

std::string model_tag(const ExperimentConfig& cfg) {
  return to_string(cfg.framework) + "/" + to_string(cfg.encoder);
}

RunResult Experiment::run(Stage stage) {
  cfg_.validate();
  RunResult result;
  out_ = cfg_.input_path(cfg_.out_dir);
  fs::create_directories(out_);
  result.out_dir = out_;

  for (const auto& lang : cfg_.languages) {
    langs_.push_back(std::make_unique<LanguageData>(load_language(lang)));
  }
  const LanguageData& pivot = *langs_.front();

  std::vector<eval::NeighborQuery> neighbor_queries;
  std::vector<std::pair<const LanguageData*, Tensor>> pivot_test_dump;
  bool pivot_dumped = false;

  for (std::size_t li = 1; li < langs_.size(); ++li) {
    const LanguageData& other = *langs_[li];
    const fs::path train_o = cfg_.data_file(cfg_.train_prefix, "." + other.lang);
    const fs::path train_p = cfg_.data_file(cfg_.train_prefix, "." + pivot.lang);
    const fs::path test_o = cfg_.data_file(cfg_.test_prefix, "." + other.lang);
    const fs::path test_p = cfg_.data_file(cfg_.test_prefix, "." + pivot.lang);
    require_file(test_o, "test corpus");
    require_file(test_p, "test corpus");
    auto corpus = text::load_parallel(train_o, train_p, other.lang, pivot.lang);
    auto test = text::load_parallel(test_o, test_p, other.lang, pivot.lang);
    if (test.size() < cfg_.test_size) {
      throw ValidationError("config: test_size is " + std::to_string(cfg_.test_size) + " but the " +
                            other.lang + "-" + pivot.lang + " test corpus has " +
                            std::to_string(test.size()) + " pairs");
    }
    test = test.slice(0, cfg_.test_size);
    const auto plan = text::make_splits(corpus, cfg_.splits);
    say(other.lang + "-" + pivot.lang + ": " + std::to_string(corpus.size()) + " training pairs, " +
        std::to_string(test.size()) + " test pairs");

    Trainer trainer = make_trainer(pivot, other);
    std::optional<Model> final_model;
    if (stage == Stage::Curve || stage == Stage::Full) {
      std::vector<std::optional<Model>> models(plan.count());
      eval::ModelFactory factory = [&](const text::ParallelCorpus& split) {
        Model m = trainer(split);
        for (std::size_t i = 0; i < plan.count(); ++i) {
          if (plan.sizes[i] == split.size()) models[i] = m;
        }
        return m.embedder;
      };
      auto points = eval::accuracy_curve(model_tag(cfg_), factory, corpus, plan, test);
      result.curve.insert(result.curve.end(), points.begin(), points.end());
      final_model = std::move(models.back());
    } else {
      final_model = trainer(corpus.slice(0, plan.sizes.back()));
    }
    if (stage == Stage::Curve) continue;

    Model& m = *final_model;
    result.trace.insert(result.trace.end(), m.trace.begin(), m.trace.end());
    if (!m.checkpoint_name.empty()) {
      write(m.checkpoint_name, [&](const fs::path& p) { save_checkpoint(p, m.checkpoint); });
    }
    if (m.map) {
      write("map." + other.lang + "-" + pivot.lang + ".ckpt",
            [&](const fs::path& p) { mapping::save_map(p, *m.map); });
    }

    const auto test_src = test.source_side();
    const auto test_tgt = test.target_side();
    Tensor e_src = m.embedder.embed_src(test_src);
    Tensor e_tgt = m.embedder.embed_tgt(test_tgt);
    auto names = [](std::size_t n) {
      std::vector<std::string> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(std::to_string(i));
      return v;
    };
    write("emb.test." + other.lang + ".txt",
          [&](const fs::path& p) { text::write_word2vec(p, names(e_src.rows()), e_src); });
    if (!pivot_dumped) {
      write("emb.test." + pivot.lang + ".txt",
            [&](const fs::path& p) { text::write_word2vec(p, names(e_tgt.rows()), e_tgt); });
      pivot_dumped = true;
    }

    // Pivot-language queries with mono- and cross-lingual neighbours.
    std::vector<std::string> src_texts, tgt_texts;
    for (const auto& s : test_src) src_texts.push_back(text::join(s));
    for (const auto& s : test_tgt) tgt_texts.push_back(text::join(s));
    const std::size_t k = std::min(cfg_.neighbors_k, test.size());
    for (std::size_t q = 0; q < std::min(cfg_.neighbor_queries, test.size()); ++q) {
      if (li == 1) neighbor_queries.push_back({tgt_texts[q], {}});
      if (li == 1) {
        neighbor_queries[q].blocks.push_back(
            {pivot.lang, eval::nearest_neighbors(e_tgt.row(q), e_tgt, tgt_texts, k)});
      }
      neighbor_queries[q].blocks.push_back(
          {other.lang, eval::nearest_neighbors(e_tgt.row(q), e_src, src_texts, k)});
    }

    if ((stage == Stage::Cldc || stage == Stage::Full) && !cfg_.docs_prefix.empty()) {
      const fs::path dp = cfg_.data_file(cfg_.docs_prefix, "." + pivot.lang + ".tsv");
      const fs::path dl = cfg_.data_file(cfg_.docs_prefix, "." + other.lang + ".tsv");
      if (fs::exists(dp) && fs::exists(dl)) {
        auto docs_p = cipher::read_documents(dp);
        auto docs_o = cipher::read_documents(dl);
        eval::CldcConfig cc;
        cc.steps = cfg_.cldc_steps;
        cc.seed = derive_seed(cfg_.seed, "cldc." + other.lang);
        say("CLDC " + pivot.lang + " <-> " + other.lang);
        result.cldc.push_back(eval::cldc_train_eval(docs_p, docs_o, m.embedder.embed_tgt,
                                                    m.embedder.embed_src, cc, pivot.lang, other.lang));
        result.cldc.push_back(eval::cldc_train_eval(docs_o, docs_p, m.embedder.embed_src,
                                                    m.embedder.embed_tgt, cc, other.lang, pivot.lang));
      } else if (stage == Stage::Cldc) {
        throw ValidationError("missing document files " + dp.string() + " / " + dl.string());
      }
    }
  }

  if (stage == Stage::Curve || stage == Stage::Full) {
    write("curve.csv", [&](const fs::path& p) { eval::write_curve_csv(p, result.curve); });
  }
  if (stage != Stage::Curve) {
    write("trace.csv", [&](const fs::path& p) { objectives::write_trace_csv(p, result.trace); });
    write("neighbors.txt", [&](const fs::path& p) { eval::write_neighbor_report(p, neighbor_queries); });
    for (const auto& d : langs_) {
      write("vocab." + d->lang + ".txt", [&](const fs::path& p) { d->vocab.save(p); });
    }
  }
  if (!result.cldc.empty()) {
    write("cldc.csv", [&](const fs::path& p) { eval::write_cldc_csv(p, result.cldc); });
  }

  // The manifest lists the full configuration, so it is enough to re-run.
  std::vector<std::string> lines;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg_.hash()));
  lines.push_back("config_hash=" + std::string(hash));
  lines.push_back("seed=" + std::to_string(cfg_.seed));
  lines.push_back("base_dir=" + fs::absolute(cfg_.base_dir).lexically_normal().string());
  for (const auto& [key, value] : cfg_.entries()) lines.push_back("config." + key + "=" + value);
  for (const auto& f : files_) lines.push_back("file=" + f);
  text::write_lines(out_ / "manifest.txt", lines);
  files_.push_back("manifest.txt");
  result.files = files_;
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, Stage stage, std::ostream* log) {
  Experiment e(cfg, log);
  return e.run(stage);
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace xlalign
