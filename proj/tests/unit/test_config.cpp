#include "doctest.h"

#include "support/tempdir.hpp"
#include "xlalign/config.hpp"
#include "xlalign/errors.hpp"

#include <fstream>

using namespace xlalign;

TEST_CASE("defaults") {
  ExperimentConfig c;
  CHECK(c.framework == Framework::Transfer);
  CHECK(c.embed_dim == 32);
  CHECK(c.hidden_dim == 32);
  CHECK(c.batch == 16);
  CHECK(c.lr == 1e-3);
  CHECK(c.sif_a == 1e-3);
  CHECK(c.p_del == 0.1);
  CHECK(c.p_swap == 0.1);
  CHECK(c.splits == std::vector<std::size_t>{100, 200, 500, 1000, 2000});
  CHECK(c.pivot() == "a");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parse key=value text") {
  auto c = parse_config(
      "# toy run\n"
      "framework = joint_seq2seq\n"
      "\n"
      "languages=en, de ,fr\n"
      "lr=3e-3\n"
      "splits=10,20\n"
      "center=true\n"
      "seed=99\n",
      "/tmp/base");
  CHECK(c.framework == Framework::JointSeq2Seq);
  CHECK(c.languages == std::vector<std::string>{"en", "de", "fr"});
  CHECK(c.lr == 3e-3);
  CHECK(c.splits == std::vector<std::size_t>{10, 20});
  CHECK(c.center);
  CHECK(c.seed == 99);
  CHECK(c.input_path("data") == std::filesystem::path("/tmp/base/data"));
  CHECK(c.input_path("/abs") == std::filesystem::path("/abs"));
  CHECK(c.data_file("train", ".en") == std::filesystem::path("/tmp/base/./train.en"));
}

TEST_CASE("validation errors name the field") {
  CHECK_THROWS_WITH_AS(parse_config("framework=foo\n", "."), doctest::Contains("framework"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("encoder=cnn\n", "."), doctest::Contains("encoder"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("bogus=1\n", "."), doctest::Contains("bogus"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("steps=-4\n", "."), doctest::Contains("steps"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("lr=fast\n", "."), doctest::Contains("lr"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("no equals sign\n", "."), doctest::Contains("line 1"), ValidationError);

  auto invalid = [](const std::string& text) { parse_config(text, ".").validate(); };
  CHECK_THROWS_WITH_AS(invalid("framework=transfer\nencoder=sif\n"), doctest::Contains("bilstm_maxpool"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(invalid("framework=word_dict_map\nencoder=sif\n"), doctest::Contains("dictionary"),
                       ValidationError);
  CHECK_THROWS_AS(invalid("languages=a\n"), ValidationError);
  CHECK_THROWS_AS(invalid("languages=a,a\n"), ValidationError);
  CHECK_THROWS_AS(invalid("splits=20,10\n"), ValidationError);
  CHECK_THROWS_AS(invalid("p_del=1.5\n"), ValidationError);
  CHECK_NOTHROW(invalid("framework=sentence_map\nencoder=sif\n"));
}

TEST_CASE("overrides and hashing") {
  ExperimentConfig c;
  const auto h0 = c.hash();
  CHECK(ExperimentConfig{}.hash() == h0);
  apply_override(c, "steps=10");
  CHECK(c.steps == 10);
  CHECK(c.hash() != h0);
  CHECK_THROWS_AS(apply_override(c, "steps"), ValidationError);

  bool has_seed = false;
  for (const auto& [k, v] : c.entries()) {
    if (k == "seed") has_seed = v == "1";
    // Every entry feeds back through set().
    ExperimentConfig d;
    CHECK_NOTHROW(d.set(k, v));
  }
  CHECK(has_seed);
}

TEST_CASE("load_config resolves against the file's directory") {
  xlalign::testing::TempDir dir("cfg");
  {
    std::ofstream os(dir / "x.cfg");
    os << "data_dir=corpus\nsteps=7\n";
  }
  auto c = load_config(dir / "x.cfg");
  CHECK(c.steps == 7);
  CHECK(c.base_dir == dir.path());
  CHECK(c.data_file("train", ".a") == dir.path() / "corpus" / "train.a");
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ValidationError);
}
