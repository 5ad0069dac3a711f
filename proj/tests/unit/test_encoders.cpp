#include "doctest.h"

#include "support/gradcheck.hpp"
#include "support/reference.hpp"
#include "xlalign/encoders.hpp"
#include "xlalign/errors.hpp"
#include "xlalign/svd.hpp"

#include <cmath>

using namespace xlalign;
using namespace xlalign::encoders;
using xlalign::testing::ref_bilstm_maxpool;
using xlalign::testing::ref_bilstm_states;

namespace {

EncoderParams make_encoder(std::size_t V, std::size_t D, std::size_t H, std::uint64_t seed) {
  Rng rng(seed);
  return EncoderParams::init("x", V, D, H, rng);
}

}  // namespace

TEST_CASE("single token: concat of one forward and one backward step") {
  auto p = make_encoder(8, 5, 3, 1);
  auto e = encode_bilstm_maxpool(IdSequence{6}, p);
  auto states = ref_bilstm_states({6}, p);
  REQUIRE(e.dim() == 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(e.values[k] - states[0][k]) < 1e-12);
}

TEST_CASE("dimension is 2H") {
  auto p = make_encoder(10, 6, 4, 2);
  CHECK(encode_bilstm_maxpool(IdSequence{4, 5, 6, 7}, p).dim() == 8);
  CHECK(p.output_dim() == 8);
}

TEST_CASE("matches the scalar reference") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = make_encoder(12, 5, 4, seed);
    IdSequence s{4, 9, 5};
    auto e = encode_bilstm_maxpool(s, p);
    auto ref = ref_bilstm_maxpool(s, p);
    for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(e.values[k] - ref[k]) < 1e-12);
  }
}

TEST_CASE("max-pool dominance and batch equivalence with padding") {
  auto p = make_encoder(20, 4, 3, 9);
  Rng rng(10);
  std::vector<IdSequence> batch;
  for (int i = 0; i < 7; ++i) {
    IdSequence s;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t k = 0; k < n; ++k) s.push_back(4 + static_cast<int>(rng.below(16)));
    batch.push_back(s);
  }
  Tensor all = encode_bilstm_maxpool(batch, p, 3);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto single = encode_bilstm_maxpool(batch[i], p);
    auto states = ref_bilstm_states(batch[i], p);
    for (std::size_t k = 0; k < single.dim(); ++k) {
      CHECK(std::abs(all(i, k) - single.values[k]) < 1e-12);
      bool hit = false;
      for (const auto& st : states) hit = hit || std::abs(st[k] - single.values[k]) < 1e-12;
      CHECK(hit);
    }
  }
}

TEST_CASE("bilstm is order sensitive, sif is not") {
  auto p = make_encoder(10, 4, 3, 4);
  auto a = encode_bilstm_maxpool(IdSequence{4, 5, 6}, p);
  auto b = encode_bilstm_maxpool(IdSequence{5, 4, 6}, p);
  double diff = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) diff = std::max(diff, std::abs(a.values[k] - b.values[k]));
  CHECK(diff > 1e-6);

  std::vector<std::string> lines{"p q r p", "q s"};
  auto vocab = text::build_vocab(std::span<const std::string>(lines), 1);
  Rng rng(5);
  Tensor table = Tensor::normal(vocab.size(), 4, 1.0, rng);
  auto s1 = encode_sif(vocab.encode({"p", "q", "s"}), table, vocab, 1e-3);
  auto s2 = encode_sif(vocab.encode({"s", "p", "q"}), table, vocab, 1e-3);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(s1.values[k] - s2.values[k]) < 1e-12);
}

TEST_CASE("determinism") {
  auto p = make_encoder(10, 4, 3, 6);
  auto a = encode_bilstm_maxpool(IdSequence{4, 7, 8}, p);
  auto b = encode_bilstm_maxpool(IdSequence{4, 7, 8}, p);
  CHECK(a.values == b.values);
}

TEST_CASE("errors: empty sentence, id out of range") {
  auto p = make_encoder(6, 3, 2, 7);
  CHECK_THROWS_AS(encode_bilstm_maxpool(IdSequence{}, p), DimensionError);
  CHECK_THROWS_AS(encode_bilstm_maxpool(IdSequence{4, 6}, p), DimensionError);
}

TEST_CASE("sif examples and weighted-sum oracle") {
  std::vector<std::string> lines{"w x y z v w w", "x y v u"};
  auto vocab = text::build_vocab(std::span<const std::string>(lines), 1);
  Rng rng(8);
  Tensor table = Tensor::normal(vocab.size(), 5, 1.0, rng);
  const double a = 0.05;
  const int w = vocab.id("w");
  auto weight = [&](int id) {
    return a / (a + static_cast<double>(vocab.frequency(id)) / static_cast<double>(vocab.total()));
  };

  auto single = encode_sif(IdSequence{w}, table, vocab, a);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(single.values[k] - weight(w) * table(w, k)) < 1e-12);
  auto twice = encode_sif(IdSequence{w, w}, table, vocab, a);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(twice.values[k] - single.values[k]) < 1e-12);

  IdSequence five = vocab.encode({"w", "x", "u", "v", "y"});
  auto e = encode_sif(five, table, vocab, a);
  for (std::size_t k = 0; k < 5; ++k) {
    double s = 0.0;
    for (int id : five) s += weight(id) * table(static_cast<std::size_t>(id), k);
    CHECK(std::abs(e.values[k] - s / 5.0) < 1e-12);
  }
  CHECK_THROWS_AS(encode_sif(IdSequence{}, table, vocab, a), DimensionError);
  CHECK(e.dim() == 5);
}

TEST_CASE("common component removal leaves rows orthogonal to it") {
  Rng rng(3);
  Tensor e = Tensor::normal(30, 6, 1.0, rng);
  for (std::size_t i = 0; i < 30; ++i) e(i, 0) += 5.0;
  const SvdResult dec = svd(e);
  std::vector<double> v(dec.vt.row(0).begin(), dec.vt.row(0).end());
  remove_common_component(e);
  for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(dot(e.row(i), v)) < 1e-10);
}

TEST_CASE("encode_batch gradients match finite differences") {
  auto p = make_encoder(9, 3, 2, 12);
  std::vector<IdSequence> batch{{4, 5, 6}, {7}, {8, 4}};
  auto params = p.parameters();
  auto res = xlalign::testing::check_gradients(params, [&](Graph& g) {
    auto out = encode_batch(g, bind(g, p), batch);
    return g.dot(out, out);
  });
  INFO("worst " << res.worst);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("frozen embeddings are excluded from parameters") {
  auto p = make_encoder(9, 3, 2, 13);
  CHECK(p.parameters().size() == 5);
  p.set_embeddings_trainable(false);
  CHECK(p.parameters().size() == 4);
}

TEST_CASE("checkpoint round trip") {
  auto p = make_encoder(9, 3, 2, 14);
  Checkpoint c;
  p.save_to(c, "enc");
  auto back = EncoderParams::load_from(c, "enc", "x");
  CHECK(back.embeddings.value == p.embeddings.value);
  CHECK(back.forward.weight.value == p.forward.weight.value);
  CHECK(back.backward.bias.value == p.backward.bias.value);
}
