#include "doctest.h"

#include "support/gradcheck.hpp"
#include "xlalign/errors.hpp"
#include "xlalign/graph.hpp"
#include "xlalign/rng.hpp"

#include <cmath>

using namespace xlalign;
using xlalign::testing::check_gradients;

namespace {

Parameter random_param(const std::string& name, std::size_t r, std::size_t c, Rng& rng) {
  return Parameter(name, Tensor::normal(r, c, 1.0, rng));
}

}  // namespace

TEST_CASE("sum gives ones, dot(x, x) gives 2x") {
  Rng rng(1);
  Parameter x = random_param("x", 3, 4, rng);
  {
    Graph g;
    g.backward(g.sum(g.param(x)));
    for (double v : x.grad.data()) CHECK(v == 1.0);
  }
  x.zero_grad();
  {
    Graph g;
    auto v = g.param(x);
    g.backward(g.dot(v, v));
    for (std::size_t i = 0; i < x.value.size(); ++i) CHECK(x.grad[i] == doctest::Approx(2 * x.value[i]));
  }
}

TEST_CASE("backward rejects non-scalar loss") {
  Rng rng(2);
  Parameter x = random_param("x", 2, 2, rng);
  Graph g;
  auto v = g.param(x);
  CHECK_THROWS_AS(g.backward(v), DimensionError);
}

TEST_CASE("unreachable leaves get zero gradient") {
  Rng rng(3);
  Parameter a = random_param("a", 2, 2, rng), b = random_param("b", 2, 2, rng);
  a.zero_grad();
  b.zero_grad();
  Graph g;
  auto va = g.param(a);
  auto vb = g.param(b);
  (void)vb;
  g.backward(g.sum(va));
  for (double v : b.grad.data()) CHECK(v == 0.0);
  const Tensor gb = g.grad(vb);
  for (double v : gb.data()) CHECK(v == 0.0);
}

TEST_CASE("every op passes a finite-difference check") {
  Rng rng(4);
  Parameter a = random_param("a", 3, 4, rng), b = random_param("b", 4, 2, rng);
  Parameter c = random_param("c", 3, 4, rng), r = random_param("r", 1, 4, rng);
  std::vector<Parameter*> params{&a, &b, &c, &r};
  const std::vector<int> ids{2, 0, 2, 1};
  const std::vector<double> mask{1, 0, 1};
  const std::vector<double> step_mask{1, 1, 1, 0, 1, 0};
  const std::vector<int> targets{0, 1, 3};
  const std::vector<double> weights{1.0, 0.5, 0.0};

  auto build = [&](Graph& g) {
    auto va = g.param(a), vb = g.param(b), vc = g.param(c), vr = g.param(r);
    auto t1 = g.tanh(g.add_row(g.mul(va, vc), vr));
    auto t2 = g.sigmoid(g.sub(va, g.scale(vc, 0.7)));
    auto cat = g.concat_cols({t1, g.abs(t2)});
    auto sl = g.slice_cols(cat, 2, 4);
    auto mm = g.matmul(sl, vb);
    auto gathered = g.gather_rows(va, ids);
    auto blended = g.blend_rows(t1, t2, mask);
    std::vector<Graph::Var> steps{t1, blended};
    auto pooled = g.masked_max(steps, step_mask);
    auto ce = g.softmax_cross_entropy(g.add(t2, vc), targets, weights, 1.5);
    return g.add(g.add(g.sum(mm), g.dot(gathered, gathered)),
                 g.add(g.sum(g.mul(pooled, pooled)), ce));
  };
  auto res = check_gradients(params, build);
  INFO("worst " << res.worst);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("softmax_at is shift invariant and normalised") {
  std::vector<double> z{1.0, -2.0, 0.5};
  std::vector<double> shifted{101.0, 98.0, 100.5};
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(softmax_at(z, k) == doctest::Approx(softmax_at(shifted, k)).epsilon(1e-12));
    total += softmax_at(z, k);
  }
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("frozen parameters enter as constants") {
  Rng rng(5);
  Parameter x = random_param("x", 2, 2, rng);
  x.trainable = false;
  x.zero_grad();
  Graph g;
  g.backward(g.sum(g.param(x)));
  for (double v : x.grad.data()) CHECK(v == 0.0);
}
