#include "doctest.h"

#include "xlalign/adam.hpp"
#include "xlalign/errors.hpp"

#include <cmath>
#include <limits>

using namespace xlalign;

TEST_CASE("zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::matrix({{1.5, -2.0}, {0.25, 3.0}});
  Tensor before = p;
  AdamState s(p, {});
  for (int i = 0; i < 5; ++i) adam_step(p, Tensor::matrix(2, 2), s);
  CHECK(p == before);
  CHECK(s.t == 5);
}

TEST_CASE("first step moves by about lr") {
  for (double g : {0.3, -7.0, 1e-3}) {
    Tensor p = Tensor::vector({2.0});
    AdamState s(p, {});
    adam_step(p, Tensor::vector({g}), s);
    CHECK(std::abs(std::abs(p[0] - 2.0) - 1e-3) < 1e-7);
    CHECK((p[0] - 2.0) * g < 0.0);
  }
}

TEST_CASE("five steps on theta^2 match a reference implementation") {
  // Reference: textbook bias-corrected Adam written out in scalars.
  double theta = 1.0, m = 0.0, v = 0.0;
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> ref;
  for (int t = 1; t <= 5; ++t) {
    const double g = 2.0 * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
    ref.push_back(theta);
  }
  Tensor p = Tensor::vector({1.0});
  AdamState s(p, {});
  for (int t = 0; t < 5; ++t) {
    adam_step(p, Tensor::vector({2.0 * p[0]}), s);
    CHECK(std::abs(p[0] - ref[t]) < 1e-12);
  }
}

TEST_CASE("shape mismatch and non-finite gradient are rejected") {
  Tensor p = Tensor::vector({1.0, 2.0});
  AdamState s(p, {});
  CHECK_THROWS_AS(adam_step(p, Tensor::vector({1.0}), s), DimensionError);
  Tensor bad = Tensor::vector({1.0, 1.0});
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(adam_step(p, bad, s), NumericError);
}

TEST_CASE("global norm clipping") {
  Parameter a("a", Tensor::vector({0, 0})), b("b", Tensor::vector({0}));
  a.grad = Tensor::matrix({{3.0, 0.0}});
  b.grad = Tensor::matrix({{4.0}});
  std::vector<Parameter*> ps{&a, &b};
  CHECK(clip_global_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(b.grad[0] == doctest::Approx(0.8));
  CHECK(clip_global_norm(ps, 10.0) == doctest::Approx(1.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
}

TEST_CASE("optimizer skips frozen parameters and counts steps") {
  Parameter a("a", Tensor::vector({1.0})), b("b", Tensor::vector({1.0}));
  b.trainable = false;
  AdamOptimizer opt({&a, &b}, {});
  a.grad.fill(1.0);
  b.grad.fill(1.0);
  opt.step();
  CHECK(a.value[0] < 1.0);
  CHECK(b.value[0] == 1.0);
  CHECK(opt.steps() == 1);
}
