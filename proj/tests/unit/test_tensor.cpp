#include "doctest.h"

#include "xlalign/errors.hpp"
#include "xlalign/rng.hpp"
#include "xlalign/tensor.hpp"

#include <cmath>
#include <limits>

using namespace xlalign;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul identity and zero") {
  Rng rng(3);
  Tensor b = Tensor::normal(3, 2, 1.0, rng);
  CHECK(matmul(Tensor::identity(3), b) == b);
  Tensor z = Tensor::matrix(2, 2);
  CHECK(matmul(z, Tensor::normal(2, 2, 1.0, rng)) == z);
}

TEST_CASE("matmul matches triple loop") {
  Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  CHECK(matmul(a, b) == naive_matmul(a, b));
  CHECK(matmul(a, b) == Tensor::matrix({{19, 22}, {43, 50}}));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    Tensor x = Tensor::normal(m, k, 1.0, rng);
    Tensor y = Tensor::normal(k, n, 1.0, rng);
    CHECK(max_abs_diff(matmul(x, y), naive_matmul(x, y)) < 1e-12);
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a = Tensor::matrix(2, 3), b = Tensor::matrix(2, 3);
  try {
    (void)matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("tensor rejects non-finite data and bad sizes") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({1, 2}, std::vector<double>{1, std::numeric_limits<double>::quiet_NaN()}),
                  NumericError);
}

TEST_CASE("gemm_accumulate honours transpose flags") {
  Rng rng(5);
  Tensor a = Tensor::normal(4, 3, 1.0, rng);
  Tensor b = Tensor::normal(4, 2, 1.0, rng);
  Tensor c = Tensor::matrix(3, 2, 1.0);
  gemm_accumulate(a, true, b, false, c);
  Tensor expect = naive_matmul(transpose(a), b) + Tensor::matrix(3, 2, 1.0);
  CHECK(max_abs_diff(c, expect) < 1e-12);
}
