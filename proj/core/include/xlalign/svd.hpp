#pragma once

#include <vector>

#include "xlalign/tensor.hpp"

namespace xlalign {

struct SvdResult {
  Tensor u;                 // m x r, orthonormal columns
  std::vector<double> s;    // r singular values, non-increasing, >= 0
  Tensor vt;                // r x n, orthonormal rows
};

struct SvdOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;
};

/// Thin SVD by one-sided (Hestenes) Jacobi rotations, r = min(m, n).
/// Converged once no column pair has |<a_p, a_q>| > tol * |a_p| |a_q|.
/// Throws ConvergenceError when the sweep budget runs out.
SvdResult svd(const Tensor& m, const SvdOptions& options = {});

}  // namespace xlalign
