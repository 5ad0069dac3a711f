#include "xlalign/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace xlalign {

namespace {

// Replaces columns flagged in `deficient` by unit vectors orthogonal to every
// other column of u. Each replacement is the standard basis vector with the
// largest component outside the current span.
void complete_basis(Tensor& u, const std::vector<bool>& deficient) {
  const std::size_t m = u.rows();
  const std::size_t r = u.cols();
  std::vector<bool> valid(r);
  for (std::size_t k = 0; k < r; ++k) valid[k] = !deficient[k];
  auto residual = [&](std::size_t basis) {
    std::vector<double> cand(m, 0.0);
    cand[basis] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < r; ++j) {
        if (!valid[j]) continue;
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += u(i, j) * cand[i];
        for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, j);
      }
    }
    return cand;
  };
  for (std::size_t k = 0; k < r; ++k) {
    if (valid[k]) continue;
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t b = 0; b < m; ++b) {
      auto cand = residual(b);
      const double nrm = norm(cand);
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(cand);
      }
    }
    for (std::size_t i = 0; i < m; ++i) u(i, k) = best[i] / best_norm;
    valid[k] = true;
  }
}

SvdResult svd_tall(const Tensor& input, const SvdOptions& options) {
  const std::size_t m = input.rows();
  const std::size_t n = input.cols();
  Tensor a = input;
  Tensor v = Tensor::identity(n);

  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          alpha += ap * ap;
          beta += aq * aq;
          gamma += ap * aq;
        }
        if (gamma == 0.0 || std::abs(gamma) <= options.tolerance * std::sqrt(alpha * beta)) {
          continue;
        }
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("svd: one-sided Jacobi did not converge within " +
                           std::to_string(options.max_sweeps) + " sweeps for " +
                           input.shape_str());
  }

  std::vector<double> sigma(n);
  for (std::size_t k = 0; k < n; ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) sq += a(i, k) * a(i, k);
    sigma[k] = std::sqrt(sq);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  SvdResult out{Tensor::matrix(m, n), std::vector<double>(n), Tensor::matrix(n, n)};
  const double smax = n ? sigma[order[0]] : 0.0;
  const double cutoff = smax * std::numeric_limits<double>::epsilon() * static_cast<double>(m);
  std::vector<bool> deficient(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.s[k] = sigma[src];
    if (sigma[src] <= cutoff || sigma[src] == 0.0) {
      deficient[k] = true;
    } else {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = a(i, src) / sigma[src];
    }
    for (std::size_t j = 0; j < n; ++j) out.vt(k, j) = v(j, src);
  }
  if (std::any_of(deficient.begin(), deficient.end(), [](bool b) { return b; })) {
    complete_basis(out.u, deficient);
  }
  return out;
}

}  // namespace

SvdResult svd(const Tensor& m, const SvdOptions& options) {
  if (m.rank() != 2) throw DimensionError("svd expects a matrix, got " + m.shape_str());
  m.require_finite("svd input");
  if (m.rows() >= m.cols()) return svd_tall(m, options);
  SvdResult t = svd_tall(transpose(m), options);
  // M^T = U' S V'^T  =>  M = V' S U'^T
  return SvdResult{transpose(t.vt), std::move(t.s), transpose(t.u)};
}

}  // namespace xlalign
