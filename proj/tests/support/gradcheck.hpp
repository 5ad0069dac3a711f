#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "xlalign/graph.hpp"

namespace xlalign::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[<index>]"
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor); the floor keeps entries whose
// true gradient is ~0 from dominating through round-off.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares backward() against central differences with step h for every
/// entry (or every `stride`-th entry) of every parameter. `build` must create
/// a fresh graph-independent loss each call and be deterministic.
inline GradCheckResult check_gradients(const std::vector<Parameter*>& params,
                                       const std::function<Graph::Var(Graph&)>& build,
                                       double h = 1e-5, std::size_t stride = 1) {
  for (auto* p : params) p->zero_grad();
  {
    Graph g;
    g.backward(build(g));
  }
  std::vector<Tensor> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval = [&] {
    Graph g;
    return g.value(build(g))[0];
  };
  GradCheckResult r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); i += stride) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = eval();
      p.value[i] = saved - h;
      const double down = eval();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[k][i], numeric);
      ++r.checked;
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

}  // namespace xlalign::testing
