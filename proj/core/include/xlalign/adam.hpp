#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xlalign/graph.hpp"

namespace xlalign {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for one parameter tensor.
struct AdamState {
  AdamConfig config;
  Tensor m;
  Tensor v;
  std::size_t t = 0;

  AdamState() = default;
  AdamState(const Tensor& like, AdamConfig cfg);
};

// Scales gradients so their joint L2 norm is at most max_norm and returns the
// norm before clipping. max_norm <= 0 only measures.
double clip_global_norm(std::span<Parameter* const> params, double max_norm);

// One bias-corrected Adam update of param in place.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

/// Adam over a fixed set of parameters, one AdamState each.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Parameter*> params, AdamConfig config);

  void zero_grad();
  double clip_grad_norm(double max_norm) { return clip_global_norm(params_, max_norm); }
  void step();

  std::span<Parameter* const> parameters() const { return params_; }
  std::size_t steps() const { return steps_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<AdamState> states_;
  std::size_t steps_ = 0;
};

}  // namespace xlalign
