#include "xlalign/adam.hpp"

#include <cmath>

namespace xlalign {

AdamState::AdamState(const Tensor& like, AdamConfig cfg)
    : config(cfg), m(like.shape(), 0.0), v(like.shape(), 0.0) {}

double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double total = std::sqrt(sq);
  if (!std::isfinite(total)) throw NumericError("non-finite gradient norm");
  if (max_norm > 0.0 && total > max_norm) {
    const double s = max_norm / total;
    for (Parameter* p : params)
      for (auto& g : p->grad.data()) g *= s;
  }
  return total;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
  if (!param.same_shape(grad)) {
    throw DimensionError("adam_step: param " + param.shape_str() + " vs grad " + grad.shape_str());
  }
  if (state.m.empty()) state = AdamState(param, state.config);
  if (!state.m.same_shape(param)) {
    throw DimensionError("adam_step: state " + state.m.shape_str() + " vs param " +
                         param.shape_str());
  }
  grad.require_finite("adam gradient");
  const AdamConfig& c = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    param[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (Parameter* p : params_) {
    if (p->grad.empty() || !p->grad.same_shape(p->value)) p->grad = Tensor(p->value.shape(), 0.0);
    states_.emplace_back(p->value, config);
  }
}

void AdamOptimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void AdamOptimizer::step() {
  ++steps_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i]->trainable) continue;
    adam_step(params_[i]->value, params_[i]->grad, states_[i]);
  }
}

}  // namespace xlalign
