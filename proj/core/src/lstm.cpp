#include "xlalign/lstm.hpp"

#include <cmath>

#include "xlalign/rng.hpp"

namespace xlalign {

LstmParams LstmParams::init(const std::string& name, std::size_t input_dim,
                            std::size_t hidden_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.weight = Parameter(name + ".W",
                       Tensor::uniform(input_dim + hidden_dim, 4 * hidden_dim, -bound, bound, rng));
  Tensor b = Tensor::uniform(1, 4 * hidden_dim, -bound, bound, rng);
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) b[j] = 1.0;
  p.bias = Parameter(name + ".b", std::move(b));
  return p;
}

LstmVars lstm_step(Graph& g, Graph::Var x, Graph::Var h_prev, Graph::Var c_prev,
                   Graph::Var weight, Graph::Var bias, std::size_t hidden_dim) {
  const std::size_t H = hidden_dim;
  Graph::Var z = g.add_row(g.matmul(g.concat_cols({x, h_prev}), weight), bias);
  Graph::Var in_gate = g.sigmoid(g.slice_cols(z, 0, H));
  Graph::Var forget_gate = g.sigmoid(g.slice_cols(z, H, H));
  Graph::Var candidate = g.tanh(g.slice_cols(z, 2 * H, H));
  Graph::Var out_gate = g.sigmoid(g.slice_cols(z, 3 * H, H));
  Graph::Var c = g.add(g.mul(forget_gate, c_prev), g.mul(in_gate, candidate));
  Graph::Var h = g.mul(out_gate, g.tanh(c));
  return {h, c};
}

LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmParams& params) {
  const std::size_t H = params.hidden_dim;
  if (x.cols() != params.input_dim || h_prev.cols() != H || c_prev.cols() != H ||
      x.rows() != h_prev.rows() || x.rows() != c_prev.rows()) {
    throw DimensionError("lstm_step shape mismatch: x " + x.shape_str() + ", h " +
                         h_prev.shape_str() + ", c " + c_prev.shape_str() + " for d=" +
                         std::to_string(params.input_dim) + " H=" + std::to_string(H));
  }
  Graph g;
  LstmVars out = lstm_step(g, g.constant(x), g.constant(h_prev), g.constant(c_prev),
                           g.constant(params.weight.value), g.constant(params.bias.value), H);
  return {g.value(out.h), g.value(out.c)};
}

}  // namespace xlalign
