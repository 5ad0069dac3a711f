#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xlalign/graph.hpp"

namespace xlalign {

class Rng;

/// One LSTM direction. The weight matrix stacks input and recurrent weights,
/// rows [x; h_prev], and its columns hold the four gate blocks in the order
/// input, forget, candidate, output.
struct LstmParams {
  Parameter weight;  // (input_dim + hidden_dim) x 4*hidden_dim
  Parameter bias;    // 1 x 4*hidden_dim
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  // Forget-gate bias 1.0, everything else uniform in [-1/sqrt(H), 1/sqrt(H)].
  static LstmParams init(const std::string& name, std::size_t input_dim, std::size_t hidden_dim,
                         Rng& rng);

  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

// Batched cell step on plain tensors: x is B x d, h_prev and c_prev are B x H.
// Rank-1 arguments are treated as a batch of one.
LstmState lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                    const LstmParams& params);

struct LstmVars {
  Graph::Var h;
  Graph::Var c;
};

// Differentiable version; weight and bias are graph leaves created once per
// graph so every timestep shares them.
LstmVars lstm_step(Graph& g, Graph::Var x, Graph::Var h_prev, Graph::Var c_prev,
                   Graph::Var weight, Graph::Var bias, std::size_t hidden_dim);

}  // namespace xlalign
