#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xlalign/tensor.hpp"

namespace xlalign {

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  // Frozen parameters enter graphs as constants and never receive gradient.
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

/// Tape of differentiable operations over rank-2 values. Nodes are appended in
/// evaluation order, so node ids are already a topological order. A Graph is
/// built fresh for every forward pass and discarded after backward().
class Graph {
 public:
  struct Var {
    std::size_t id = 0;
  };

  Var constant(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into p.grad.
  Var param(Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // a[r, :] + row[0, :] for every row r.
  Var add_row(Var a, Var row);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var abs(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
  }
  Var slice_cols(Var a, std::size_t start, std::size_t width);
  // Row lookup: out[r, :] = table[ids[r], :].
  Var gather_rows(Var table, std::span<const int> ids);
  // out[r, :] = mask[r] * fresh[r, :] + (1 - mask[r]) * prev[r, :], mask in {0, 1}.
  Var blend_rows(Var fresh, Var prev, std::span<const double> mask);
  // Elementwise max over timesteps, skipping masked-out (row, step) cells.
  // mask[t * rows + r] selects whether step t is live for row r.
  Var masked_max(std::span<const Var> steps, std::span<const double> mask);
  Var sum(Var a);
  Var dot(Var a, Var b);
  // sum_r weights[r] * (-log softmax(logits[r, :])[targets[r]]) / normalizer
  Var softmax_cross_entropy(Var logits, std::span<const int> targets,
                            std::span<const double> weights, double normalizer);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient of the last backward() w.r.t. this node; zero if unreachable.
  Tensor grad(Var v) const;

  // Reverse sweep from a scalar (1x1) node. Throws DimensionError otherwise,
  // NumericError if the loss is not finite.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Parameter* param = nullptr;
    std::function<void(Graph&, std::size_t)> backprop;
  };

  Var push(Tensor value, std::function<void(Graph&, std::size_t)> backprop = {});
  Tensor& grad_ref(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  std::vector<Node> nodes_;
};

double softmax_at(std::span<const double> logits, std::size_t k);

}  // namespace xlalign
