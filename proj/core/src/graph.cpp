#include "xlalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xlalign {

namespace {

Tensor as_matrix(Tensor t) {
  if (t.rank() == 2) return t;
  if (t.rank() == 1) {
    std::size_t n = t.size();
    std::vector<double> data(t.data().begin(), t.data().end());
    return Tensor({1, n}, std::move(data));
  }
  throw DimensionError("graph values must be rank 1 or 2, got " + t.shape_str());
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + " shape mismatch: " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

}  // namespace

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(as_matrix(std::move(v))), grad(value.shape(), 0.0) {}

Graph::Var Graph::push(Tensor value, std::function<void(Graph&, std::size_t)> backprop) {
  nodes_.push_back(Node{std::move(value), Tensor{}, nullptr, std::move(backprop)});
  return Var{nodes_.size() - 1};
}

Tensor& Graph::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Graph::Var Graph::constant(Tensor value) { return push(as_matrix(std::move(value))); }

Graph::Var Graph::param(Parameter& p) {
  Var v = push(p.value);
  if (p.trainable) nodes_[v.id].param = &p;
  return v;
}

Graph::Var Graph::matmul(Var a, Var b) {
  Tensor out = xlalign::matmul(value(a), value(b));
  return push(std::move(out), [a, b](Graph& g, std::size_t self) {
    const Tensor& dc = g.nodes_[self].grad;
    gemm_accumulate(dc, false, g.value(b), true, g.grad_ref(a.id));
    gemm_accumulate(g.value(a), true, dc, false, g.grad_ref(b.id));
  });
}

Graph::Var Graph::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return push(std::move(out), [a, b](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    Tensor& gb = g.grad_ref(b.id);
    for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i];
  });
}

Graph::Var Graph::add_row(Var a, Var row) {
  const Tensor& va = value(a);
  const Tensor& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw DimensionError("add_row shape mismatch: " + va.shape_str() + " vs " + vr.shape_str());
  }
  Tensor out = va;
  const std::size_t cols = va.cols();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += vr[c];
  return push(std::move(out), [a, row](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    Tensor& gr = g.grad_ref(row.id);
    const std::size_t cols = d.cols();
    for (std::size_t r = 0; r < d.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) gr[c] += d(r, c);
  });
}

Graph::Var Graph::sub(Var a, Var b) {
  require_same(value(a), value(b), "sub");
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return push(std::move(out), [a, b](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    Tensor& gb = g.grad_ref(b.id);
    for (std::size_t i = 0; i < d.size(); ++i) gb[i] -= d[i];
  });
}

Graph::Var Graph::mul(Var a, Var b) {
  require_same(value(a), value(b), "mul");
  Tensor out = value(a);
  const Tensor& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  return push(std::move(out), [a, b](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * vb[i];
    Tensor& gb = g.grad_ref(b.id);
    for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i] * va[i];
  });
}

Graph::Var Graph::scale(Var a, double s) {
  Tensor out = value(a);
  for (auto& x : out.data()) x *= s;
  return push(std::move(out), [a, s](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += s * d[i];
  });
}

Graph::Var Graph::sigmoid(Var a) {
  Tensor out = value(a);
  for (auto& x : out.data()) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(out), [a](Graph& g, std::size_t self) {
    const Node& n = g.nodes_[self];
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double y = n.value[i];
      ga[i] += n.grad[i] * y * (1.0 - y);
    }
  });
}

Graph::Var Graph::tanh(Var a) {
  Tensor out = value(a);
  for (auto& x : out.data()) x = std::tanh(x);
  return push(std::move(out), [a](Graph& g, std::size_t self) {
    const Node& n = g.nodes_[self];
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double y = n.value[i];
      ga[i] += n.grad[i] * (1.0 - y * y);
    }
  });
}

Graph::Var Graph::abs(Var a) {
  Tensor out = value(a);
  for (auto& x : out.data()) x = std::abs(x);
  return push(std::move(out), [a](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    const Tensor& va = g.value(a);
    Tensor& ga = g.grad_ref(a.id);
    // Subgradient 0 at the kink.
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (va[i] > 0.0) ga[i] += d[i];
      else if (va[i] < 0.0) ga[i] -= d[i];
    }
  });
}

Graph::Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols needs at least one input");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) {
      throw DimensionError("concat_cols row mismatch: " + value(parts[0]).shape_str() + " vs " +
                           value(p).shape_str());
    }
    total += value(p).cols();
  }
  Tensor out = Tensor::matrix(rows, total);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    offset += v.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), [inputs](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    std::size_t offset = 0;
    for (Var p : inputs) {
      Tensor& gp = g.grad_ref(p.id);
      const std::size_t w = gp.cols();
      for (std::size_t r = 0; r < d.rows(); ++r) {
        auto src = d.row(r).subspan(offset, w);
        auto dst = gp.row(r);
        for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
      }
      offset += w;
    }
  });
}

Graph::Var Graph::slice_cols(Var a, std::size_t start, std::size_t width) {
  const Tensor& va = value(a);
  if (width == 0 || start + width > va.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") out of range for " + va.shape_str());
  }
  Tensor out = Tensor::matrix(va.rows(), width);
  for (std::size_t r = 0; r < va.rows(); ++r) {
    auto src = va.row(r).subspan(start, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return push(std::move(out), [a, start, width](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      auto dst = ga.row(r).subspan(start, width);
      auto src = d.row(r);
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  });
}

Graph::Var Graph::gather_rows(Var table, std::span<const int> ids) {
  const Tensor& vt = value(table);
  if (ids.empty()) throw DimensionError("gather_rows needs at least one id");
  Tensor out = Tensor::matrix(ids.size(), vt.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= vt.rows()) {
      throw DimensionError("token id " + std::to_string(ids[r]) + " out of range for table " +
                           vt.shape_str());
    }
    auto src = vt.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return push(std::move(out), [table, idx](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& gt = g.grad_ref(table.id);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = gt.row(static_cast<std::size_t>(idx[r]));
      auto src = d.row(r);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    }
  });
}

Graph::Var Graph::blend_rows(Var fresh, Var prev, std::span<const double> mask) {
  const Tensor& vf = value(fresh);
  const Tensor& vp = value(prev);
  require_same(vf, vp, "blend_rows");
  if (mask.size() != vf.rows()) throw DimensionError("blend_rows mask length mismatch");
  Tensor out = vp;
  for (std::size_t r = 0; r < vf.rows(); ++r) {
    if (mask[r] != 0.0) std::copy(vf.row(r).begin(), vf.row(r).end(), out.row(r).begin());
  }
  std::vector<double> m(mask.begin(), mask.end());
  return push(std::move(out), [fresh, prev, m](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    Tensor& gf = g.grad_ref(fresh.id);
    Tensor& gp = g.grad_ref(prev.id);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      Tensor& target = m[r] != 0.0 ? gf : gp;
      auto src = d.row(r);
      auto dst = target.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Graph::Var Graph::masked_max(std::span<const Var> steps, std::span<const double> mask) {
  if (steps.empty()) throw DimensionError("masked_max needs at least one step");
  const std::size_t rows = value(steps[0]).rows();
  const std::size_t cols = value(steps[0]).cols();
  const std::size_t n_steps = steps.size();
  if (mask.size() != rows * n_steps) throw DimensionError("masked_max mask size mismatch");
  Tensor out = Tensor::matrix(rows, cols);
  // argmax[r * cols + c] = winning step
  std::vector<std::size_t> argmax(rows * cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    bool any = false;
    for (std::size_t t = 0; t < n_steps; ++t) {
      if (mask[t * rows + r] == 0.0) continue;
      const Tensor& v = value(steps[t]);
      if (v.rows() != rows || v.cols() != cols) throw DimensionError("masked_max step shape mismatch");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!any || v(r, c) > out(r, c)) {
          out(r, c) = v(r, c);
          argmax[r * cols + c] = t;
        }
      }
      any = true;
    }
    if (!any) throw DimensionError("masked_max row " + std::to_string(r) + " has no live steps");
  }
  std::vector<Var> inputs(steps.begin(), steps.end());
  return push(std::move(out), [inputs, argmax, rows, cols](Graph& g, std::size_t self) {
    const Tensor& d = g.nodes_[self].grad;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        Tensor& gs = g.grad_ref(inputs[argmax[r * cols + c]].id);
        gs(r, c) += d(r, c);
      }
    }
  });
}

Graph::Var Graph::sum(Var a) {
  double s = 0.0;
  for (double x : value(a).data()) s += x;
  return push(Tensor({1, 1}, std::vector<double>{s}), [a](Graph& g, std::size_t self) {
    const double d = g.nodes_[self].grad[0];
    Tensor& ga = g.grad_ref(a.id);
    for (auto& x : ga.data()) x += d;
  });
}

Graph::Var Graph::dot(Var a, Var b) {
  require_same(value(a), value(b), "dot");
  double s = xlalign::dot(value(a).data(), value(b).data());
  return push(Tensor({1, 1}, std::vector<double>{s}), [a, b](Graph& g, std::size_t self) {
    const double d = g.nodes_[self].grad[0];
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    Tensor& ga = g.grad_ref(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += d * vb[i];
    Tensor& gb = g.grad_ref(b.id);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += d * va[i];
  });
}

double softmax_at(std::span<const double> logits, std::size_t k) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : logits) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : logits) z += std::exp(x - mx);
  return std::exp(logits[k] - mx) / z;
}

Graph::Var Graph::softmax_cross_entropy(Var logits, std::span<const int> targets,
                                        std::span<const double> weights, double normalizer) {
  const Tensor& vl = value(logits);
  const std::size_t rows = vl.rows();
  const std::size_t classes = vl.cols();
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + vl.shape_str());
  }
  if (!(normalizer > 0.0)) throw DimensionError("softmax_cross_entropy normalizer must be positive");
  Tensor probs = Tensor::matrix(rows, classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= classes) {
      throw DimensionError("target " + std::to_string(targets[r]) + " outside " +
                           std::to_string(classes) + " classes");
    }
    auto row = vl.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : row) mx = std::max(mx, x);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs(r, c) = std::exp(row[c] - mx);
      z += probs(r, c);
    }
    for (std::size_t c = 0; c < classes; ++c) probs(r, c) /= z;
    if (weights[r] != 0.0) {
      const double log_p = (row[static_cast<std::size_t>(targets[r])] - mx) - std::log(z);
      loss -= weights[r] * log_p;
    }
  }
  loss /= normalizer;
  std::vector<int> t(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push(Tensor({1, 1}, std::vector<double>{loss}),
              [logits, probs = std::move(probs), t, w, normalizer](Graph& g, std::size_t self) {
                const double d = g.nodes_[self].grad[0] / normalizer;
                Tensor& gl = g.grad_ref(logits.id);
                for (std::size_t r = 0; r < probs.rows(); ++r) {
                  if (w[r] == 0.0) continue;
                  const double s = d * w[r];
                  for (std::size_t c = 0; c < probs.cols(); ++c) {
                    double indicator = static_cast<int>(c) == t[r] ? 1.0 : 0.0;
                    gl(r, c) += s * (probs(r, c) - indicator);
                  }
                }
              });
}

void Graph::backward(Var loss) {
  Node& root = nodes_.at(loss.id);
  if (root.value.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got " + root.value.shape_str());
  }
  root.value.require_finite("loss");
  for (auto& n : nodes_) n.grad = Tensor{};
  grad_ref(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    if (!has_grad(id)) continue;
    if (nodes_[id].backprop) nodes_[id].backprop(*this, id);
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    Tensor& pg = n.param->grad;
    if (pg.empty() || pg.size() != n.grad.size()) pg = Tensor(n.param->value.shape(), 0.0);
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
  }
}

}  // namespace xlalign
