// Copyright 2026 The FairST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Tape-based reverse-mode differentiation.
//
// A Tape records every operation in creation order, so the node list is
// already a topological order: inputs always precede the nodes that consume
// them. `Tape::backward` walks it once in reverse.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fairst/error.hpp"
#include "fairst/tensor/conv.hpp"
#include "fairst/tensor/tensor.hpp"

namespace fairst::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  // Receives the node's upstream gradient and accumulates into its inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf whose gradient is tracked.
  Var variable(Tensor value) { return push(std::move(value), {}, nullptr, true); }

  // A leaf excluded from differentiation.
  Var constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }

  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
    bool tracked = false;
    for (std::size_t in : inputs) tracked = tracked || nodes_.at(in).tracked;
    return push(std::move(value), std::move(inputs),
                tracked ? std::move(fn) : nullptr, tracked);
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool tracked(Var v) const { return nodes_.at(v.id).tracked; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Gradient of the last `backward` loss with respect to `v`. Nodes that do
  // not influence the loss report zeros.
  Tensor grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (node.grad) return *node.grad;
    return Tensor::zeros_like(node.value);
  }

  void backward(Var loss) {
    require(loss.tape == this, ErrorKind::invalid_input,
            "loss belongs to a different tape");
    require(value(loss).size() == 1, ErrorKind::invalid_input,
            "backward requires a scalar loss, got shape ",
            shape_string(value(loss).shape()));
    for (Node& node : nodes_) node.grad.reset();
    nodes_[loss.id].grad = Tensor(nodes_[loss.id].value.shape(), 1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (!node.grad || !node.backward) continue;
      node.backward(*this, *node.grad);
    }
  }

  // Used by BackwardFn implementations.
  void accumulate(std::size_t id, const Tensor& g) {
    Node& node = nodes_.at(id);
    if (!node.tracked) return;
    if (!node.grad) {
      node.grad = g;
    } else {
      *node.grad += g;
    }
  }

  void accumulate(std::size_t id, Tensor&& g) {
    Node& node = nodes_.at(id);
    if (!node.tracked) return;
    if (!node.grad) {
      node.grad = std::move(g);
    } else {
      *node.grad += g;
    }
  }

  const Tensor& input_value(std::size_t id) const { return nodes_.at(id).value; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool tracked = false;
    std::optional<Tensor> grad;
  };

  Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn,
           bool tracked) {
    nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(fn),
                          tracked, std::nullopt});
    return Var{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

namespace detail {

inline Tape& same_tape(std::initializer_list<Var> vars) {
  Tape* tape = vars.begin()->tape;
  for (const Var& v : vars)
    require(v.tape == tape && tape != nullptr, ErrorKind::invalid_input,
            "operands belong to different tapes");
  return *tape;
}

}  // namespace detail

inline constexpr double kLeakySlope = 0.01;

inline Var conv(Var x, Var kernels, Var bias, std::size_t rank) {
  Tape& tape = detail::same_tape({x, kernels, bias});
  Tensor out = conv::forward(x.value(), kernels.value(), bias.value(), rank);
  const std::size_t xi = x.id, ki = kernels.id, bi = bias.id;
  return tape.record(std::move(out), {xi, ki, bi},
                     [xi, ki, bi, rank](Tape& t, const Tensor& g) {
                       const bool need_input = t.tracked(Var{&t, xi});
                       conv::Gradients grads = conv::backward(
                           t.input_value(xi), t.input_value(ki), g, rank, need_input);
                       if (need_input) t.accumulate(xi, std::move(grads.input));
                       t.accumulate(ki, std::move(grads.kernels));
                       t.accumulate(bi, std::move(grads.bias));
                     });
}

inline Var leaky_relu(Var x, double slope = kLeakySlope) {
  Tape& tape = *x.tape;
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : slope * v;
  const std::size_t xi = x.id;
  return tape.record(std::move(out), {xi},
                     [xi, slope](Tape& t, const Tensor& g) {
                       const Tensor& in = t.input_value(xi);
                       Tensor dx(in.shape());
                       for (std::size_t i = 0; i < in.size(); ++i)
                         dx[i] = g[i] * (in[i] > 0.0 ? 1.0 : slope);
                       t.accumulate(xi, std::move(dx));
                     });
}

inline Var add(Var a, Var b) {
  Tape& tape = detail::same_tape({a, b});
  require(a.shape() == b.shape(), ErrorKind::invalid_input,
          "add shape mismatch: ", shape_string(a.shape()), " vs ",
          shape_string(b.shape()));
  Tensor out = a.value();
  out += b.value();
  const std::size_t ai = a.id, bi = b.id;
  return tape.record(std::move(out), {ai, bi},
                     [ai, bi](Tape& t, const Tensor& g) {
                       t.accumulate(ai, g);
                       t.accumulate(bi, g);
                     });
}

inline Var mul(Var a, Var b) {
  Tape& tape = detail::same_tape({a, b});
  require(a.shape() == b.shape(), ErrorKind::invalid_input,
          "mul shape mismatch: ", shape_string(a.shape()), " vs ",
          shape_string(b.shape()));
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ai = a.id, bi = b.id;
  return tape.record(std::move(out), {ai, bi},
                     [ai, bi](Tape& t, const Tensor& g) {
                       const Tensor& av = t.input_value(ai);
                       const Tensor& bv = t.input_value(bi);
                       Tensor da(av.shape()), db(bv.shape());
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         da[i] = g[i] * bv[i];
                         db[i] = g[i] * av[i];
                       }
                       t.accumulate(ai, std::move(da));
                       t.accumulate(bi, std::move(db));
                     });
}

inline Var scale(Var x, double factor) {
  Tensor out = x.value();
  out *= factor;
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {xi},
                        [xi, factor](Tape& t, const Tensor& g) {
                          Tensor dx = g;
                          dx *= factor;
                          t.accumulate(xi, std::move(dx));
                        });
}

inline Var abs(Var x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::fabs(v);
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, const Tensor& g) {
    const Tensor& in = t.input_value(xi);
    Tensor dx(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i)
      dx[i] = in[i] > 0.0 ? g[i] : (in[i] < 0.0 ? -g[i] : 0.0);
    t.accumulate(xi, std::move(dx));
  });
}

inline Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, const Tensor& g) {
    t.accumulate(xi, g.reshaped(t.input_value(xi).shape()));
  });
}

inline Var sum(Var x) {
  Tensor out(Shape{}, x.value().sum());
  const std::size_t xi = x.id;
  return x.tape->record(std::move(out), {xi}, [xi](Tape& t, const Tensor& g) {
    t.accumulate(xi, Tensor(t.input_value(xi).shape(), g[0]));
  });
}

inline Var mean(Var x) {
  require(x.value().size() > 0, ErrorKind::invalid_input, "mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

// Mean absolute error against a fixed target; subgradient 0 where equal.
inline Var mean_abs_error(Var pred, const Tensor& target) {
  require(pred.shape() == target.shape(), ErrorKind::invalid_input,
          "MAE shape mismatch: ", shape_string(pred.shape()), " vs ",
          shape_string(target.shape()));
  const double n = static_cast<double>(target.size());
  double total = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    total += std::fabs(pred.value()[i] - target[i]);
  const std::size_t pi = pred.id;
  return pred.tape->record(
      Tensor(Shape{}, total / n), {pi},
      [pi, target, n](Tape& t, const Tensor& g) {
        const Tensor& p = t.input_value(pi);
        Tensor dp(p.shape());
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double diff = p[i] - target[i];
          dp[i] = diff > 0.0 ? g[0] / n : (diff < 0.0 ? -g[0] / n : 0.0);
        }
        t.accumulate(pi, std::move(dp));
      });
}

// Concatenates along axis 0; trailing axes must agree.
inline Var concat(std::span<const Var> parts) {
  require(!parts.empty(), ErrorKind::invalid_input, "concat of nothing");
  Tape& tape = *parts.front().tape;
  Shape shape = parts.front().shape();
  require(!shape.empty(), ErrorKind::invalid_input, "concat of scalars");
  std::size_t leading = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    require(p.tape == &tape, ErrorKind::invalid_input,
            "operands belong to different tapes");
    const Shape& s = p.shape();
    require(s.size() == shape.size() &&
                std::equal(s.begin() + 1, s.end(), shape.begin() + 1),
            ErrorKind::invalid_input, "concat shape mismatch: ",
            shape_string(s), " vs ", shape_string(shape));
    leading += s[0];
    ids.push_back(p.id);
  }
  shape[0] = leading;
  std::vector<double> data;
  data.reserve(shape_size(shape));
  for (const Var& p : parts)
    data.insert(data.end(), p.value().storage().begin(),
                p.value().storage().end());
  return tape.record(Tensor(shape, std::move(data)), ids,
                     [ids](Tape& t, const Tensor& g) {
                       std::size_t offset = 0;
                       for (std::size_t id : ids) {
                         const Tensor& in = t.input_value(id);
                         std::vector<double> part(
                             g.storage().begin() + offset,
                             g.storage().begin() + offset + in.size());
                         offset += in.size();
                         t.accumulate(id, Tensor(in.shape(), std::move(part)));
                       }
                     });
}

// (C) -> (C, rows, cols), every map constant.
inline Var broadcast_spatial(Var v, std::size_t rows, std::size_t cols) {
  const Tensor& in = v.value();
  require(in.rank() == 1, ErrorKind::invalid_input,
          "broadcast_spatial expects a vector, got ", shape_string(in.shape()));
  const std::size_t C = in.size();
  const std::size_t P = rows * cols;
  Tensor out(Shape{C, rows, cols});
  for (std::size_t c = 0; c < C; ++c)
    std::fill_n(out.data() + c * P, P, in[c]);
  const std::size_t vi = v.id;
  return v.tape->record(std::move(out), {vi},
                        [vi, C, P](Tape& t, const Tensor& g) {
                          Tensor dv(Shape{C});
                          for (std::size_t c = 0; c < C; ++c) {
                            double acc = 0.0;
                            for (std::size_t i = 0; i < P; ++i)
                              acc += g[c * P + i];
                            dv[c] = acc;
                          }
                          t.accumulate(vi, std::move(dv));
                        });
}

// Dense layer over the flattened input: weights (Cout, K), bias (Cout).
inline Var linear(Var x, Var weights, Var bias) {
  Tape& tape = detail::same_tape({x, weights, bias});
  const Tensor& w = weights.value();
  require(w.rank() == 2 && w.dim(1) == x.value().size(),
          ErrorKind::invalid_input, "linear weights ", shape_string(w.shape()),
          " do not match input of ", x.value().size(), " values");
  const std::size_t out_dim = w.dim(0);
  const std::size_t in_dim = w.dim(1);
  require(bias.value().size() == out_dim, ErrorKind::invalid_input,
          "linear bias has ", bias.value().size(), " entries, expected ",
          out_dim);
  Tensor out(Shape{out_dim});
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = bias.value()[o];
    for (std::size_t k = 0; k < in_dim; ++k)
      acc += w[o * in_dim + k] * x.value()[k];
    out[o] = acc;
  }
  const std::size_t xi = x.id, wi = weights.id, bi = bias.id;
  return tape.record(
      std::move(out), {xi, wi, bi},
      [xi, wi, bi, out_dim, in_dim](Tape& t, const Tensor& g) {
        const Tensor& xv = t.input_value(xi);
        const Tensor& wv = t.input_value(wi);
        Tensor dx(xv.shape()), dw(wv.shape());
        for (std::size_t o = 0; o < out_dim; ++o) {
          for (std::size_t k = 0; k < in_dim; ++k) {
            dx[k] += wv[o * in_dim + k] * g[o];
            dw[o * in_dim + k] = g[o] * xv[k];
          }
        }
        t.accumulate(xi, std::move(dx));
        t.accumulate(wi, std::move(dw));
        t.accumulate(bi, g.reshaped(Shape{out_dim}));
      });
}

// Scalar function with a caller-supplied gradient.
struct ScalarEvaluation {
  double value = 0.0;
  std::vector<double> gradient;
};

using ScalarFunction = std::function<ScalarEvaluation(std::span<const double>)>;

inline Var scalar_function(Var x, const ScalarFunction& fn) {
  ScalarEvaluation eval = fn(x.value().values());
  require(eval.gradient.size() == x.value().size(), ErrorKind::invalid_input,
          "scalar function gradient has ", eval.gradient.size(),
          " entries, expected ", x.value().size());
  const std::size_t xi = x.id;
  Tensor grad(x.shape(), std::move(eval.gradient));
  return x.tape->record(Tensor(Shape{}, eval.value), {xi},
                        [xi, grad = std::move(grad)](Tape& t, const Tensor& g) {
                          Tensor dx = grad;
                          dx *= g[0];
                          t.accumulate(xi, std::move(dx));
                        });
}

}  // namespace fairst::ad
