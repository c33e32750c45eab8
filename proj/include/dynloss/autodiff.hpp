// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dynloss/tensor.hpp"

namespace dynloss::ad {

/// Raised when operand shapes do not conform; the message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Graph;

/// Handle to a node recorded on a Graph. Cheap to copy; only valid while the
/// owning graph is alive.
struct Var {
  Graph* graph = nullptr;
  std::size_t index = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  bool requires_grad() const;
};

/// Arguments handed to a backward rule. `input_grads[k]` is empty when input k
/// does not need a gradient; otherwise rules accumulate (+=) into it.
struct BackwardContext {
  std::span<const double> grad_out;
  const Tensor& out;
  std::span<const Tensor* const> inputs;
  std::span<const std::span<double>> input_grads;
};

using BackwardRule = std::function<void(const BackwardContext&)>;

/// Define-by-run tape. Every op appends one node; inputs always precede their
/// consumers, so reverse record order is a valid topological order.
///
/// A graph is single-threaded. Tensors referenced through `reference` or
/// `parameter` must outlive it.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Owned copy; never receives a gradient.
  Var constant(Tensor value);
  /// Borrowed, read-only; never receives a gradient.
  Var reference(const Tensor& value);
  /// Borrowed leaf. When `param.requires_grad()`, backward adds the gradient
  /// into `param.grad()`.
  Var parameter(Tensor& param);

  /// Appends an op node. The node requires grad iff any input does; otherwise
  /// the rule is discarded.
  Var record(Tensor value, std::span<const Var> inputs, BackwardRule rule);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient of the last backward() target with respect to v (empty span if
  /// v does not require grad or backward has not run).
  std::span<const double> grad(Var v) const;

  /// Reverse pass from a one-element tensor. Visits each node once in reverse
  /// record order and flushes leaf gradients into their parameters.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Tensor* param = nullptr;
    std::vector<std::size_t> inputs;
    BackwardRule rule;
    bool requires_grad = false;
    std::vector<double> grad;

    const Tensor& value() const { return borrowed ? *borrowed : owned; }
  };

  std::size_t check(Var v) const;

  // deque keeps node addresses stable as the tape grows.
  std::deque<Node> nodes_;
};

// The closed op set. Elementwise binary ops accept equal shapes, or one
// operand with a single element (scalar broadcast); nothing else.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// (m,k)x(k,n) -> (m,n); (m,k)x(k) -> (m); (k)x(k,n) -> (n); (k)x(k) -> (1).
Var matmul(Var a, Var b);
Var scale(Var a, double factor);
/// Concatenation along the last axis. Leading dimensions must agree.
Var concat(std::span<const Var> parts);
/// Selects entries along the first axis: a (V,D) table gives (k,D), a (V)
/// vector gives (k).
Var gather(Var table, std::span<const std::size_t> ids);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
/// Rejects negative inputs with std::domain_error.
Var sqrt(Var a);
/// Subgradient at 0 is 0.
Var abs(Var a);
Var mean(Var a);
Var sum(Var a);
/// Softmax over a vector: rank 1, or rank 2 with a unit dimension.
Var softmax(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace dynloss::ad
