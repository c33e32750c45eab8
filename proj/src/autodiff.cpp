// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace dynloss::ad {

// ---------------------------------------------------------------- Tensor

std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError(fmt::format("zero dimension in shape {}", shape_str(shape)));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, ","));
}

Tensor::Tensor() : shape_{1}, values_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != values_.size()) {
    throw ShapeError(fmt::format("shape {} needs {} values, got {}", shape_str(shape_),
                                 shape_numel(shape_), values_.size()));
  }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError(fmt::format("item() on tensor of shape {}", shape_str(shape_)));
  }
  return values_[0];
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on) {
    grad_.assign(values_.size(), 0.0);
  } else {
    grad_.clear();
    grad_.shrink_to_fit();
  }
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------- Graph

const Tensor& Var::value() const { return graph->value(*this); }
bool Var::requires_grad() const { return graph->requires_grad(*this); }

std::size_t Graph::check(Var v) const {
  if (v.graph != this || v.index >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this graph");
  }
  return v.index;
}

Var Graph::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Graph::reference(const Tensor& value) {
  Node node;
  node.borrowed = &value;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(Tensor& param) {
  Node node;
  node.borrowed = &param;
  node.requires_grad = param.requires_grad();
  if (node.requires_grad) node.param = &param;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::span<const Var> inputs, BackwardRule rule) {
  Node node;
  node.owned = std::move(value);
  node.inputs.reserve(inputs.size());
  for (auto v : inputs) {
    auto idx = check(v);
    node.inputs.push_back(idx);
    node.requires_grad = node.requires_grad || nodes_[idx].requires_grad;
  }
  if (node.requires_grad) node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const { return nodes_[check(v)].value(); }

bool Graph::requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }

std::span<const double> Graph::grad(Var v) const { return nodes_[check(v)].grad; }

void Graph::backward(Var loss) {
  auto root = check(loss);
  if (nodes_[root].value().numel() != 1) {
    throw ShapeError(fmt::format("backward needs a one-element loss, got shape {}",
                                 shape_str(nodes_[root].value().shape())));
  }
  for (std::size_t i = 0; i <= root; ++i) {
    auto& node = nodes_[i];
    if (node.requires_grad) {
      node.grad.assign(node.value().numel(), 0.0);
    } else {
      node.grad.clear();
    }
  }
  if (!nodes_[root].requires_grad) return;
  nodes_[root].grad[0] = 1.0;

  std::vector<const Tensor*> in_values;
  std::vector<std::span<double>> in_grads;
  for (std::size_t i = root + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || !node.rule) continue;
    in_values.clear();
    in_grads.clear();
    for (auto k : node.inputs) {
      auto& in = nodes_[k];
      in_values.push_back(&in.value());
      in_grads.push_back(in.requires_grad ? std::span<double>(in.grad) : std::span<double>());
    }
    node.rule(BackwardContext{node.grad, node.value(), in_values, in_grads});
  }

  for (std::size_t i = 0; i <= root; ++i) {
    auto& node = nodes_[i];
    if (node.param == nullptr || !node.param->has_grad()) continue;
    auto dst = node.param->grad();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += node.grad[j];
  }
}

// ---------------------------------------------------------------- ops

namespace {

Graph& graph_of(std::initializer_list<Var> vars) {
  Graph* g = vars.begin()->graph;
  for (auto v : vars) {
    if (v.graph != g || g == nullptr) throw std::invalid_argument("operands belong to different graphs");
  }
  return *g;
}

// Result shape for an elementwise binary op, or throws.
Shape broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1) return a.shape();
  if (a.numel() == 1) return b.shape();
  throw ShapeError(fmt::format("{}: shapes {} and {} do not conform", op, shape_str(a.shape()),
                               shape_str(b.shape())));
}

// Index into an operand that is either full-size or a broadcast scalar.
inline double at(const Tensor& t, std::size_t i) { return t.numel() == 1 ? t[0] : t[i]; }

inline void accum(std::span<double> g, std::size_t n_out, std::size_t i, double v) {
  if (g.size() == 1 && n_out != 1) {
    g[0] += v;
  } else {
    g[i] += v;
  }
}

template <typename Fwd, typename Bwd>
Var unary(Var a, Fwd fwd, Bwd dfdx) {
  const Tensor& x = a.value();
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  Var inputs[] = {a};
  return a.graph->record(Tensor(x.shape(), std::move(out)), inputs,
                         [dfdx](const BackwardContext& ctx) {
                           auto g = ctx.input_grads[0];
                           if (g.empty()) return;
                           const Tensor& xin = *ctx.inputs[0];
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             g[i] += ctx.grad_out[i] * dfdx(xin[i], ctx.out[i]);
                           }
                         });
}

bool is_vector_shape(const Shape& s) {
  return s.size() == 1 || (s.size() == 2 && (s[0] == 1 || s[1] == 1));
}

}  // namespace

Var add(Var a, Var b) {
  auto& g = graph_of({a, b});
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  auto shape = broadcast_shape("add", x, y);
  std::vector<double> out(shape_numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(x, i) + at(y, i);
  Var inputs[] = {a, b};
  return g.record(Tensor(std::move(shape), std::move(out)), inputs, [](const BackwardContext& ctx) {
    auto n = ctx.grad_out.size();
    for (int k = 0; k < 2; ++k) {
      auto gk = ctx.input_grads[k];
      if (gk.empty()) continue;
      for (std::size_t i = 0; i < n; ++i) accum(gk, n, i, ctx.grad_out[i]);
    }
  });
}

Var sub(Var a, Var b) {
  auto& g = graph_of({a, b});
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  auto shape = broadcast_shape("sub", x, y);
  std::vector<double> out(shape_numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(x, i) - at(y, i);
  Var inputs[] = {a, b};
  return g.record(Tensor(std::move(shape), std::move(out)), inputs, [](const BackwardContext& ctx) {
    auto n = ctx.grad_out.size();
    if (auto ga = ctx.input_grads[0]; !ga.empty()) {
      for (std::size_t i = 0; i < n; ++i) accum(ga, n, i, ctx.grad_out[i]);
    }
    if (auto gb = ctx.input_grads[1]; !gb.empty()) {
      for (std::size_t i = 0; i < n; ++i) accum(gb, n, i, -ctx.grad_out[i]);
    }
  });
}

Var mul(Var a, Var b) {
  auto& g = graph_of({a, b});
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  auto shape = broadcast_shape("mul", x, y);
  std::vector<double> out(shape_numel(shape));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(x, i) * at(y, i);
  Var inputs[] = {a, b};
  return g.record(Tensor(std::move(shape), std::move(out)), inputs, [](const BackwardContext& ctx) {
    auto n = ctx.grad_out.size();
    const Tensor& xa = *ctx.inputs[0];
    const Tensor& xb = *ctx.inputs[1];
    if (auto ga = ctx.input_grads[0]; !ga.empty()) {
      for (std::size_t i = 0; i < n; ++i) accum(ga, n, i, ctx.grad_out[i] * at(xb, i));
    }
    if (auto gb = ctx.input_grads[1]; !gb.empty()) {
      for (std::size_t i = 0; i < n; ++i) accum(gb, n, i, ctx.grad_out[i] * at(xa, i));
    }
  });
}

Var matmul(Var a, Var b) {
  auto& g = graph_of({a, b});
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  auto mismatch = [&] {
    return ShapeError(fmt::format("matmul: shapes {} and {} do not conform", shape_str(x.shape()),
                                  shape_str(y.shape())));
  };
  if (x.rank() > 2 || y.rank() > 2) throw mismatch();
  // View every operand as a matrix: a vector on the left is a row, on the
  // right a column.
  std::size_t m = x.rank() == 2 ? x.shape()[0] : 1;
  std::size_t k = x.rank() == 2 ? x.shape()[1] : x.shape()[0];
  std::size_t k2 = y.shape()[0];
  std::size_t n = y.rank() == 2 ? y.shape()[1] : 1;
  if (k != k2) throw mismatch();

  Shape shape;
  if (x.rank() == 2 && y.rank() == 2) {
    shape = {m, n};
  } else if (x.rank() == 2) {
    shape = {m};
  } else if (y.rank() == 2) {
    shape = {n};
  } else {
    shape = {1};
  }

  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double xv = x[i * k + p];
      if (xv == 0.0) continue;
      const double* yrow = y.values().data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  Var inputs[] = {a, b};
  return g.record(Tensor(std::move(shape), std::move(out)), inputs,
                  [m, k, n](const BackwardContext& ctx) {
                    const auto& xa = *ctx.inputs[0];
                    const auto& xb = *ctx.inputs[1];
                    const double* go = ctx.grad_out.data();
                    // dA = dOut * B^T
                    if (auto ga = ctx.input_grads[0]; !ga.empty()) {
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          double acc = 0.0;
                          const double* brow = xb.values().data() + p * n;
                          for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * brow[j];
                          ga[i * k + p] += acc;
                        }
                      }
                    }
                    // dB = A^T * dOut
                    if (auto gb = ctx.input_grads[1]; !gb.empty()) {
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          double av = xa[i * k + p];
                          if (av == 0.0) continue;
                          double* grow = gb.data() + p * n;
                          for (std::size_t j = 0; j < n; ++j) grow[j] += av * go[i * n + j];
                        }
                      }
                    }
                  });
}

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Graph& g = *parts[0].graph;
  const Shape& first = parts[0].shape();
  std::size_t rows = 1;
  for (std::size_t d = 0; d + 1 < first.size(); ++d) rows *= first[d];

  std::vector<std::size_t> widths;
  widths.reserve(parts.size());
  std::size_t total = 0;
  for (auto v : parts) {
    if (v.graph != &g) throw std::invalid_argument("operands belong to different graphs");
    const Shape& s = v.shape();
    bool leading_ok = s.size() == first.size() &&
                      std::equal(s.begin(), s.end() - 1, first.begin(), first.end() - 1);
    if (!leading_ok) {
      throw ShapeError(fmt::format("concat: shapes {} and {} do not conform", shape_str(first),
                                   shape_str(s)));
    }
    widths.push_back(s.back());
    total += s.back();
  }

  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& t = parts[p].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(t.values().data() + r * widths[p], widths[p], out.data() + r * total + offset);
    }
    offset += widths[p];
  }
  Shape shape = first;
  shape.back() = total;
  return g.record(Tensor(std::move(shape), std::move(out)), parts,
                  [rows, total, widths = std::move(widths)](const BackwardContext& ctx) {
                    std::size_t off = 0;
                    for (std::size_t p = 0; p < widths.size(); ++p) {
                      auto gp = ctx.input_grads[p];
                      if (!gp.empty()) {
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t j = 0; j < widths[p]; ++j) {
                            gp[r * widths[p] + j] += ctx.grad_out[r * total + off + j];
                          }
                        }
                      }
                      off += widths[p];
                    }
                  });
}

Var gather(Var table, std::span<const std::size_t> ids) {
  const Tensor& t = table.value();
  if (t.rank() > 2) {
    throw ShapeError(fmt::format("gather: table of shape {} must have rank 1 or 2",
                                 shape_str(t.shape())));
  }
  if (ids.empty()) throw ShapeError("gather: no indices");
  std::size_t rows = t.shape()[0];
  std::size_t width = t.rank() == 2 ? t.shape()[1] : 1;
  std::vector<double> out(ids.size() * width);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= rows) {
      throw std::out_of_range(
          fmt::format("gather: index {} out of range for {} rows", ids[r], rows));
    }
    std::copy_n(t.values().data() + ids[r] * width, width, out.data() + r * width);
  }
  Shape shape = t.rank() == 2 ? Shape{ids.size(), width} : Shape{ids.size()};
  Var inputs[] = {table};
  return table.graph->record(
      Tensor(std::move(shape), std::move(out)), inputs,
      [width, ids = std::vector<std::size_t>(ids.begin(), ids.end())](const BackwardContext& ctx) {
        auto g = ctx.input_grads[0];
        if (g.empty()) return;
        for (std::size_t r = 0; r < ids.size(); ++r) {
          for (std::size_t j = 0; j < width; ++j) g[ids[r] * width + j] += ctx.grad_out[r * width + j];
        }
      });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var sqrt(Var a) {
  for (double v : a.value().values()) {
    if (v < 0.0) throw std::domain_error(fmt::format("sqrt of negative value {}", v));
  }
  return unary(
      a, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var abs(Var a) {
  return unary(
      a, [](double v) { return std::fabs(v); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double total = std::accumulate(x.values().begin(), x.values().end(), 0.0);
  Var inputs[] = {a};
  return a.graph->record(Tensor::scalar(total), inputs, [](const BackwardContext& ctx) {
    auto g = ctx.input_grads[0];
    for (auto& v : g) v += ctx.grad_out[0];
  });
}

Var mean(Var a) {
  const Tensor& x = a.value();
  double n = static_cast<double>(x.numel());
  double total = std::accumulate(x.values().begin(), x.values().end(), 0.0);
  Var inputs[] = {a};
  return a.graph->record(Tensor::scalar(total / n), inputs, [n](const BackwardContext& ctx) {
    auto g = ctx.input_grads[0];
    for (auto& v : g) v += ctx.grad_out[0] / n;
  });
}

Var softmax(Var a) {
  const Tensor& x = a.value();
  if (!is_vector_shape(x.shape())) {
    throw ShapeError(fmt::format("softmax: shape {} is not a vector", shape_str(x.shape())));
  }
  double hi = *std::max_element(x.values().begin(), x.values().end());
  std::vector<double> out(x.numel());
  double z = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(x[i] - hi);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  Var inputs[] = {a};
  return a.graph->record(Tensor(x.shape(), std::move(out)), inputs, [](const BackwardContext& ctx) {
    auto g = ctx.input_grads[0];
    if (g.empty()) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += ctx.grad_out[i] * ctx.out[i];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += ctx.out[i] * (ctx.grad_out[i] - dot);
  });
}

}  // namespace dynloss::ad
