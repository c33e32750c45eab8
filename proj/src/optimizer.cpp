// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dynloss::optim {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "adam") return OptimizerKind::adam;
  if (text == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument(fmt::format("unknown optimizer '{}' (expected adam|sgd)", text));
}

void Sgd::step(nn::ModelParams& params) {
  params.for_each([this](std::string_view, ad::Tensor& t) {
    auto v = t.values();
    auto g = t.grad();
    for (std::size_t i = 0; i < g.size(); ++i) v[i] -= lr_ * g[i];
  });
}

void Adam::step(nn::ModelParams& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t k = 0;
  params.for_each([&](std::string_view, ad::Tensor& t) {
    if (m_.size() <= k) {
      m_.emplace_back(t.numel(), 0.0);
      v_.emplace_back(t.numel(), 0.0);
    }
    auto& m = m_[k];
    auto& v = v_[k];
    auto values = t.values();
    auto g = t.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double m_hat = m[i] / c1;
      double v_hat = v[i] / c2;
      values[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
    ++k;
  });
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate) {
  if (!(learning_rate >= 0.0)) {
    throw std::invalid_argument(fmt::format("learning rate {} must be >= 0", learning_rate));
  }
  if (kind == OptimizerKind::adam) return std::make_unique<Adam>(learning_rate);
  return std::make_unique<Sgd>(learning_rate);
}

double grad_norm(const nn::ModelParams& params) {
  double ss = 0.0;
  params.for_each([&ss](std::string_view, const ad::Tensor& t) {
    for (double g : t.grad()) ss += g * g;
  });
  return std::sqrt(ss);
}

double clip_grad_norm(nn::ModelParams& params, double max_norm) {
  double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    double factor = max_norm / norm;
    params.for_each([factor](std::string_view, ad::Tensor& t) {
      for (auto& g : t.grad()) g *= factor;
    });
  }
  return norm;
}

}  // namespace dynloss::optim
