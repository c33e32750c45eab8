// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "dynloss/nn.hpp"

namespace dynloss::optim {

enum class OptimizerKind { adam, sgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the gradients currently stored in `params`.
  virtual void step(nn::ModelParams& params) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}
  void step(nn::ModelParams& params) override;

 private:
  double lr_;
};

/// Adam with bias correction.
class Adam final : public Optimizer {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(nn::ModelParams& params) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate);

/// Global L2 norm of all gradients.
double grad_norm(const nn::ModelParams& params);

/// Rescales gradients so their global norm is at most max_norm. Returns the
/// norm before clipping.
double clip_grad_norm(nn::ModelParams& params, double max_norm);

}  // namespace dynloss::optim
