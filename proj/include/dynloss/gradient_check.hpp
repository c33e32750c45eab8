// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <functional>
#include <vector>

#include "dynloss/autodiff.hpp"

namespace dynloss::ad {

/// Scalar-valued function of one tensor, built on a caller-supplied graph.
using ScalarFn = std::function<Var(Graph&, Var)>;

struct GradientCheckReport {
  /// max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, floor)
  double max_rel_error = 0.0;
  bool passed = false;
  /// f was non-finite somewhere in the probe neighbourhood.
  bool inconclusive = false;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Gradients below this magnitude are compared absolutely rather than
/// relatively, so round-off on near-zero partials does not count as failure.
inline constexpr double kRelativeErrorFloor = 1e-2;

/// Compares reverse-mode gradients of f at `point` with central differences.
GradientCheckReport gradient_check(const ScalarFn& f, const Tensor& point, double eps, double tol);

}  // namespace dynloss::ad
