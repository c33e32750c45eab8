// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace dynloss::ad {

namespace {

double evaluate(const ScalarFn& f, const Tensor& at) {
  Graph g;
  Var out = f(g, g.constant(at));
  return out.value().item();
}

}  // namespace

GradientCheckReport gradient_check(const ScalarFn& f, const Tensor& point, double eps, double tol) {
  GradientCheckReport report;

  Tensor x = point;
  x.set_requires_grad(true);
  {
    Graph g;
    Var out = f(g, g.parameter(x));
    if (!std::isfinite(out.value().item())) {
      report.inconclusive = true;
      return report;
    }
    g.backward(out);
  }
  report.analytic.assign(x.grad().begin(), x.grad().end());

  report.numeric.resize(point.numel());
  Tensor probe = point;
  for (std::size_t i = 0; i < point.numel(); ++i) {
    probe[i] = point[i] + eps;
    double up = evaluate(f, probe);
    probe[i] = point[i] - eps;
    double down = evaluate(f, probe);
    probe[i] = point[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      report.inconclusive = true;
      return report;
    }
    report.numeric[i] = (up - down) / (2.0 * eps);
  }

  for (std::size_t i = 0; i < point.numel(); ++i) {
    double a = report.analytic[i];
    double n = report.numeric[i];
    if (!std::isfinite(a)) {
      report.inconclusive = true;
      return report;
    }
    double denom = std::max({std::fabs(a), std::fabs(n), kRelativeErrorFloor});
    report.max_rel_error = std::max(report.max_rel_error, std::fabs(a - n) / denom);
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace dynloss::ad
