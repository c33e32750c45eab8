// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dynloss/autodiff.hpp"

namespace dynloss::loss {

enum class ScheduleUnit { epoch, step };

std::string_view to_string(ScheduleUnit unit);
/// Accepts "epoch" or "step"; throws std::invalid_argument otherwise.
ScheduleUnit parse_schedule_unit(std::string_view text);

/// Mixing weight of the standard-deviation term over training:
///
///   p(t) = min(a, a * exp(-c * (t / total - hold)))
///
/// which holds p at `a` until t / total reaches `hold`, then decays
/// exponentially at rate `c`.
struct LossSchedule {
  double a = 1.0;
  double hold = 0.15;
  double c = 1.1;
  std::int64_t total = 1;
  ScheduleUnit unit = ScheduleUnit::epoch;

  /// a >= 0, hold in [0, 1], c >= 0, total >= 1.
  void validate() const;
};

/// Throws std::out_of_range for t < 0 or t > total.
double p_of_t(const LossSchedule& sched, std::int64_t t);

enum class StdKind { sample, population };

/// Floor applied to the prediction std inside the STDE backward rule.
inline constexpr double kStdGradientFloor = 1e-8;

double standard_deviation(std::span<const double> xs, StdKind kind = StdKind::sample);

/// |std(predictions) - std(targets)| over one batch. Both need n >= 2 and equal
/// length. The forward value is exact; the backward rule floors
/// std(predictions) at kStdGradientFloor.
ad::Var stde(ad::Var predictions, ad::Var targets, StdKind kind = StdKind::sample);

/// mean((predictions - targets)^2)
ad::Var mse_loss(ad::Var predictions, ad::Var targets);

struct BatchLossReport {
  ad::Var total;
  double total_value = 0.0;
  double mse_part = 0.0;
  double stde_part = 0.0;
  double p_used = 0.0;
};

/// total = p * STDE + (1 - p) * MSE. Requires p in [0, 1] and batch >= 2.
BatchLossReport combined_loss(ad::Var predictions, ad::Var targets, double p,
                              StdKind kind = StdKind::sample);

}  // namespace dynloss::loss
