// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/loss_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dynloss::loss {

std::string_view to_string(ScheduleUnit unit) {
  return unit == ScheduleUnit::epoch ? "epoch" : "step";
}

ScheduleUnit parse_schedule_unit(std::string_view text) {
  if (text == "epoch") return ScheduleUnit::epoch;
  if (text == "step") return ScheduleUnit::step;
  throw std::invalid_argument(fmt::format("unknown schedule unit '{}' (expected epoch|step)", text));
}

void LossSchedule::validate() const {
  // p is a convex weight, so its plateau value cannot leave [0, 1].
  if (!(a >= 0.0 && a <= 1.0)) {
    throw std::invalid_argument(fmt::format("loss.a must be in [0, 1], got {}", a));
  }
  if (!(hold >= 0.0 && hold <= 1.0)) {
    throw std::invalid_argument(fmt::format("loss.b must be in [0, 1], got {}", hold));
  }
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument(fmt::format("loss.c must be >= 0, got {}", c));
  }
  if (total < 1) throw std::invalid_argument(fmt::format("schedule total must be >= 1, got {}", total));
}

double p_of_t(const LossSchedule& sched, std::int64_t t) {
  sched.validate();
  if (t < 0 || t > sched.total) {
    throw std::out_of_range(fmt::format("p_of_t: t={} outside [0, {}]", t, sched.total));
  }
  double frac = static_cast<double>(t) / static_cast<double>(sched.total);
  return std::min(sched.a, sched.a * std::exp(-sched.c * (frac - sched.hold)));
}

double standard_deviation(std::span<const double> xs, StdKind kind) {
  const double n = static_cast<double>(xs.size());
  const double denom = kind == StdKind::sample ? n - 1.0 : n;
  if (denom <= 0.0) {
    throw std::invalid_argument(fmt::format("standard deviation needs more samples (n={})", xs.size()));
  }
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / denom);
}

namespace {

void require_batch(const char* op, ad::Var predictions, ad::Var targets, std::size_t min_n) {
  const auto& ps = predictions.shape();
  const auto& ts = targets.shape();
  if (ps != ts) {
    throw ad::ShapeError(fmt::format("{}: prediction shape {} and target shape {} differ", op,
                                     ad::shape_str(ps), ad::shape_str(ts)));
  }
  if (predictions.numel() < min_n) {
    throw std::invalid_argument(
        fmt::format("{}: batch of {} is too small (need >= {})", op, predictions.numel(), min_n));
  }
}

// d std / d x_i, with the std floored.
void add_std_grad(std::span<double> g, const ad::Tensor& x, double sigma, double denom,
                  double factor) {
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.numel());
  const double s = std::max(sigma, kStdGradientFloor);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * (x[i] - mean) / (denom * s);
}

}  // namespace

ad::Var stde(ad::Var predictions, ad::Var targets, StdKind kind) {
  require_batch("stde", predictions, targets, 2);
  const double sp = standard_deviation(predictions.value().values(), kind);
  const double st = standard_deviation(targets.value().values(), kind);
  const double diff = sp - st;
  const double n = static_cast<double>(predictions.numel());
  const double denom = kind == StdKind::sample ? n - 1.0 : n;

  ad::Var inputs[] = {predictions, targets};
  return predictions.graph->record(
      ad::Tensor::scalar(std::fabs(diff)), inputs, [sp, st, diff, denom](const ad::BackwardContext& ctx) {
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double g = ctx.grad_out[0] * sign;
        if (g == 0.0) return;
        if (!ctx.input_grads[0].empty()) add_std_grad(ctx.input_grads[0], *ctx.inputs[0], sp, denom, g);
        if (!ctx.input_grads[1].empty()) add_std_grad(ctx.input_grads[1], *ctx.inputs[1], st, denom, -g);
      });
}

ad::Var mse_loss(ad::Var predictions, ad::Var targets) {
  require_batch("mse_loss", predictions, targets, 1);
  ad::Var diff = predictions - targets;
  return ad::mean(diff * diff);
}

BatchLossReport combined_loss(ad::Var predictions, ad::Var targets, double p, StdKind kind) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(fmt::format("combined_loss: p={} outside [0, 1]", p));
  }
  ad::Var stde_part = stde(predictions, targets, kind);
  ad::Var mse_part = mse_loss(predictions, targets);
  ad::Var total = ad::scale(stde_part, p) + ad::scale(mse_part, 1.0 - p);

  BatchLossReport report;
  report.total = total;
  report.total_value = total.value().item();
  report.mse_part = mse_part.value().item();
  report.stde_part = stde_part.value().item();
  report.p_used = p;
  return report;
}

}  // namespace dynloss::loss
