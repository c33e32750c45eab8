// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dynloss/gradient_check.hpp"
#include "dynloss/loss_schedule.hpp"

namespace dynloss::loss {
namespace {

using ad::Graph;
using ad::Tensor;
using ad::Var;

double eval(Var v) { return v.value().item(); }

// Independent sample standard deviation (two-pass, n-1 denominator).
double oracle_std(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

TEST(Stde, EqualSpreadIsZero) {
  Graph g;
  auto x = g.constant(Tensor::vector({0.1, 0.9}));
  EXPECT_EQ(eval(stde(x, x)), 0.0);
}

TEST(Stde, ConstantPredictionsAgainstSpreadTargets) {
  Graph g;
  auto v = stde(g.constant(Tensor::vector({0.5, 0.5})), g.constant(Tensor::vector({0.0, 1.0})));
  EXPECT_NEAR(eval(v), std::sqrt(0.5), 1e-15);
}

TEST(Stde, ShiftInvariantWhileMseIsNot) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto pred = random_vec(rng, 8, 0, 1);
    auto target = random_vec(rng, 8, 0, 1);
    auto shifted = pred;
    for (auto& x : shifted) x += 0.2;
    Graph g;
    auto t = g.constant(Tensor::vector(target));
    auto a = g.constant(Tensor::vector(pred));
    auto b = g.constant(Tensor::vector(shifted));
    EXPECT_NEAR(eval(stde(a, t)), eval(stde(b, t)), 1e-14);
    EXPECT_NE(eval(mse_loss(a, t)), eval(mse_loss(b, t)));
  }
}

TEST(Stde, MatchesOracleOnRandomBatches) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + trial % 30;
    auto pred = random_vec(rng, n, 0, 1);
    auto target = random_vec(rng, n, 0, 1);
    Graph g;
    auto v = stde(g.constant(Tensor::vector(pred)), g.constant(Tensor::vector(target)));
    EXPECT_NEAR(eval(v), std::abs(oracle_std(pred) - oracle_std(target)), 1e-14);
  }
}

TEST(Stde, PopulationVariantUsesNDenominator) {
  Graph g;
  auto v = stde(g.constant(Tensor::vector({0.5, 0.5})), g.constant(Tensor::vector({0.0, 1.0})),
                StdKind::population);
  EXPECT_NEAR(eval(v), 0.5, 1e-15);
}

TEST(Stde, RejectsDegenerateBatches) {
  Graph g;
  auto one = g.constant(Tensor::vector({0.3}));
  EXPECT_THROW(stde(one, one), std::invalid_argument);
  EXPECT_THROW(stde(g.constant(Tensor::vector({0.1, 0.2})), g.constant(Tensor::vector({0.1, 0.2, 0.3}))),
               std::invalid_argument);
}

TEST(Stde, CollapsedPredictionsStillGetFiniteGradient) {
  Tensor pred = Tensor::vector({0.4, 0.4, 0.4});
  pred.set_requires_grad(true);
  Graph g;
  auto v = stde(g.parameter(pred), g.constant(Tensor::vector({0.0, 0.5, 1.0})));
  EXPECT_NEAR(eval(v), 0.5, 1e-15);
  g.backward(v);
  EXPECT_TRUE(pred.all_finite());
  for (double gr : pred.grad()) EXPECT_TRUE(std::isfinite(gr));
}

TEST(Stde, GradientCheckAtNonDegeneratePoint) {
  const std::vector<double> target{0.1, 0.7, 0.35, 0.9, 0.2};
  ad::ScalarFn f = [&](Graph& g, Var x) { return stde(x, g.constant(Tensor::vector(target))); };
  auto report = ad::gradient_check(f, Tensor::vector({0.2, 0.25, 0.4, 0.3, 0.45}), 1e-5, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Mse, HandExamples) {
  Graph g;
  auto a = g.constant(Tensor::vector({2, 2, 2}));
  auto b = g.constant(Tensor::vector({1, 2, 3}));
  EXPECT_NEAR(eval(mse_loss(a, b)), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(eval(mse_loss(a, b)), eval(mse_loss(b, a)));
  EXPECT_EQ(eval(mse_loss(b, b)), 0.0);
  EXPECT_THROW(mse_loss(a, g.constant(Tensor::vector({1, 2}))), std::invalid_argument);
}

TEST(CombinedLoss, Endpoints) {
  Graph g;
  auto pred = g.constant(Tensor::vector({0.2, 0.6, 0.3, 0.5}));
  auto target = g.constant(Tensor::vector({0.1, 0.9, 0.2, 0.4}));
  double m = eval(mse_loss(pred, target));
  double s = eval(stde(pred, target));
  auto at0 = combined_loss(pred, target, 0.0);
  auto at1 = combined_loss(pred, target, 1.0);
  EXPECT_EQ(at0.total_value, m);
  EXPECT_EQ(at1.total_value, s);
  EXPECT_EQ(at0.p_used, 0.0);
  EXPECT_EQ(at1.p_used, 1.0);
}

TEST(CombinedLoss, WeightedSumOfParts) {
  // Zero predictions against targets t1 < t2 chosen so STDE = 0.4 and MSE = 0.2:
  // (t2 - t1) / sqrt(2) = 0.4 and (t1^2 + t2^2) / 2 = 0.2.
  const double d = 0.4 * std::sqrt(2.0);
  const double t1 = (-2 * d + std::sqrt(4 * d * d + 0.64)) / 4;
  Graph g;
  auto pred = g.constant(Tensor::vector({0.0, 0.0}));
  auto target = g.constant(Tensor::vector({t1, t1 + d}));
  auto r = combined_loss(pred, target, 0.5);
  EXPECT_NEAR(r.stde_part, 0.4, 1e-12);
  EXPECT_NEAR(r.mse_part, 0.2, 1e-12);
  EXPECT_NEAR(r.total_value, 0.3, 1e-12);
  EXPECT_EQ(eval(r.total), r.total_value);
}

TEST(CombinedLoss, RejectsWeightOutsideUnitInterval) {
  Graph g;
  auto pred = g.constant(Tensor::vector({0.2, 0.6}));
  EXPECT_THROW(combined_loss(pred, pred, -0.1), std::invalid_argument);
  EXPECT_THROW(combined_loss(pred, pred, 1.1), std::invalid_argument);
}

// total = p*stde + (1-p)*mse and total >= 0 with equality only in the
// documented cases.
TEST(CombinedLoss, ReportInvariantsOnRandomBatches) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pd(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + trial % 12;
    auto pred = random_vec(rng, n, 0, 1);
    auto target = random_vec(rng, n, 0, 1);
    double p = pd(rng);
    Graph g;
    auto r = combined_loss(g.constant(Tensor::vector(pred)), g.constant(Tensor::vector(target)), p);
    EXPECT_NEAR(r.total_value, p * r.stde_part + (1 - p) * r.mse_part, 1e-12);
    EXPECT_GT(r.total_value, 0.0);
  }
  Graph g;
  auto same = g.constant(Tensor::vector({0.3, 0.6, 0.1}));
  EXPECT_EQ(combined_loss(same, same, 0.4).total_value, 0.0);
  auto shifted = g.constant(Tensor::vector({0.4, 0.7, 0.2}));
  EXPECT_NEAR(combined_loss(shifted, same, 1.0).total_value, 0.0, 1e-15);
  EXPECT_GT(combined_loss(shifted, same, 0.99).total_value, 0.0);
}

TEST(CombinedLoss, GradientIsBlendOfPartGradients) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pd(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto target = random_vec(rng, 6, 0, 1);
    auto point = random_vec(rng, 6, 0.1, 0.9);
    // Keep the two spreads apart so |.| is differentiable near the point.
    if (std::abs(oracle_std(point) - oracle_std(target)) < 1e-3) continue;
    double p = pd(rng);
    ad::ScalarFn f = [&](Graph& g, Var x) {
      return combined_loss(x, g.constant(Tensor::vector(target)), p).total;
    };
    auto report = ad::gradient_check(f, Tensor::vector(point), 1e-5, 1e-4);
    EXPECT_TRUE(report.passed) << "trial " << trial << " err " << report.max_rel_error;

    // Compare with p*grad(stde) + (1-p)*grad(mse) computed separately.
    auto grad_of = [&](auto build) {
      Tensor x = Tensor::vector(point);
      x.set_requires_grad(true);
      Graph g;
      g.backward(build(g, g.parameter(x)));
      return std::vector<double>(x.grad().begin(), x.grad().end());
    };
    auto gs = grad_of([&](Graph& g, Var x) { return stde(x, g.constant(Tensor::vector(target))); });
    auto gm = grad_of([&](Graph& g, Var x) { return mse_loss(x, g.constant(Tensor::vector(target))); });
    for (std::size_t i = 0; i < point.size(); ++i) {
      EXPECT_NEAR(report.analytic[i], p * gs[i] + (1 - p) * gm[i], 1e-12);
    }
  }
}

TEST(CombinedLoss, GradientCheckAtFixedWeights) {
  const std::vector<double> target{0.15, 0.8, 0.45, 0.6};
  for (double p : {0.0, 0.3, 1.0}) {
    ad::ScalarFn f = [&](Graph& g, Var x) {
      return combined_loss(x, g.constant(Tensor::vector(target)), p).total;
    };
    auto report = ad::gradient_check(f, Tensor::vector({0.3, 0.5, 0.35, 0.55}), 1e-5, 1e-4);
    EXPECT_TRUE(report.passed) << "p=" << p << " err " << report.max_rel_error;
  }
}

LossSchedule fig_schedule(std::int64_t total) {
  LossSchedule s;
  s.a = 1.0;
  s.hold = 0.15;
  s.c = 1.1;
  s.total = total;
  return s;
}

TEST(Schedule, HandValues) {
  auto s = fig_schedule(100);
  EXPECT_EQ(p_of_t(s, 0), 1.0);
  EXPECT_EQ(p_of_t(s, 15), 1.0);
  EXPECT_NEAR(p_of_t(s, 100), std::exp(-0.935), 1e-12);
  EXPECT_NEAR(p_of_t(s, 100), 0.3926, 1e-4);
}

TEST(Schedule, RejectsOutOfRangeT) {
  auto s = fig_schedule(10);
  EXPECT_THROW(p_of_t(s, 11), std::out_of_range);
  EXPECT_THROW(p_of_t(s, -1), std::out_of_range);
}

TEST(Schedule, ValidateRejectsBadConstants) {
  auto s = fig_schedule(10);
  s.hold = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = fig_schedule(10);
  s.c = -0.1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = fig_schedule(0);
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Schedule, UnitNamesRoundTrip) {
  EXPECT_EQ(parse_schedule_unit(to_string(ScheduleUnit::epoch)), ScheduleUnit::epoch);
  EXPECT_EQ(parse_schedule_unit(to_string(ScheduleUnit::step)), ScheduleUnit::step);
  EXPECT_THROW(parse_schedule_unit("hour"), std::invalid_argument);
}

// Plateau, strict decrease after the hold, continuity and the a bound, over
// random schedules.
TEST(Schedule, ShapeInvariantsOnRandomSchedules) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ua(0.05, 1.0);
  std::uniform_real_distribution<double> ub(0.0, 0.9);
  std::uniform_real_distribution<double> uc(0.01, 5.0);
  std::uniform_int_distribution<std::int64_t> ut(2, 400);
  for (int trial = 0; trial < 50; ++trial) {
    LossSchedule s;
    s.a = ua(rng);
    s.hold = ub(rng);
    s.c = uc(rng);
    s.total = ut(rng);
    double prev = s.a;
    for (std::int64_t t = 0; t <= s.total; ++t) {
      double p = p_of_t(s, t);
      double frac = static_cast<double>(t) / static_cast<double>(s.total);
      double expected = std::min(s.a, s.a * std::exp(-s.c * (frac - s.hold)));
      EXPECT_NEAR(p, expected, 1e-12);
      EXPECT_LE(p, s.a);
      if (frac <= s.hold) {
        EXPECT_EQ(p, s.a);
      } else {
        EXPECT_LT(p, prev);
      }
      prev = p;
    }
  }
}

}  // namespace
}  // namespace dynloss::loss
