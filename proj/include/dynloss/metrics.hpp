// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dynloss::metrics {

struct ScorePair {
  int truth = 0;
  int pred = 0;
};

/// Quadratic weighted kappa between two integer raters on [min_score,
/// max_score]:
///
///   kappa = 1 - sum(w * O) / sum(w * E),  w_ij = (i - j)^2 / (R - 1)^2
///
/// with O the normalised confusion matrix and E the outer product of the two
/// marginals. Returns 0 when sum(w * E) == 0 (both raters constant and equal).
/// Throws on empty input, R < 2, or a pair outside the range.
double qwk(std::span<const ScorePair> pairs, int min_score, int max_score);
double qwk(std::span<const int> truth, std::span<const int> pred, int min_score, int max_score);

double mse(std::span<const double> truth, std::span<const double> pred);
double mae(std::span<const double> truth, std::span<const double> pred);
double mae(std::span<const ScorePair> pairs);

/// 1 - SS_res / SS_tot with the mean taken over the true values. Throws when
/// the truth is constant.
double r2(std::span<const double> truth, std::span<const double> pred);

/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> xs);

/// round(min + pred_norm * (max - min)), half away from zero, clamped to the
/// range.
int rescale_and_round(double pred_norm, int min_score, int max_score);

struct EpochMetrics {
  int epoch = 0;
  double qwk = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  /// Empty when the evaluation truth is constant.
  std::optional<double> r2;
  double pred_std = 0.0;
  double target_std = 0.0;
  double p = 0.0;
};

inline constexpr const char* kMetricsCsvHeader = "epoch,qwk,mse,mae,r2,pred_std,target_std,p";

/// Shortest round-trip formatting; undefined r2 is written as "nan".
std::string metrics_csv_row(const EpochMetrics& m);
void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows);

}  // namespace dynloss::metrics
