// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace dynloss::metrics {

namespace {

void require_same_length(const char* name, std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument(fmt::format("{}: lengths {} and {} differ", name, a, b));
  if (a == 0) throw std::invalid_argument(fmt::format("{}: empty input", name));
}

}  // namespace

double qwk(std::span<const ScorePair> pairs, int min_score, int max_score) {
  if (pairs.empty()) throw std::invalid_argument("qwk: empty input");
  if (max_score - min_score + 1 < 2) {
    throw std::invalid_argument(fmt::format("qwk: score range [{}, {}] has fewer than 2 values",
                                            min_score, max_score));
  }
  const auto r = static_cast<std::size_t>(max_score - min_score + 1);
  std::vector<double> confusion(r * r, 0.0);
  std::vector<double> hist_truth(r, 0.0);
  std::vector<double> hist_pred(r, 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    if (p.truth < min_score || p.truth > max_score || p.pred < min_score || p.pred > max_score) {
      throw std::invalid_argument(fmt::format("qwk: pair {} ({}, {}) outside range [{}, {}]", k,
                                              p.truth, p.pred, min_score, max_score));
    }
    auto i = static_cast<std::size_t>(p.truth - min_score);
    auto j = static_cast<std::size_t>(p.pred - min_score);
    confusion[i * r + j] += 1.0;
    hist_truth[i] += 1.0;
    hist_pred[j] += 1.0;
  }

  // With unnormalised counts and integer weights (i - j)^2 both sums are exact
  // integers; the (R - 1)^2 and 1/n normalisations cancel in the ratio.
  const double n = static_cast<double>(pairs.size());
  double observed = 0.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double d = static_cast<double>(i) - static_cast<double>(j);
      double w = d * d;
      observed += w * confusion[i * r + j];
      expected += w * hist_truth[i] * hist_pred[j];
    }
  }
  if (expected == 0.0) return 0.0;
  return 1.0 - (n * observed) / expected;
}

double qwk(std::span<const int> truth, std::span<const int> pred, int min_score, int max_score) {
  require_same_length("qwk", truth.size(), pred.size());
  std::vector<ScorePair> pairs(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) pairs[i] = {truth[i], pred[i]};
  return qwk(pairs, min_score, max_score);
}

double mse(std::span<const double> truth, std::span<const double> pred) {
  require_same_length("mse", truth.size(), pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return acc / static_cast<double>(truth.size());
}

double mae(std::span<const double> truth, std::span<const double> pred) {
  require_same_length("mae", truth.size(), pred.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += std::fabs(pred[i] - truth[i]);
  return acc / static_cast<double>(truth.size());
}

double mae(std::span<const ScorePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("mae: empty input");
  double acc = 0.0;
  for (const auto& p : pairs) acc += std::fabs(static_cast<double>(p.pred - p.truth));
  return acc / static_cast<double>(pairs.size());
}

double r2(std::span<const double> truth, std::span<const double> pred) {
  require_same_length("r2", truth.size(), pred.size());
  double mean = 0.0;
  for (double v : truth) mean += v;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2: truth is constant");
  return 1.0 - ss_res / ss_tot;
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

int rescale_and_round(double pred_norm, int min_score, int max_score) {
  if (std::isnan(pred_norm)) throw std::invalid_argument("rescale_and_round: prediction is NaN");
  double raw = static_cast<double>(min_score) + pred_norm * static_cast<double>(max_score - min_score);
  double rounded = std::round(raw);  // half away from zero
  rounded = std::clamp(rounded, static_cast<double>(min_score), static_cast<double>(max_score));
  return static_cast<int>(rounded);
}

std::string metrics_csv_row(const EpochMetrics& m) {
  return fmt::format("{},{},{},{},{},{},{},{}", m.epoch, m.qwk, m.mse, m.mae,
                     m.r2 ? fmt::format("{}", *m.r2) : std::string("nan"), m.pred_std,
                     m.target_std, m.p);
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> rows) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& m : rows) out << metrics_csv_row(m) << '\n';
}

}  // namespace dynloss::metrics
