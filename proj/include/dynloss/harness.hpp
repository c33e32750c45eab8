// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynloss/dataset.hpp"
#include "dynloss/loss_schedule.hpp"
#include "dynloss/metrics.hpp"
#include "dynloss/nn.hpp"
#include "dynloss/optimizer.hpp"
#include "dynloss/synthetic.hpp"
#include "dynloss/vocabulary.hpp"

namespace dynloss::harness {

enum class LossMode { dynamic, mse_only };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);

struct OptimizerConfig {
  optim::OptimizerKind kind = optim::OptimizerKind::adam;
  double learning_rate = 1e-3;
  int epochs = 50;
  std::size_t batch_size = 32;
  /// Global-norm gradient clipping; <= 0 disables it.
  double clip_norm = 5.0;
};

struct DataConfig {
  /// ASAP-layout TSV. When empty the synthetic generator is used.
  std::filesystem::path tsv;
  int prompt = 1;
  data::SynthSpec synth;
  double train_frac = 0.9;
  std::size_t vocab_max = 4000;
  std::size_t min_freq = 2;
};

struct RunConfig {
  LossMode mode = LossMode::dynamic;
  /// `total` is filled in from the epoch count (or epochs x batches for the
  /// step unit) when training starts.
  loss::LossSchedule schedule;
  loss::StdKind std_kind = loss::StdKind::sample;
  nn::ModelConfig model;
  OptimizerConfig optimizer;
  DataConfig data;
  std::uint64_t seed = 0;
  /// Empty: nothing is written to disk.
  std::filesystem::path out_dir;
  /// Save epoch_<k>.ckpt every k epochs; 0 saves only the last epoch.
  int checkpoint_every = 0;
  unsigned eval_threads = 1;

  void validate() const;
};

/// Flat key=value rendering of every setting, one per line, in a fixed order.
std::string config_echo(const RunConfig& cfg);

struct PreparedData {
  data::PromptSpec prompt;
  data::Vocabulary vocab;
  std::vector<data::Sample> train;
  std::vector<data::Sample> eval;
  /// Rows the TSV loader skipped as malformed.
  std::vector<data::RowIssue> rejected;
};

/// Loads (or synthesises) essays, splits them, builds the vocabulary on the
/// training texts and encodes both splits. Throws data::DataError when the
/// source is unusable.
PreparedData prepare_data(const RunConfig& cfg);

struct Divergence {
  int epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
};

struct RunLog {
  std::vector<metrics::EpochMetrics> epochs;
  std::optional<std::filesystem::path> final_checkpoint;
  std::string config_echo;
  std::vector<double> epoch_seconds;
  std::optional<Divergence> diverged;
};

/// Losses above this (or non-finite) abort the run.
inline constexpr double kDivergenceThreshold = 1e6;

struct TrainHooks {
  /// Called after each epoch's updates, before evaluation.
  std::function<void(int epoch, const nn::ModelParams&)> after_epoch;
};

/// Sequential training over prepared data. `params` is updated in place.
RunLog train(const RunConfig& cfg, const PreparedData& data, nn::ModelParams& params,
             const TrainHooks& hooks = {});

/// Prepares data, initialises the model from cfg.seed and trains. Writes
/// metrics.csv, config.txt, vocab.txt and checkpoints when cfg.out_dir is set.
RunLog train(const RunConfig& cfg);

/// Model outputs for every sample, computed on `threads` workers. The result
/// does not depend on the thread count.
std::vector<double> predict_all(const nn::ModelParams& params, std::span<const data::Sample> samples,
                                unsigned threads = 1);

/// Normalised-space MSE/MAE/r2/std plus integer-space QWK.
metrics::EpochMetrics evaluate(const nn::ModelParams& params, std::span<const data::Sample> eval,
                               const data::PromptSpec& prompt, unsigned threads = 1);

/// Same metrics from precomputed predictions.
metrics::EpochMetrics evaluate_predictions(std::span<const double> predictions,
                                           std::span<const data::Sample> eval,
                                           const data::PromptSpec& prompt);

struct ScheduleRow {
  double fraction = 0.0;
  double p = 0.0;
};

/// `resolution` uniformly spaced fractions in [0, 1]; p from p_of_t with
/// total = resolution - 1, so the endpoints are exact.
std::vector<ScheduleRow> emit_schedule(const loss::LossSchedule& sched, int resolution);
void write_schedule_csv(std::ostream& out, std::span<const ScheduleRow> rows);

}  // namespace dynloss::harness
