// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "dynloss/checkpoint.hpp"

namespace dynloss::harness {

std::string_view to_string(LossMode mode) { return mode == LossMode::dynamic ? "dynamic" : "mse_only"; }

LossMode parse_loss_mode(std::string_view text) {
  if (text == "dynamic") return LossMode::dynamic;
  if (text == "mse_only") return LossMode::mse_only;
  throw std::invalid_argument(fmt::format("unknown mode '{}' (expected dynamic|mse_only)", text));
}

void RunConfig::validate() const {
  if (optimizer.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (optimizer.batch_size < 2) throw std::invalid_argument("batch size must be >= 2");
  if (!(optimizer.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(data.train_frac > 0.0 && data.train_frac < 1.0)) {
    throw std::invalid_argument("train fraction must be in (0, 1)");
  }
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint cadence must be >= 0");
  if (eval_threads == 0) throw std::invalid_argument("evaluation threads must be >= 1");
  auto sched = schedule;
  sched.total = 1;
  sched.validate();
  auto model_cfg = model;
  model_cfg.vocab_size = 1;  // set from the data
  model_cfg.validate();
  if (data.tsv.empty()) data.synth.validate();
}

std::string config_echo(const RunConfig& cfg) {
  std::string out;
  auto line = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  line("mode", to_string(cfg.mode));
  line("seed", cfg.seed);
  line("loss.a", cfg.schedule.a);
  line("loss.b", cfg.schedule.hold);
  line("loss.c", cfg.schedule.c);
  line("loss.unit", loss::to_string(cfg.schedule.unit));
  line("loss.std", cfg.std_kind == loss::StdKind::sample ? "sample" : "population");
  line("optimizer", optim::to_string(cfg.optimizer.kind));
  line("lr", cfg.optimizer.learning_rate);
  line("epochs", cfg.optimizer.epochs);
  line("batch-size", cfg.optimizer.batch_size);
  line("clip-norm", cfg.optimizer.clip_norm);
  line("embed-dim", cfg.model.embed_dim);
  line("hidden-dim", cfg.model.hidden_dim);
  line("max-seq-len", cfg.model.max_seq_len);
  line("data", cfg.data.tsv.string());
  line("prompt", cfg.data.prompt);
  line("train-frac", cfg.data.train_frac);
  line("vocab-max", cfg.data.vocab_max);
  line("min-freq", cfg.data.min_freq);
  const auto& s = cfg.data.synth;
  line("synth.n", s.n);
  line("synth.mean", s.mean);
  line("synth.std", s.std);
  line("synth.skew", s.skew);
  line("synth.seed", s.seed);
  line("synth.prompt", s.prompt_id);
  line("synth.filler-words", s.filler_words);
  line("synth.marker-words", s.marker_words);
  line("synth.marker-rate", s.marker_rate);
  line("synth.min-len", s.min_len);
  line("synth.max-len", s.max_len);
  line("out", cfg.out_dir.string());
  line("checkpoint-every", cfg.checkpoint_every);
  line("threads", cfg.eval_threads);
  return out;
}

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData prepared;
  std::vector<data::Essay> essays;
  if (!cfg.data.tsv.empty()) {
    prepared.prompt = data::asap_prompt(cfg.data.prompt);
    auto loaded = data::load_asap_tsv(cfg.data.tsv, prepared.prompt);
    essays = std::move(loaded.essays);
    prepared.rejected = std::move(loaded.rejected);
  } else {
    prepared.prompt = data::asap_prompt(cfg.data.synth.prompt_id);
    essays = data::synth_imbalanced(cfg.data.synth);
  }
  if (essays.size() < 2) {
    throw data::DataError(fmt::format("need at least 2 essays for prompt {}, found {}",
                                      prepared.prompt.prompt_id, essays.size()));
  }
  auto [train_essays, eval_essays] = data::split(std::move(essays), cfg.data.train_frac, cfg.seed);
  if (train_essays.size() < 2 || eval_essays.empty()) {
    throw data::DataError("split left too few essays for training or evaluation");
  }

  std::vector<std::string> corpus;
  corpus.reserve(train_essays.size());
  for (const auto& e : train_essays) corpus.push_back(e.text);
  prepared.vocab = data::build_vocab(corpus, cfg.data.vocab_max, cfg.data.min_freq);
  prepared.train = data::make_samples(train_essays, prepared.vocab, cfg.model.max_seq_len);
  prepared.eval = data::make_samples(eval_essays, prepared.vocab, cfg.model.max_seq_len);
  return prepared;
}

std::vector<double> predict_all(const nn::ModelParams& params, std::span<const data::Sample> samples,
                                unsigned threads) {
  std::vector<double> out(samples.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = nn::predict(params, samples[i].tokens);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  if (threads <= 1) {
    work(0, samples.size());
    return out;
  }
  // Each worker owns a disjoint slice; no reduction happens across threads.
  std::vector<std::thread> pool;
  const std::size_t chunk = (samples.size() + threads - 1) / threads;
  for (unsigned k = 0; k < threads; ++k) {
    std::size_t begin = k * chunk;
    std::size_t end = std::min(samples.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(work, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

metrics::EpochMetrics evaluate_predictions(std::span<const double> predictions,
                                           std::span<const data::Sample> eval,
                                           const data::PromptSpec& prompt) {
  if (eval.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  if (predictions.size() != eval.size()) {
    throw std::invalid_argument("evaluate: prediction count does not match evaluation set");
  }
  std::vector<double> truth(eval.size());
  std::vector<metrics::ScorePair> pairs(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    truth[i] = eval[i].target;
    pairs[i] = {eval[i].score,
                metrics::rescale_and_round(predictions[i], prompt.min_score, prompt.max_score)};
  }
  metrics::EpochMetrics m;
  m.qwk = metrics::qwk(pairs, prompt.min_score, prompt.max_score);
  m.mse = metrics::mse(truth, predictions);
  m.mae = metrics::mae(truth, predictions);
  try {
    m.r2 = metrics::r2(truth, predictions);
  } catch (const std::invalid_argument&) {
    m.r2.reset();
  }
  m.pred_std = metrics::sample_std(predictions);
  m.target_std = metrics::sample_std(truth);
  return m;
}

metrics::EpochMetrics evaluate(const nn::ModelParams& params, std::span<const data::Sample> eval,
                               const data::PromptSpec& prompt, unsigned threads) {
  auto predictions = predict_all(params, eval, threads);
  return evaluate_predictions(predictions, eval, prompt);
}

namespace {

void write_metrics_file(const std::filesystem::path& dir, std::span<const metrics::EpochMetrics> rows) {
  std::ofstream out(dir / "metrics.csv", std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir / "metrics.csv").string()));
  metrics::write_metrics_csv(out, rows);
}

}  // namespace

RunLog train(const RunConfig& cfg, const PreparedData& data, nn::ModelParams& params,
             const TrainHooks& hooks) {
  cfg.validate();
  if (data.train.size() < 2) throw std::invalid_argument("train: need at least 2 training samples");
  if (data.eval.empty()) throw std::invalid_argument("train: empty evaluation set");

  RunLog log;
  log.config_echo = config_echo(cfg);
  const bool write = !cfg.out_dir.empty();
  if (write) std::filesystem::create_directories(cfg.out_dir);

  const int epochs = cfg.optimizer.epochs;
  const std::size_t batches_per_epoch =
      data::batches(data.train.size(), cfg.optimizer.batch_size, cfg.seed, 0).size();
  loss::LossSchedule sched = cfg.schedule;
  sched.total = sched.unit == loss::ScheduleUnit::epoch
                    ? epochs
                    : static_cast<std::int64_t>(epochs) * static_cast<std::int64_t>(batches_per_epoch);

  auto optimizer = optim::make_optimizer(cfg.optimizer.kind, cfg.optimizer.learning_rate);
  params.set_requires_grad(true);

  std::int64_t step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    auto p_at = [&](std::int64_t t) {
      return cfg.mode == LossMode::dynamic ? loss::p_of_t(sched, t) : 0.0;
    };
    const double epoch_p = p_at(sched.unit == loss::ScheduleUnit::epoch ? epoch : step);

    auto plan = data::batches(data.train.size(), cfg.optimizer.batch_size, cfg.seed,
                              static_cast<std::uint64_t>(epoch));
    for (std::size_t b = 0; b < plan.size(); ++b, ++step) {
      const double p = sched.unit == loss::ScheduleUnit::epoch ? epoch_p : p_at(step);

      ad::Graph g;
      auto bound = nn::bind_trainable(g, params);
      std::vector<ad::Var> preds;
      std::vector<double> targets;
      preds.reserve(plan[b].size());
      targets.reserve(plan[b].size());
      for (auto idx : plan[b]) {
        preds.push_back(nn::predict(bound, data.train[idx].tokens));
        targets.push_back(data.train[idx].target);
      }
      ad::Var pv = ad::concat(preds);
      ad::Var tv = g.constant(ad::Tensor::vector(std::move(targets)));

      ad::Var total;
      if (cfg.mode == LossMode::mse_only) {
        total = loss::mse_loss(pv, tv);
      } else {
        total = loss::combined_loss(pv, tv, p, cfg.std_kind).total;
      }
      const double value = total.value().item();
      if (!std::isfinite(value) || value > kDivergenceThreshold) {
        log.diverged = Divergence{epoch, b, value};
        break;
      }

      params.zero_grad();
      g.backward(total);
      if (cfg.optimizer.clip_norm > 0.0) optim::clip_grad_norm(params, cfg.optimizer.clip_norm);
      optimizer->step(params);
    }
    if (log.diverged) break;
    if (hooks.after_epoch) hooks.after_epoch(epoch, params);

    auto m = evaluate(params, data.eval, data.prompt, cfg.eval_threads);
    m.epoch = epoch;
    m.p = epoch_p;
    log.epochs.push_back(m);
    log.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());

    if (write) {
      write_metrics_file(cfg.out_dir, log.epochs);
      const bool last = epoch + 1 == epochs;
      const bool cadence = cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0;
      if (last || cadence) {
        auto path = cfg.out_dir / fmt::format("epoch_{}.ckpt", epoch);
        nn::save_checkpoint(path, params);
        log.final_checkpoint = path;
      }
    }
  }
  if (write) write_metrics_file(cfg.out_dir, log.epochs);
  params.set_requires_grad(false);
  return log;
}

RunLog train(const RunConfig& cfg) {
  cfg.validate();
  auto data = prepare_data(cfg);
  nn::ModelConfig model_cfg = cfg.model;
  model_cfg.vocab_size = data.vocab.size();
  model_cfg.seed = cfg.seed;
  auto params = nn::init_params(model_cfg);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream(cfg.out_dir / "config.txt", std::ios::trunc) << config_echo(cfg);
    data.vocab.save(cfg.out_dir / "vocab.txt");
  }
  return train(cfg, data, params);
}

std::vector<ScheduleRow> emit_schedule(const loss::LossSchedule& sched, int resolution) {
  if (resolution < 2) throw std::invalid_argument("emit_schedule: resolution must be >= 2");
  loss::LossSchedule s = sched;
  s.total = resolution - 1;
  std::vector<ScheduleRow> rows;
  rows.reserve(static_cast<std::size_t>(resolution));
  for (int k = 0; k < resolution; ++k) {
    rows.push_back({static_cast<double>(k) / static_cast<double>(s.total), loss::p_of_t(s, k)});
  }
  return rows;
}

void write_schedule_csv(std::ostream& out, std::span<const ScheduleRow> rows) {
  out << "fraction,p\n";
  for (const auto& r : rows) out << fmt::format("{},{}\n", r.fraction, r.p);
}

}  // namespace dynloss::harness
