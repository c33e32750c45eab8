// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dynloss/checkpoint.hpp"
#include "dynloss/config.hpp"
#include "dynloss/harness.hpp"

namespace dynloss::cli {

namespace {

struct DivergedRun : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_real(double v) {
  auto s = fmt::format("{}", v);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

void add_schedule_options(CLI::App& cmd, loss::LossSchedule& sched) {
  cmd.add_option("--loss.a,--a", sched.a, "plateau value of the STDE weight p");
  cmd.add_option("--loss.b,--b", sched.hold, "fraction of training p is held at a");
  cmd.add_option("--loss.c,--c", sched.c, "decay rate of p after the hold");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  harness::RunConfig cfg;
  std::string mode = "dynamic";
  std::string unit = "epoch";
  std::string std_kind = "sample";
  std::string optimizer = "adam";
  std::optional<std::uint64_t> synth_seed;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "train the essay scorer and log per-epoch metrics");
  auto& cfg = a.cfg;
  cfg.out_dir = "dynloss-run";
  cmd->add_option("--mode", a.mode, "dynamic | mse_only");
  cmd->add_option("--seed", cfg.seed);
  add_schedule_options(*cmd, cfg.schedule);
  cmd->add_option("--loss.unit", a.unit, "epoch | step");
  cmd->add_option("--loss.std", a.std_kind, "sample | population");
  cmd->add_option("--optimizer", a.optimizer, "adam | sgd");
  cmd->add_option("--lr", cfg.optimizer.learning_rate);
  cmd->add_option("--epochs", cfg.optimizer.epochs);
  cmd->add_option("--batch-size", cfg.optimizer.batch_size);
  cmd->add_option("--clip-norm", cfg.optimizer.clip_norm, "global gradient norm cap; 0 disables");
  cmd->add_option("--embed-dim", cfg.model.embed_dim);
  cmd->add_option("--hidden-dim", cfg.model.hidden_dim);
  cmd->add_option("--max-seq-len", cfg.model.max_seq_len);
  cmd->add_option("--data", cfg.data.tsv, "ASAP-layout TSV; synthetic data when omitted");
  cmd->add_option("--prompt", cfg.data.prompt, "ASAP prompt id (1-8)");
  cmd->add_option("--train-frac", cfg.data.train_frac);
  cmd->add_option("--vocab-max", cfg.data.vocab_max);
  cmd->add_option("--min-freq", cfg.data.min_freq);
  auto& s = cfg.data.synth;
  cmd->add_option("--synth.n", s.n);
  cmd->add_option("--synth.mean", s.mean);
  cmd->add_option("--synth.std", s.std);
  cmd->add_option("--synth.skew", s.skew);
  cmd->add_option("--synth.seed", a.synth_seed, "defaults to --seed");
  cmd->add_option("--synth.prompt", s.prompt_id);
  cmd->add_option("--synth.filler-words", s.filler_words);
  cmd->add_option("--synth.marker-words", s.marker_words);
  cmd->add_option("--synth.marker-rate", s.marker_rate);
  cmd->add_option("--synth.min-len", s.min_len);
  cmd->add_option("--synth.max-len", s.max_len);
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--checkpoint-every", cfg.checkpoint_every, "0 keeps only the last epoch");
  cmd->add_option("--threads", cfg.eval_threads, "evaluation worker threads");
}

int run_train(TrainArgs& a, std::ostream& out, std::ostream& err) {
  auto& cfg = a.cfg;
  cfg.mode = harness::parse_loss_mode(a.mode);
  cfg.schedule.unit = loss::parse_schedule_unit(a.unit);
  if (a.std_kind == "sample") {
    cfg.std_kind = loss::StdKind::sample;
  } else if (a.std_kind == "population") {
    cfg.std_kind = loss::StdKind::population;
  } else {
    throw std::invalid_argument(fmt::format("unknown --loss.std '{}'", a.std_kind));
  }
  cfg.optimizer.kind = optim::parse_optimizer(a.optimizer);
  cfg.data.synth.seed = a.synth_seed.value_or(cfg.seed);
  cfg.validate();

  auto log = harness::train(cfg);
  for (const auto& m : log.epochs) {
    fmt::print(out, "epoch {:3d}  p={:.4f}  qwk={:.4f}  mse={:.5f}  pred_std={:.4f}  target_std={:.4f}\n",
               m.epoch, m.p, m.qwk, m.mse, m.pred_std, m.target_std);
  }
  if (log.diverged) {
    fmt::print(err, "run diverged at epoch {} batch {} (loss {})\n", log.diverged->epoch,
               log.diverged->batch, log.diverged->loss);
    throw DivergedRun("diverged");
  }
  fmt::print(out, "metrics written to {}\n", (cfg.out_dir / "metrics.csv").string());
  return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path vocab;
  std::filesystem::path data;
  int prompt = 1;
  unsigned threads = 1;
  std::filesystem::path out;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* cmd = app.add_subcommand("evaluate", "score a TSV with a saved checkpoint");
  cmd->add_option("--checkpoint", a.checkpoint)->required();
  cmd->add_option("--vocab", a.vocab)->required();
  cmd->add_option("--data", a.data)->required();
  cmd->add_option("--prompt", a.prompt);
  cmd->add_option("--threads", a.threads);
  cmd->add_option("--out", a.out, "metrics CSV path; stdout when omitted");
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.threads == 0) throw std::invalid_argument("--threads must be >= 1");
  auto params = nn::load_checkpoint(a.checkpoint);
  auto vocab = data::Vocabulary::load(a.vocab);
  if (vocab.size() != params.config.vocab_size) {
    throw data::DataError(fmt::format("vocabulary has {} tokens but checkpoint expects {}",
                                      vocab.size(), params.config.vocab_size));
  }
  auto prompt = data::asap_prompt(a.prompt);
  auto loaded = data::load_asap_tsv(a.data, prompt);
  for (const auto& r : loaded.rejected) fmt::print(err, "line {}: {}\n", r.line, r.message);
  if (loaded.essays.empty()) throw data::DataError("no essays to evaluate");
  auto samples = data::make_samples(loaded.essays, vocab, params.config.max_seq_len);
  auto m = harness::evaluate(params, samples, prompt, a.threads);
  std::vector<metrics::EpochMetrics> rows{m};
  if (a.out.empty()) {
    metrics::write_metrics_csv(out, rows);
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw data::DataError(fmt::format("cannot write {}", a.out.string()));
    metrics::write_metrics_csv(f, rows);
  }
  return kOk;
}

// ---------------------------------------------------------------- emit-schedule

struct ScheduleArgs {
  loss::LossSchedule sched;
  int resolution = 101;
  std::filesystem::path out;
};

void add_emit_schedule(CLI::App& app, ScheduleArgs& a) {
  auto* cmd = app.add_subcommand("emit-schedule", "write p against fraction of training as CSV");
  add_schedule_options(*cmd, a.sched);
  cmd->add_option("--resolution", a.resolution, "number of rows (>= 2)");
  cmd->add_option("--out", a.out, "CSV path; stdout when omitted");
}

int run_emit_schedule(const ScheduleArgs& a, std::ostream& out) {
  auto rows = harness::emit_schedule(a.sched, a.resolution);
  if (a.out.empty()) {
    harness::write_schedule_csv(out, rows);
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw data::DataError(fmt::format("cannot write {}", a.out.string()));
    harness::write_schedule_csv(f, rows);
  }
  return kOk;
}

// ---------------------------------------------------------------- synth-data

struct SynthArgs {
  data::SynthSpec spec;
  std::filesystem::path out;
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth-data", "write a synthetic imbalanced essay set as TSV");
  auto& s = a.spec;
  cmd->add_option("--n,--synth.n", s.n);
  cmd->add_option("--mean,--synth.mean", s.mean);
  cmd->add_option("--std,--synth.std", s.std);
  cmd->add_option("--skew,--synth.skew", s.skew);
  cmd->add_option("--seed,--synth.seed", s.seed);
  cmd->add_option("--prompt,--synth.prompt", s.prompt_id);
  cmd->add_option("--synth.filler-words", s.filler_words);
  cmd->add_option("--synth.marker-words", s.marker_words);
  cmd->add_option("--synth.marker-rate", s.marker_rate);
  cmd->add_option("--synth.min-len", s.min_len);
  cmd->add_option("--synth.max-len", s.max_len);
  cmd->add_option("--out", a.out, "TSV path; stdout when omitted");
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  auto essays = data::synth_imbalanced(a.spec);
  if (a.out.empty()) {
    data::write_asap_tsv(out, essays);
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw data::DataError(fmt::format("cannot write {}", a.out.string()));
    data::write_asap_tsv(f, essays);
  }
  return kOk;
}

// ---------------------------------------------------------------- qwk

struct QwkArgs {
  std::filesystem::path file;
  std::optional<int> min_score;
  std::optional<int> max_score;
  std::size_t truth_col = 0;
  std::size_t pred_col = 1;
};

void add_qwk(CLI::App& app, QwkArgs& a) {
  auto* cmd = app.add_subcommand("qwk", "quadratic weighted kappa between two CSV columns");
  cmd->add_option("--file", a.file)->required();
  cmd->add_option("--min", a.min_score, "lowest score; inferred when omitted");
  cmd->add_option("--max", a.max_score, "highest score; inferred when omitted");
  cmd->add_option("--truth-col", a.truth_col);
  cmd->add_option("--pred-col", a.pred_col);
}

bool parse_cell(std::string_view s, int& v) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

int run_qwk(const QwkArgs& a, std::ostream& out) {
  std::ifstream in(a.file);
  if (!in) throw data::DataError(fmt::format("cannot open {}", a.file.string()));
  std::vector<int> truth;
  std::vector<int> pred;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    int t = 0;
    int p = 0;
    bool ok = std::max(a.truth_col, a.pred_col) < cells.size() && parse_cell(cells[a.truth_col], t) &&
              parse_cell(cells[a.pred_col], p);
    if (!ok) {
      if (line_no == 1) continue;  // header
      throw data::DataError(fmt::format("{}:{}: expected integer scores", a.file.string(), line_no));
    }
    truth.push_back(t);
    pred.push_back(p);
  }
  if (truth.empty()) throw data::DataError(fmt::format("{} has no score rows", a.file.string()));
  int lo = a.min_score.value_or(std::min(*std::min_element(truth.begin(), truth.end()),
                                         *std::min_element(pred.begin(), pred.end())));
  int hi = a.max_score.value_or(std::max(*std::max_element(truth.begin(), truth.end()),
                                         *std::max_element(pred.begin(), pred.end())));
  out << format_real(metrics::qwk(truth, pred, lo, hi)) << '\n';
  return kOk;
}

// Pulls `--config PATH` / `--config=PATH` out of the argument list.
std::optional<std::string> take_config_flag(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw config::ConfigError("--config needs a path");
      auto path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      return path;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      auto path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      return path;
    }
  }
  return std::nullopt;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dynloss: dynamic STDE/MSE loss training for essay scoring"};
  app.name("dynloss");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  TrainArgs train_args;
  EvaluateArgs eval_args;
  ScheduleArgs sched_args;
  SynthArgs synth_args;
  QwkArgs qwk_args;
  add_train(app, train_args);
  add_evaluate(app, eval_args);
  add_emit_schedule(app, sched_args);
  add_synth(app, synth_args);
  add_qwk(app, qwk_args);

  try {
    std::vector<std::string> args = raw_args;
    if (!args.empty()) {
      std::vector<std::string> rest(args.begin() + 1, args.end());
      if (auto path = take_config_flag(rest)) {
        rest = config::merge_config_args(config::read_config_file(*path), rest);
      }
      rest.insert(rest.begin(), args.front());
      args = std::move(rest);
    }
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);

    if (app.got_subcommand("train")) return run_train(train_args, out, err);
    if (app.got_subcommand("evaluate")) return run_evaluate(eval_args, out, err);
    if (app.got_subcommand("emit-schedule")) return run_emit_schedule(sched_args, out);
    if (app.got_subcommand("synth-data")) return run_synth(synth_args, out);
    if (app.got_subcommand("qwk")) return run_qwk(qwk_args, out);
    return kUsageError;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const DivergedRun&) {
    return kDiverged;
  } catch (const data::DataError& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const nn::CheckpointError& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  } catch (const std::invalid_argument& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const std::out_of_range& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return kDataError;
  }
}

}  // namespace dynloss::cli
