// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynloss/token.hpp"
#include "dynloss/vocabulary.hpp"

namespace dynloss::data {

/// Raised for unreadable or structurally invalid input files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-prompt integer score range of the ASAP essay sets.
struct PromptSpec {
  int prompt_id = 1;
  int min_score = 0;
  int max_score = 1;

  double normalize(int score) const;
  /// Inverse of normalize for values produced by it.
  int denormalize(double normalized) const;
  bool contains(int score) const { return score >= min_score && score <= max_score; }
};

/// Throws std::out_of_range unless 1 <= prompt_id <= 8.
PromptSpec asap_prompt(int prompt_id);

struct Essay {
  long long essay_id = 0;
  int prompt_id = 0;
  std::string text;
  int score = 0;
  double normalized = 0.0;
};

struct Sample {
  std::vector<TokenId> tokens;
  double target = 0.0;  // normalized score in [0, 1]
  int score = 0;
  int prompt_id = 0;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct AsapLoad {
  std::vector<Essay> essays;
  std::vector<RowIssue> rejected;
};

/// Reads a tab-separated file with at least the columns essay_id, essay_set,
/// essay and domain1_score (located by header name). Rows of other prompts are
/// skipped silently; malformed rows and out-of-range scores are collected in
/// `rejected`. A missing column or unreadable file throws DataError.
AsapLoad load_asap_tsv(std::istream& in, const PromptSpec& prompt);
AsapLoad load_asap_tsv(const std::filesystem::path& path, const PromptSpec& prompt);

/// Writes essays in the same four-column layout. Tabs and newlines inside the
/// text are replaced by spaces.
void write_asap_tsv(std::ostream& out, std::span<const Essay> essays);

/// Encodes and truncates to max_len tokens. Essays that encode to nothing get
/// a single [UNK] so every sample has length >= 1.
std::vector<Sample> make_samples(std::span<const Essay> essays, const Vocabulary& vocab,
                                 std::size_t max_len);

/// Seeded shuffle, then the first floor(n * train_frac) items go to train.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::vector<T> items, double train_frac,
                                                std::uint64_t seed) {
  if (items.size() < 2) throw std::invalid_argument("split: need at least 2 samples");
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw std::invalid_argument("split: train_frac must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  auto n_train = static_cast<std::size_t>(static_cast<double>(items.size()) * train_frac);
  std::vector<T> eval(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(n_train)),
                      std::make_move_iterator(items.end()));
  items.resize(n_train);
  return {std::move(items), std::move(eval)};
}

/// Index batches for one epoch, shuffled with seed + epoch. A trailing batch
/// of one is merged into the previous batch, or dropped when
/// `drop_undersized`. Throws if batch_size < 2 or n < 2.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch,
                                              bool drop_undersized = false);

}  // namespace dynloss::data
