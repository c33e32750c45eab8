// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dynloss/dataset.hpp"

namespace dynloss::data {

/// Synthetic essays whose scores follow a clipped skew-normal distribution and
/// whose text carries the score through marker-word frequencies.
///
/// Each token is a marker with probability `marker_rate`, otherwise a filler
/// word. A marker is drawn from the "strong" group with probability equal to
/// the essay's latent target and from the "weak" group otherwise, so the
/// target is recoverable from the text up to sampling noise.
struct SynthSpec {
  std::size_t n = 2000;
  double mean = 0.5;
  double std = 0.17;
  /// Target skewness of the latent distribution, |skew| < 0.99.
  double skew = 0.0;
  std::uint64_t seed = 0;
  /// Scores are emitted on this ASAP prompt's integer range.
  int prompt_id = 1;

  std::size_t filler_words = 400;
  std::size_t marker_words = 8;  // per group
  double marker_rate = 0.3;
  std::size_t min_len = 40;
  std::size_t max_len = 80;

  /// Throws std::invalid_argument for n < 10, std outside (0, 0.5), mean not
  /// at least two std away from both ends of [0, 1], |skew| >= 0.99, or
  /// malformed text parameters.
  void validate() const;
};

/// Deterministic in spec.seed.
std::vector<Essay> synth_imbalanced(const SynthSpec& spec);

/// Pseudo-word for lexicon slot `index` (stable, lowercase ASCII letters).
std::string synth_word(std::size_t index);

}  // namespace dynloss::data
