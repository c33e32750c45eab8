// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace dynloss::data {

void SynthSpec::validate() const {
  if (n < 10) throw std::invalid_argument(fmt::format("synthetic n={} must be >= 10", n));
  if (!(std > 0.0 && std < 0.5)) {
    throw std::invalid_argument(fmt::format("synthetic std={} must be in (0, 0.5)", std));
  }
  if (!(mean - 2.0 * std >= 0.0 && mean + 2.0 * std <= 1.0)) {
    throw std::invalid_argument(fmt::format(
        "synthetic mean={} with std={} is unreachable: clipping to [0, 1] would distort the moments",
        mean, std));
  }
  if (!(std::fabs(skew) < 0.99)) {
    throw std::invalid_argument(fmt::format("synthetic skew={} must satisfy |skew| < 0.99", skew));
  }
  if (filler_words == 0 || marker_words == 0) {
    throw std::invalid_argument("synthetic lexicon sizes must be positive");
  }
  if (!(marker_rate > 0.0 && marker_rate <= 1.0)) {
    throw std::invalid_argument("synthetic marker_rate must be in (0, 1]");
  }
  if (min_len == 0 || max_len < min_len) {
    throw std::invalid_argument("synthetic essay lengths must satisfy 1 <= min_len <= max_len");
  }
  asap_prompt(prompt_id);
}

std::string synth_word(std::size_t index) {
  static constexpr char kOnsets[] = "bdfgklmnprstvz";
  static constexpr char kVowels[] = "aeiou";
  constexpr std::size_t n_on = sizeof(kOnsets) - 1;
  constexpr std::size_t n_vo = sizeof(kVowels) - 1;
  constexpr std::size_t syllables = n_on * n_vo;
  // Three syllables cover 70^3 slots; the result is unique per index.
  std::string word;
  std::size_t rest = index;
  for (int k = 0; k < 3; ++k) {
    std::size_t s = rest % syllables;
    rest /= syllables;
    word.push_back(kOnsets[s / n_vo]);
    word.push_back(kVowels[s % n_vo]);
  }
  return word;
}

namespace {

// Skew-normal shape parameter delta for a target skewness.
double skew_normal_delta(double skew) {
  if (skew == 0.0) return 0.0;
  const double pi = std::numbers::pi;
  double r = std::cbrt(2.0 * std::fabs(skew) / (4.0 - pi));
  double mu = r / std::sqrt(1.0 + r * r);  // mean of the standardised variate
  double delta = mu * std::sqrt(pi / 2.0);
  return std::copysign(delta, skew);
}

}  // namespace

std::vector<Essay> synth_imbalanced(const SynthSpec& spec) {
  spec.validate();
  const PromptSpec prompt = asap_prompt(spec.prompt_id);
  const double pi = std::numbers::pi;
  const double delta = skew_normal_delta(spec.skew);
  const double z_mean = delta * std::sqrt(2.0 / pi);
  const double z_std = std::sqrt(1.0 - z_mean * z_mean);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(spec.min_len, spec.max_len);
  std::uniform_int_distribution<std::size_t> filler(0, spec.filler_words - 1);
  std::uniform_int_distribution<std::size_t> marker(0, spec.marker_words - 1);

  // Lexicon slots: [0, filler) filler, then weak markers, then strong markers.
  const std::size_t weak_base = spec.filler_words;
  const std::size_t strong_base = weak_base + spec.marker_words;

  std::vector<Essay> essays;
  essays.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double u0 = normal(rng);
    double u1 = normal(rng);
    double z = delta * std::fabs(u0) + std::sqrt(1.0 - delta * delta) * u1;
    double latent = std::clamp(spec.mean + spec.std * (z - z_mean) / z_std, 0.0, 1.0);

    Essay e;
    e.essay_id = static_cast<long long>(i + 1);
    e.prompt_id = prompt.prompt_id;
    e.score = prompt.denormalize(latent);
    e.normalized = prompt.normalize(e.score);

    std::size_t len = length(rng);
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t slot;
      if (unit(rng) < spec.marker_rate) {
        slot = (unit(rng) < latent ? strong_base : weak_base) + marker(rng);
      } else {
        slot = filler(rng);
      }
      if (t > 0) e.text.push_back(' ');
      e.text += synth_word(slot);
    }
    essays.push_back(std::move(e));
  }
  return essays;
}

}  // namespace dynloss::data
