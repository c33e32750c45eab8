// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

namespace dynloss::data {

double PromptSpec::normalize(int score) const {
  return static_cast<double>(score - min_score) / static_cast<double>(max_score - min_score);
}

int PromptSpec::denormalize(double normalized) const {
  return min_score + static_cast<int>(std::lround(normalized * (max_score - min_score)));
}

PromptSpec asap_prompt(int prompt_id) {
  static constexpr int kRanges[8][2] = {{2, 12}, {1, 6}, {0, 3}, {0, 3},
                                        {0, 4},  {0, 4}, {0, 30}, {0, 60}};
  if (prompt_id < 1 || prompt_id > 8) {
    throw std::out_of_range(fmt::format("ASAP prompt id {} outside 1..8", prompt_id));
  }
  const auto& r = kRanges[prompt_id - 1];
  return {prompt_id, r[0], r[1]};
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

AsapLoad load_asap_tsv(std::istream& in, const PromptSpec& prompt) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("ASAP file is empty (header row missing)");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_tabs(line);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DataError(fmt::format("ASAP file is missing column '{}'", name));
  };
  const auto col_id = column("essay_id");
  const auto col_set = column("essay_set");
  const auto col_text = column("essay");
  const auto col_score = column("domain1_score");
  const auto needed = std::max({col_id, col_set, col_text, col_score}) + 1;

  AsapLoad result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    auto reject = [&](std::string msg) { result.rejected.push_back({line_no, std::move(msg)}); };
    if (fields.size() < needed) {
      reject(fmt::format("expected at least {} fields, found {}", needed, fields.size()));
      continue;
    }
    int set = 0;
    if (!parse_int(fields[col_set], set)) {
      reject(fmt::format("essay_set '{}' is not an integer", fields[col_set]));
      continue;
    }
    if (set != prompt.prompt_id) continue;

    Essay e;
    e.prompt_id = set;
    if (!parse_int(fields[col_id], e.essay_id)) {
      reject(fmt::format("essay_id '{}' is not an integer", fields[col_id]));
      continue;
    }
    if (!parse_int(fields[col_score], e.score)) {
      reject(fmt::format("domain1_score '{}' is not an integer", fields[col_score]));
      continue;
    }
    if (!prompt.contains(e.score)) {
      reject(fmt::format("score {} outside prompt {} range [{}, {}]", e.score, prompt.prompt_id,
                         prompt.min_score, prompt.max_score));
      continue;
    }
    e.text = std::string(fields[col_text]);
    e.normalized = prompt.normalize(e.score);
    result.essays.push_back(std::move(e));
  }
  return result;
}

AsapLoad load_asap_tsv(const std::filesystem::path& path, const PromptSpec& prompt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  return load_asap_tsv(in, prompt);
}

void write_asap_tsv(std::ostream& out, std::span<const Essay> essays) {
  out << "essay_id\tessay_set\tessay\tdomain1_score\n";
  for (const auto& e : essays) {
    std::string text = e.text;
    for (auto& ch : text) {
      if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    }
    out << e.essay_id << '\t' << e.prompt_id << '\t' << text << '\t' << e.score << '\n';
  }
}

std::vector<Sample> make_samples(std::span<const Essay> essays, const Vocabulary& vocab,
                                 std::size_t max_len) {
  if (max_len == 0) throw std::invalid_argument("make_samples: max_len must be positive");
  std::vector<Sample> samples;
  samples.reserve(essays.size());
  for (const auto& e : essays) {
    Sample s;
    s.tokens = encode(vocab, e.text);
    if (s.tokens.size() > max_len) s.tokens.resize(max_len);
    if (s.tokens.empty()) s.tokens.push_back(kUnkId);
    s.target = e.normalized;
    s.score = e.score;
    s.prompt_id = e.prompt_id;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size,
                                              std::uint64_t seed, std::uint64_t epoch,
                                              bool drop_undersized) {
  if (batch_size < 2) {
    throw std::invalid_argument(
        fmt::format("batch size {} < 2 leaves the batch standard deviation undefined", batch_size));
  }
  if (n < 2) throw std::invalid_argument("batches: need at least 2 samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed + epoch);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    auto end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.back().size() == 1) {
    auto last = out.back();
    out.pop_back();
    if (!drop_undersized) out.back().push_back(last.front());
  }
  return out;
}

}  // namespace dynloss::data
