// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace dynloss::data {

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kReservedTokens || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw std::invalid_argument("vocabulary must start with [PAD] and [UNK]");
  }
  Vocabulary v;
  for (std::size_t i = kReservedTokens; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) {
      throw std::invalid_argument(fmt::format("duplicate vocabulary token '{}'", tokens[i]));
    }
    v.add(std::move(tokens[i]));
  }
  return v;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::add(std::string token) {
  if (auto id = find(token)) return *id;
  auto id = static_cast<TokenId>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write vocabulary to {}", path.string()));
  save(out);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot read vocabulary {}", path.string()));
  return load(in);
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  flush();
  return words;
}

namespace {

using Counts = std::map<std::string, std::size_t>;

std::vector<std::string> ranked(const Counts& counts, std::size_t min_freq) {
  std::vector<std::pair<std::string, std::size_t>> items;
  for (const auto& [k, c] : counts) {
    if (c >= min_freq) items.emplace_back(k, c);
  }
  // map iteration is already lexicographic; stable sort keeps that as the tie-break.
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [k, c] : items) out.push_back(std::move(k));
  return out;
}

}  // namespace

Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                       std::size_t min_freq) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  if (max_size < kReservedTokens) {
    throw std::invalid_argument(fmt::format(
        "build_vocab: max_size {} smaller than the {} reserved tokens", max_size, kReservedTokens));
  }

  Counts words;
  for (const auto& doc : corpus) {
    for (auto& w : split_words(doc)) ++words[w];
  }

  Vocabulary vocab;
  for (auto& w : ranked(words, min_freq)) {
    if (vocab.size() >= max_size) return vocab;
    vocab.add(std::move(w));
  }

  Counts parts;
  for (const auto& [w, count] : words) {
    for (std::size_t start = 0; start < w.size(); ++start) {
      for (std::size_t len = 2; len <= 6 && start + len <= w.size(); ++len) {
        if (start == 0 && len == w.size()) continue;  // the word itself
        auto piece = w.substr(start, len);
        if (start == 0) {
          parts[piece] += count;
        } else {
          parts[std::string(kContinuationPrefix) + piece] += count;
        }
      }
    }
  }
  for (auto& piece : ranked(parts, min_freq)) {
    if (vocab.size() >= max_size) break;
    vocab.add(std::move(piece));
  }
  return vocab;
}

namespace {

// Longest vocabulary piece starting at `pos`; continuation-marked entries are
// preferred after the first character, plain entries are accepted anywhere.
std::optional<std::pair<TokenId, std::size_t>> longest_piece(const Vocabulary& vocab,
                                                             std::string_view word,
                                                             std::size_t pos) {
  std::string marked;
  for (std::size_t len = word.size() - pos; len > 0; --len) {
    auto piece = word.substr(pos, len);
    if (pos > 0) {
      marked.assign(kContinuationPrefix);
      marked.append(piece);
      if (auto id = vocab.find(marked)) return std::make_pair(*id, len);
    }
    if (auto id = vocab.find(piece)) return std::make_pair(*id, len);
  }
  return std::nullopt;
}

}  // namespace

std::vector<TokenId> encode(const Vocabulary& vocab, std::string_view text) {
  std::vector<TokenId> ids;
  for (const auto& word : split_words(text)) {
    if (auto id = vocab.find(word)) {
      ids.push_back(*id);
      continue;
    }
    std::size_t pos = 0;
    bool in_unknown_run = false;
    while (pos < word.size()) {
      if (auto hit = longest_piece(vocab, word, pos)) {
        ids.push_back(hit->first);
        pos += hit->second;
        in_unknown_run = false;
      } else {
        if (!in_unknown_run) ids.push_back(kUnkId);
        in_unknown_run = true;
        ++pos;
      }
    }
  }
  return ids;
}

}  // namespace dynloss::data
