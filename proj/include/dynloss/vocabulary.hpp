// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dynloss/token.hpp"

namespace dynloss::data {

/// Prefix marking a word part that continues a word rather than starting one.
inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::size_t kReservedTokens = 2;

/// Token <-> id map. Ids are dense in [0, size()); [PAD] is 0 and [UNK] is 1.
class Vocabulary {
 public:
  /// Reserved tokens only.
  Vocabulary();

  /// Builds from an ordered token list; the first two entries must be the
  /// reserved tokens. Throws on duplicates.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Appends a token if absent; returns its id.
  TokenId add(std::string token);

  /// One token per line, in id order.
  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Lowercases ASCII and splits on whitespace; each ASCII punctuation character
/// becomes its own word.
std::vector<std::string> split_words(std::string_view text);

/// Whole words with count >= min_freq enter first (by count, then
/// lexicographically). Remaining budget goes to character n-grams of length
/// 2..6 with count >= min_freq: word-initial ones as plain entries, the rest
/// with the continuation prefix. Deterministic in the corpus.
///
/// Throws if max_size < kReservedTokens or the corpus is empty.
Vocabulary build_vocab(const std::vector<std::string>& corpus, std::size_t max_size,
                       std::size_t min_freq);

/// Word split, then greedy longest-match over word parts for words not in the
/// vocabulary. A run of characters no part covers yields one [UNK]. Never
/// returns an empty sequence for text containing a word.
std::vector<TokenId> encode(const Vocabulary& vocab, std::string_view text);

}  // namespace dynloss::data
