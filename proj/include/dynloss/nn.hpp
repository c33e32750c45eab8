// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "dynloss/autodiff.hpp"
#include "dynloss/token.hpp"

namespace dynloss::nn {

struct ModelConfig {
  std::size_t vocab_size = 1;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 16;
  std::size_t max_seq_len = 512;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when any dimension is zero.
  void validate() const;
};

/// Learnable tensors of the essay scorer: embedding -> LSTM -> attention
/// pooling -> one-unit regression head.
///
/// Gate weights are stored input-major, (embed_dim + hidden_dim) x hidden_dim,
/// so a step is `concat(x, h) * W + b` on row vectors.
struct ModelParams {
  ModelConfig config;

  ad::Tensor embedding;  // vocab_size x embed_dim

  ad::Tensor w_input;
  ad::Tensor w_forget;
  ad::Tensor w_output;
  ad::Tensor w_candidate;
  ad::Tensor b_input;  // 1 x hidden_dim each
  ad::Tensor b_forget;
  ad::Tensor b_output;
  ad::Tensor b_candidate;

  ad::Tensor attention;    // hidden_dim
  ad::Tensor head_weight;  // hidden_dim
  ad::Tensor head_bias;    // 1

  /// Visits every tensor in a fixed order with its checkpoint name.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  void set_requires_grad(bool on);
  void zero_grad();
  bool all_finite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(std::string_view("embedding"), self.embedding);
    f(std::string_view("lstm.w_input"), self.w_input);
    f(std::string_view("lstm.w_forget"), self.w_forget);
    f(std::string_view("lstm.w_output"), self.w_output);
    f(std::string_view("lstm.w_candidate"), self.w_candidate);
    f(std::string_view("lstm.b_input"), self.b_input);
    f(std::string_view("lstm.b_forget"), self.b_forget);
    f(std::string_view("lstm.b_output"), self.b_output);
    f(std::string_view("lstm.b_candidate"), self.b_candidate);
    f(std::string_view("attention.score"), self.attention);
    f(std::string_view("head.weight"), self.head_weight);
    f(std::string_view("head.bias"), self.head_bias);
  }
};

/// Shapes every tensor of a model with the given config must have.
std::vector<std::pair<std::string, ad::Shape>> expected_shapes(const ModelConfig& cfg);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void uniform_fill(ad::Tensor& t, std::size_t fan_in, std::mt19937_64& rng);

/// Weights uniform with bound 1/sqrt(fan_in), biases zero, forget-gate bias
/// 1.0. Deterministic in cfg.seed.
ModelParams init_params(const ModelConfig& cfg);

/// Graph handles for every model tensor.
struct BoundParams {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 0;
  std::size_t max_seq_len = 0;
  ad::Var embedding;
  ad::Var w_input, w_forget, w_output, w_candidate;
  ad::Var b_input, b_forget, b_output, b_candidate;
  ad::Var attention;
  ad::Var head_weight;
  ad::Var head_bias;
};

/// Binds as graph parameters; gradients flow back into `params`.
BoundParams bind_trainable(ad::Graph& g, ModelParams& params);
/// Binds read-only; safe to use concurrently from several graphs.
BoundParams bind_frozen(ad::Graph& g, const ModelParams& params);

/// Drops trailing padding ids.
std::span<const TokenId> strip_padding(std::span<const TokenId> ids);

/// One hidden state (1 x hidden_dim) per token. h and c start at zero.
/// Throws on an empty sequence, a sequence longer than max_seq_len, or an id
/// outside the vocabulary. Trailing padding is ignored.
std::vector<ad::Var> lstm_encode(const BoundParams& p, std::span<const TokenId> ids);

struct AttentionResult {
  ad::Var context;  // 1 x hidden_dim
  ad::Var weights;  // sequence length
};

/// score_t = hidden_t . score_vector; context = sum_t softmax(score)_t hidden_t.
AttentionResult attention_pool(ad::Var score_vector, std::span<const ad::Var> hiddens);

/// sigmoid(head_weight . context + head_bias), shape {1}.
ad::Var predict(const BoundParams& p, std::span<const TokenId> ids);

/// Forward-only convenience.
double predict(const ModelParams& params, std::span<const TokenId> ids);

}  // namespace dynloss::nn
