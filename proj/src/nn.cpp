// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/nn.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace dynloss::nn {

void ModelConfig::validate() const {
  if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 || max_seq_len == 0) {
    throw std::invalid_argument(fmt::format(
        "model config: dimensions must be >= 1 (vocab_size={}, embed_dim={}, hidden_dim={}, "
        "max_seq_len={})",
        vocab_size, embed_dim, hidden_dim, max_seq_len));
  }
}

void ModelParams::set_requires_grad(bool on) {
  for_each([on](std::string_view, ad::Tensor& t) { t.set_requires_grad(on); });
}

void ModelParams::zero_grad() {
  for_each([](std::string_view, ad::Tensor& t) { t.zero_grad(); });
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&ok](std::string_view, const ad::Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  std::vector<const ad::Tensor*> lhs;
  std::vector<const ad::Tensor*> rhs;
  a.for_each([&](std::string_view, const ad::Tensor& t) { lhs.push_back(&t); });
  b.for_each([&](std::string_view, const ad::Tensor& t) { rhs.push_back(&t); });
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (!(*lhs[i] == *rhs[i])) return false;
  }
  const auto& ca = a.config;
  const auto& cb = b.config;
  return ca.vocab_size == cb.vocab_size && ca.embed_dim == cb.embed_dim &&
         ca.hidden_dim == cb.hidden_dim && ca.max_seq_len == cb.max_seq_len && ca.seed == cb.seed;
}

std::vector<std::pair<std::string, ad::Shape>> expected_shapes(const ModelConfig& cfg) {
  const auto e = cfg.embed_dim;
  const auto h = cfg.hidden_dim;
  return {
      {"embedding", {cfg.vocab_size, e}},
      {"lstm.w_input", {e + h, h}},
      {"lstm.w_forget", {e + h, h}},
      {"lstm.w_output", {e + h, h}},
      {"lstm.w_candidate", {e + h, h}},
      {"lstm.b_input", {1, h}},
      {"lstm.b_forget", {1, h}},
      {"lstm.b_output", {1, h}},
      {"lstm.b_candidate", {1, h}},
      {"attention.score", {h}},
      {"head.weight", {h}},
      {"head.bias", {1}},
  };
}

void uniform_fill(ad::Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
  if (fan_in == 0) throw std::invalid_argument("uniform_fill: fan_in must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
}

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.config = cfg;
  const auto e = cfg.embed_dim;
  const auto h = cfg.hidden_dim;
  std::mt19937_64 rng(cfg.seed);

  p.embedding = ad::Tensor::zeros({cfg.vocab_size, e});
  uniform_fill(p.embedding, e, rng);
  for (auto* w : {&p.w_input, &p.w_forget, &p.w_output, &p.w_candidate}) {
    *w = ad::Tensor::zeros({e + h, h});
    uniform_fill(*w, e + h, rng);
  }
  p.b_input = ad::Tensor::zeros({1, h});
  p.b_forget = ad::Tensor::filled({1, h}, 1.0);
  p.b_output = ad::Tensor::zeros({1, h});
  p.b_candidate = ad::Tensor::zeros({1, h});
  p.attention = ad::Tensor::zeros({h});
  uniform_fill(p.attention, h, rng);
  p.head_weight = ad::Tensor::zeros({h});
  uniform_fill(p.head_weight, h, rng);
  p.head_bias = ad::Tensor::zeros({1});
  return p;
}

namespace {

template <typename Bind>
BoundParams bind_with(const ModelConfig& cfg, Bind&& bind) {
  BoundParams b;
  b.vocab_size = cfg.vocab_size;
  b.hidden_dim = cfg.hidden_dim;
  b.max_seq_len = cfg.max_seq_len;
  b.embedding = bind("embedding");
  b.w_input = bind("lstm.w_input");
  b.w_forget = bind("lstm.w_forget");
  b.w_output = bind("lstm.w_output");
  b.w_candidate = bind("lstm.w_candidate");
  b.b_input = bind("lstm.b_input");
  b.b_forget = bind("lstm.b_forget");
  b.b_output = bind("lstm.b_output");
  b.b_candidate = bind("lstm.b_candidate");
  b.attention = bind("attention.score");
  b.head_weight = bind("head.weight");
  b.head_bias = bind("head.bias");
  return b;
}

template <typename Params>
auto& find_tensor(Params& params, std::string_view name) {
  decltype(&params.embedding) found = nullptr;
  params.for_each([&](std::string_view n, auto& t) {
    if (n == name) found = &t;
  });
  return *found;
}

}  // namespace

BoundParams bind_trainable(ad::Graph& g, ModelParams& params) {
  return bind_with(params.config, [&](std::string_view name) {
    return g.parameter(find_tensor(params, name));
  });
}

BoundParams bind_frozen(ad::Graph& g, const ModelParams& params) {
  return bind_with(params.config, [&](std::string_view name) {
    return g.reference(find_tensor(params, name));
  });
}

std::span<const TokenId> strip_padding(std::span<const TokenId> ids) {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == kPadId) --n;
  return ids.first(n);
}

std::vector<ad::Var> lstm_encode(const BoundParams& p, std::span<const TokenId> ids) {
  ids = strip_padding(ids);
  if (ids.empty()) throw std::invalid_argument("lstm_encode: empty token sequence");
  if (ids.size() > p.max_seq_len) {
    throw std::invalid_argument(fmt::format("lstm_encode: sequence length {} exceeds max_seq_len {}",
                                            ids.size(), p.max_seq_len));
  }
  for (auto id : ids) {
    if (id >= p.vocab_size) {
      throw std::out_of_range(
          fmt::format("lstm_encode: token id {} outside vocabulary of {}", id, p.vocab_size));
    }
  }

  ad::Graph& g = *p.embedding.graph;
  ad::Var h = g.constant(ad::Tensor::zeros({1, p.hidden_dim}));
  ad::Var c = h;
  std::vector<ad::Var> hiddens;
  hiddens.reserve(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    std::size_t id = ids[t];
    ad::Var x = ad::gather(p.embedding, std::span<const std::size_t>(&id, 1));
    ad::Var xh[] = {x, h};
    ad::Var z = ad::concat(xh);
    ad::Var in_gate = ad::sigmoid(ad::matmul(z, p.w_input) + p.b_input);
    ad::Var forget_gate = ad::sigmoid(ad::matmul(z, p.w_forget) + p.b_forget);
    ad::Var out_gate = ad::sigmoid(ad::matmul(z, p.w_output) + p.b_output);
    ad::Var candidate = ad::tanh(ad::matmul(z, p.w_candidate) + p.b_candidate);
    c = forget_gate * c + in_gate * candidate;
    h = out_gate * ad::tanh(c);
    hiddens.push_back(h);
  }
  return hiddens;
}

AttentionResult attention_pool(ad::Var score_vector, std::span<const ad::Var> hiddens) {
  if (hiddens.empty()) throw std::invalid_argument("attention_pool: empty hidden sequence");
  std::vector<ad::Var> scores;
  scores.reserve(hiddens.size());
  for (auto h : hiddens) scores.push_back(ad::matmul(h, score_vector));
  ad::Var weights = ad::softmax(ad::concat(scores));

  ad::Var context;
  for (std::size_t t = 0; t < hiddens.size(); ++t) {
    ad::Var w_t = ad::gather(weights, std::span<const std::size_t>(&t, 1));
    ad::Var term = w_t * hiddens[t];
    context = t == 0 ? term : context + term;
  }
  return {context, weights};
}

ad::Var predict(const BoundParams& p, std::span<const TokenId> ids) {
  auto hiddens = lstm_encode(p, ids);
  auto pooled = attention_pool(p.attention, hiddens);
  return ad::sigmoid(ad::matmul(pooled.context, p.head_weight) + p.head_bias);
}

double predict(const ModelParams& params, std::span<const TokenId> ids) {
  ad::Graph g;
  auto bound = bind_frozen(g, params);
  return predict(bound, ids).value().item();
}

}  // namespace dynloss::nn
