// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace dynloss::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'Y', 'N', 'L', 'O', 'S', 'S', '\0'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError("checkpoint truncated");
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto& cfg = params.config;
  put<std::uint64_t>(out, cfg.vocab_size);
  put<std::uint64_t>(out, cfg.embed_dim);
  put<std::uint64_t>(out, cfg.hidden_dim);
  put<std::uint64_t>(out, cfg.max_seq_len);
  put<std::uint64_t>(out, cfg.seed);

  std::uint32_t count = 0;
  params.for_each([&](std::string_view, const ad::Tensor&) { ++count; });
  put<std::uint32_t>(out, count);
  params.for_each([&](std::string_view name, const ad::Tensor& t) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  });
  if (!out) throw CheckpointError("failed writing checkpoint");
}

ModelParams read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError("not a dynloss checkpoint (bad magic)");
  }
  auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError(fmt::format("unsupported checkpoint version {}", version));
  }
  ModelParams params;
  auto& cfg = params.config;
  cfg.vocab_size = get<std::uint64_t>(in);
  cfg.embed_dim = get<std::uint64_t>(in);
  cfg.hidden_dim = get<std::uint64_t>(in);
  cfg.max_seq_len = get<std::uint64_t>(in);
  cfg.seed = get<std::uint64_t>(in);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }

  auto expected = expected_shapes(cfg);
  auto count = get<std::uint32_t>(in);
  if (count != expected.size()) {
    throw CheckpointError(
        fmt::format("checkpoint has {} tensors, expected {}", count, expected.size()));
  }
  std::size_t k = 0;
  params.for_each([&](std::string_view name, ad::Tensor& t) {
    auto len = get<std::uint32_t>(in);
    std::string stored(len, '\0');
    if (!in.read(stored.data(), len)) throw CheckpointError("checkpoint truncated");
    if (stored != name) {
      throw CheckpointError(fmt::format("tensor {} is named '{}', expected '{}'", k, stored, name));
    }
    auto rank = get<std::uint32_t>(in);
    ad::Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in);
    if (shape != expected[k].second) {
      throw CheckpointError(fmt::format("tensor '{}' has shape {}, expected {}", name,
                                        ad::shape_str(shape), ad::shape_str(expected[k].second)));
    }
    std::vector<double> values(ad::shape_numel(shape));
    if (!in.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint truncated");
    }
    t = ad::Tensor(std::move(shape), std::move(values));
    ++k;
  });
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(fmt::format("cannot open {} for writing", path.string()));
  write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(fmt::format("cannot open {}", path.string()));
  return read_checkpoint(in);
}

}  // namespace dynloss::nn
