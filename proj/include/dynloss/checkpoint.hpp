// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "dynloss/nn.hpp"

namespace dynloss::nn {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout (little-endian):
//   "DYNLOSS\0"  u32 version
//   u64 vocab_size, embed_dim, hidden_dim, max_seq_len, seed
//   u32 tensor_count
//   per tensor: u32 name_len, name, u32 rank, u64 dims[rank], f64 values[]
// Values are stored as raw IEEE-754 bits, so save -> load is bit-exact.

void write_checkpoint(std::ostream& out, const ModelParams& params);
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dynloss::nn
