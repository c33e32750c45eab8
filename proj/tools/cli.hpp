// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dynloss::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kDiverged = 3,
};

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"emit-schedule", "--a", "1"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynloss::cli
