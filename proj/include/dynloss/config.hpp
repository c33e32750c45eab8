// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynloss::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string>;

/// Flat `key=value` lines; blank lines and lines starting with '#' are
/// ignored, whitespace around key and value is trimmed. Duplicate keys and
/// lines without '=' are errors.
KeyValues parse_key_values(std::istream& in);
KeyValues read_config_file(const std::filesystem::path& path);

/// Turns config entries into `--key value` arguments placed ahead of the
/// command-line ones, skipping any key the command line already sets, so
/// explicit flags win.
std::vector<std::string> merge_config_args(const KeyValues& config,
                                           const std::vector<std::string>& cli_args);

}  // namespace dynloss::config
