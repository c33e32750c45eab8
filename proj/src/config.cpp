// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#include "dynloss/config.hpp"

#include <fstream>
#include <istream>

#include <fmt/format.h>

namespace dynloss::config {

namespace {

std::string trim(std::string_view s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("config line {}: expected key=value, got '{}'", line_no, body));
    }
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(fmt::format("config line {}: empty key", line_no));
    if (!kv.emplace(key, value).second) {
      throw ConfigError(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    }
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  return parse_key_values(in);
}

std::vector<std::string> merge_config_args(const KeyValues& config,
                                           const std::vector<std::string>& cli_args) {
  auto on_command_line = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (const auto& a : cli_args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };
  std::vector<std::string> merged;
  for (const auto& [key, value] : config) {
    if (on_command_line(key)) continue;
    merged.push_back("--" + key);
    merged.push_back(value);
  }
  merged.insert(merged.end(), cli_args.begin(), cli_args.end());
  return merged;
}

}  // namespace dynloss::config
