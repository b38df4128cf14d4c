#pragma once

#include "modeclust/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modeclust::cli {

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  std::optional<int> threads;
  bool emit_plots = false;
  std::vector<std::string> overrides;  // key=value
};

/// Config file (if any) with --set overrides and --seed/--threads applied.
KeyValueConfig load_config(const CommonOptions& opts, const std::string& experiment);

int run_cluster(const CommonOptions& opts);
int run_risk(const CommonOptions& opts);
int run_sweep_command(const CommonOptions& opts);
int run_check(const CommonOptions& opts);
int run_repro(const CommonOptions& opts, const std::string& name);

}  // namespace modeclust::cli
