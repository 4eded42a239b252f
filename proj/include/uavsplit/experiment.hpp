#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uavsplit/simulator.hpp"

namespace uavsplit {

struct SweepOptions {
  std::string var;                  ///< any config key, e.g. raw_bits_S or p_max
  std::vector<std::string> values;  ///< in file syntax
  std::vector<Policy> policies;
  /// Shared OPETRL agent for every point. Ignored when train_per_point is set.
  const QNetwork* checkpoint = nullptr;
  /// Train a fresh agent at each point (seeded from the point index).
  bool train_per_point = false;
  int threads = 1;  ///< sweep points evaluated concurrently
};

/// Rows ordered by value, then by policy as listed. Every point evaluates
/// the same episode seeds. Throws std::invalid_argument when OPETRL is
/// requested with neither a checkpoint nor per-point training.
std::vector<Summary> run_sweep(const SimConfig& base, const SweepOptions& opts);

/// "all" or a comma list of policy names.
std::vector<Policy> parse_policy_list(const std::string& text);

std::vector<std::string> split_csv_list(const std::string& text);

}  // namespace uavsplit
