#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "uavsplit/simulator.hpp"

namespace uavsplit {

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  /// Overrides the per-slot tolerance of the water-filling oracle check (0 keeps 1e-9).
  double tolerance = 0.0;
  /// "" or "water-level": perturbs the optimizer to show the checks bite.
  std::string mutation;
  int instances = 0;           ///< 0 keeps each check's default count
  int episodes = 5;            ///< per policy, for trace invariants
  int horizon_slots = 300;
  const QNetwork* net = nullptr;  ///< OPETRL agent for trace checks; random init when null
  SimConfig base;
};

struct CheckResult {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Check {
  std::string name;
  std::string what;
  std::function<CheckResult(const VerifyOptions&)> run;
};

/// The single registry behind `verify` and the acceptance suite.
const std::vector<Check>& verify_checks();
const Check& find_check(const std::string& name);

/// Runs the checks whose names contain `filter` (all when empty), prints
/// one line per check and returns the number of failures.
int run_verify(const VerifyOptions& opts, std::ostream& os, const std::string& filter = "");

/// Battery bounds and conservation, causality, power cap and delivery
/// accounting on one trace. Returns human-readable violations.
std::vector<std::string> trace_violations(const SimConfig& cfg, const EpisodeTrace& trace);

}  // namespace uavsplit
