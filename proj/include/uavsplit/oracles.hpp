#pragma once

// Reference solvers used by `verify` and the test suites. None of them call
// into the optimizer they are checking.

#include <functional>
#include <span>
#include <vector>

namespace uavsplit::oracle {

struct Link {
  double slot_s = 0.1;
  double bandwidth_hz = 2e6;
  double p_max_w = 1.0;
};

/// Water level found by bisection so that the delivered bits equal the
/// payload, powers clamp(nu - 1/h, 0, p_max). All-p_max when infeasible.
std::vector<double> bisection_powers(double bits, std::span<const double> gains, const Link& link,
                                     double* water_level = nullptr);

/// Minimum transmit energy (J) by projected Newton/gradient iterations in
/// per-slot rate variables, box [0, log(1 + h p_max)] and a sum constraint.
/// Returns +inf when the payload is out of reach.
double projected_gradient_energy(double bits, std::span<const double> gains, const Link& link);

/// tau * sum W log2(1 + p h).
double delivered_bits(std::span<const double> power, std::span<const double> gains, const Link& link);

struct SplitTask {
  double bits = 0.0;
  int ready = 0;
  int deadline = 0;
};

struct SplitResult {
  std::vector<int> ends;  ///< window end slot per task, empty if none feasible
  int infeasible_windows = 0;
  double energy_j = 0.0;
};

/// Exhaustive enumeration of window boundaries over the horizon starting at
/// `now`; windows start at max(previous end, ready) and the last ends on its
/// deadline. `gains[t - now]` is the gain of slot t. Ordered by infeasible
/// window count, then energy.
SplitResult brute_force_split(std::span<const SplitTask> tasks, std::span<const double> gains,
                              int now, const Link& link);

/// Energy of a given split, using bisection powers.
SplitResult split_energy(std::span<const SplitTask> tasks, std::span<const double> gains, int now,
                         const Link& link, const std::vector<int>& ends);

/// Central differences of f at x with step h.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double h);

}  // namespace uavsplit::oracle
