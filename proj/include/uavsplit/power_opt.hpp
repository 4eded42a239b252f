#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "uavsplit/system_model.hpp"

namespace uavsplit {

/// The slice of SystemParams the power optimizer needs.
struct LinkParams {
  double slot_s = 0.1;
  double bandwidth_hz = 2e6;
  double p_max_w = 1.0;

  static LinkParams from(const SystemParams& p) { return {p.slot_s, p.bandwidth_hz, p.p_max_w}; }

  /// Payload expressed in nats of per-slot spectral efficiency: D ln2 / (tau W).
  double payload_nats(double bits) const;
  double slot_bits(double power_w, double gain_h) const;
};

/// Effective gains h_t (1/W) for consecutive slots starting at `start_slot`.
struct ChannelTrace {
  int start_slot = 0;
  std::vector<double> gains;

  int end_slot() const { return start_slot + static_cast<int>(gains.size()); }
  bool covers(int first, int last_exclusive) const {
    return first >= start_slot && last_exclusive <= end_slot();
  }
  double at(int slot) const { return gains.at(static_cast<std::size_t>(slot - start_slot)); }
  std::span<const double> window(int first, int len) const;
};

/// Per-slot transmit powers starting at `start_slot`.
struct PowerSchedule {
  int start_slot = 0;
  std::vector<double> power;
  bool infeasible = false;

  int end_slot() const { return start_slot + static_cast<int>(power.size()); }
  /// Zero outside the schedule.
  double at(int slot) const;
};

/// Result of the single-task water-filling problem over one window.
struct SingleTaskPower {
  std::vector<double> power;
  double water_level = 0.0;  ///< nu in watts: p_t = clamp(nu - 1/h_t, 0, p_max)
  bool clipped = false;      ///< some slot sits at 0 or p_max
  bool infeasible = false;   ///< p_max on every slot still cannot deliver the payload
};

/// Minimum-energy powers delivering `payload_bits` over the slots in `gains`
/// under 0 <= p_t <= p_max (capped water-filling). Throws std::domain_error
/// for an empty window or a non-positive payload.
SingleTaskPower optimal_power_single_task(double payload_bits, std::span<const double> gains,
                                          const LinkParams& link);

/// tau * sum_t p_t.
double schedule_energy(std::span<const double> power, double slot_s);
inline double schedule_energy(const PowerSchedule& s, double slot_s) {
  return schedule_energy(s.power, slot_s);
}

/// One entry of the transmission queue, as seen by the planner.
struct QueuedTask {
  int id = 0;
  double bits = 0.0;      ///< residual bits still to deliver
  int ready_slot = 0;     ///< first slot its data exists (arrival + compute queue + compute)
  int deadline_slot = 0;  ///< exclusive
};

struct Window {
  int task_id = 0;
  int start = 0;
  int len = 0;

  int end() const { return start + len; }
};

struct TimeAllocation {
  std::vector<Window> windows;  ///< FIFO order, one per task
  bool feasible = true;
  int iterations = 0;
};

enum class AllocationRule {
  kExact,             ///< dynamic programme over window boundaries (global optimum)
  kPairwiseResidual,  ///< one-slot exchanges driven by the time-ratio residual
};

struct AllocationOptions {
  AllocationRule rule = AllocationRule::kExact;
  int loop_cap = 0;  ///< pairwise loop bound; 0 selects 10x the horizon length
};

/// Both sides of the optimal time-ratio condition for tasks m and n:
/// lhs = L_n / L_m, rhs = ratio of the exponential terms.
struct TimeRatio {
  double lhs = 0.0;
  double rhs = 0.0;
};

TimeRatio time_ratio_residual(const QueuedTask& m, const Window& wm, const QueuedTask& n,
                            const Window& wn, const ChannelTrace& trace, const LinkParams& link);

/// Earliest-slot feasibility check: can every task get at least one slot?
bool queue_feasible(std::span<const QueuedTask> tasks, int now);

/// Allowed-transmission-time allocation for the queue on one channel trace.
/// Tasks must be in FIFO order with non-decreasing ready and deadline slots.
/// An infeasible queue comes back with `feasible == false` and no windows.
TimeAllocation allocate_times(std::span<const QueuedTask> tasks, const ChannelTrace& trace,
                              int now, const LinkParams& link,
                              const AllocationOptions& opts = {});

/// Default starting point: the first task extends to its deadline, later
/// tasks fill the gap to theirs. Windows are widened to one slot where needed.
TimeAllocation initial_allocation(std::span<const QueuedTask> tasks, int now);

/// Checks start >= ready, end <= deadline, len >= 1, FIFO order and that the
/// last window ends on its task's deadline.
bool allocation_valid(std::span<const QueuedTask> tasks, const TimeAllocation& alloc, int now);

struct AllocationCost {
  int infeasible_windows = 0;
  double energy_j = 0.0;

  bool operator<(const AllocationCost& o) const {
    return infeasible_windows != o.infeasible_windows ? infeasible_windows < o.infeasible_windows
                                                      : energy_j < o.energy_j;
  }
};

AllocationCost allocation_cost(std::span<const QueuedTask> tasks, const TimeAllocation& alloc,
                               const ChannelTrace& trace, const LinkParams& link);

enum class SaaBound {
  kPrinted,    ///< (N-1 + L * sqrt(2(N-1)L + L^2)) / eps
  kCorrected,  ///< (N-1 + L + sqrt(2(N-1)L + L^2)) / eps
};

/// Sample count K* for the sampled chance constraint, L = ln(1/theta).
int saa_sample_count(double epsilon, double theta, int n_vars, SaaBound bound = SaaBound::kPrinted);

struct Subproblem {
  TimeAllocation allocation;
  PowerSchedule schedule;  ///< covers [now, last deadline)
  bool feasible = true;    ///< every window delivered its payload
};

/// One sampled subproblem: allocate windows on `trace`, then water-fill each.
Subproblem solve_subproblem(const ChannelTrace& trace, std::span<const QueuedTask> tasks, int now,
                            const LinkParams& link, const AllocationOptions& opts = {});

/// Per-slot mean of the copies, clamped to [0, p_max]. Throws
/// std::domain_error when the copies do not share a horizon.
PowerSchedule restore_power(std::span<const PowerSchedule> copies, double p_max_w);

struct SaaConfig {
  double epsilon = 0.1;
  double theta = 0.05;
  int n_vars = 0;     ///< 0: number of per-slot power variables in the horizon
  int k_samples = 32; ///< 0: size automatically with saa_sample_count
  SaaBound bound = SaaBound::kPrinted;
  bool feasibility_repair = true;
  int threads = 1;
  AllocationOptions allocation;
};

struct P1bResult {
  PowerSchedule schedule;
  std::vector<double> expected_bits;  ///< mean over retained samples, per slot
  int samples = 0;
  int infeasible_samples = 0;
  int satisfied_samples = 0;          ///< retained samples meeting every deadline under `schedule`
  bool chance_infeasible = false;
  double lift = 1.0;                  ///< power scale applied by the feasibility repair
};

/// Sample trace k of a solve seeded with `seed`: gains for [start, start+len).
ChannelTrace sample_trace(const ChannelModel& model, const SystemParams& params, int start,
                          int len, std::uint64_t seed, int k);

/// Sampled chance-constrained power plan for the queue: K traces, K
/// subproblems, consensus restoration, then the feasibility repair.
P1bResult solve_p1b(std::span<const QueuedTask> tasks, int now, const SaaConfig& saa,
                    const ChannelModel& model, std::uint64_t seed, const SystemParams& params);

/// Number of samples solve_p1b will draw for this queue.
int resolve_sample_count(const SaaConfig& saa, int horizon_slots);

/// FIFO delivery of `schedule` over `trace`: a task receives bits from its
/// ready slot once its predecessors are finished or expired, and expires at
/// its deadline. Returns per-task met flags.
std::vector<bool> fifo_deadlines_met(std::span<const QueuedTask> tasks,
                                     const PowerSchedule& schedule, const ChannelTrace& trace,
                                     const LinkParams& link);

namespace detail {

/// Mutation-testing hook for `verify`: while alive, scales the water level
/// used by optimal_power_single_task on the current thread.
class WaterLevelMutation {
 public:
  explicit WaterLevelMutation(double scale);
  ~WaterLevelMutation();
  WaterLevelMutation(const WaterLevelMutation&) = delete;
  WaterLevelMutation& operator=(const WaterLevelMutation&) = delete;

 private:
  double saved_;
};

}  // namespace detail

void write_schedule_csv(std::ostream& os, const PowerSchedule& s);
void write_allocation_csv(std::ostream& os, const TimeAllocation& a);

}  // namespace uavsplit
