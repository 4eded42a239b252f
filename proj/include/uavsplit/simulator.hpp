#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uavsplit/power_opt.hpp"
#include "uavsplit/rl_agent.hpp"
#include "uavsplit/system_model.hpp"

namespace uavsplit {

enum class Policy { kOpetrl, kOneTask, kGreedy };

const char* policy_name(Policy p);
/// Accepts "opetrl", "one-task"/"onetask", "greedy" (case-insensitive).
Policy parse_policy(const std::string& name);

struct SimConfig {
  SystemParams system;
  SaaConfig saa;
  AgentConfig agent;
  std::string channel = "rayleigh";
  int horizon_slots = 2000;
  int episodes = 50;
  int train_episodes = 200;
  std::uint64_t seed = 1;
  Policy policy = Policy::kOpetrl;

  void validate() const;
};

struct SlotRecord {
  int slot = 0;
  double g = 0.0;
  double h = 0.0;
  double power_w = 0.0;
  double bits = 0.0;
  double harvest_j = 0.0;
  double e_trans_j = 0.0;
  double e_comp_j = 0.0;
  double battery_j = 0.0;  ///< after the slot
  int queue_len = 0;       ///< unresolved tasks at the start of the slot
  int head_task = -1;      ///< task receiving the first bits, -1 if none
  bool depleted = false;
  bool replanned = false;
};

struct TaskRecord {
  int id = 0;
  int arrive_slot = 0;
  Mode mode = Mode::kDirect;
  double comp_speed_hz = 0.0;
  double payload_bits = 0.0;
  int ready_slot = -1;     ///< slot its data existed (actual, after any stall); -1 if never
  int first_tx_slot = -1;  ///< first slot it received bits
  int finish_slot = -1;    ///< last slot it received bits
  int deadline_slot = 0;
  double delivered_bits = 0.0;
  double comp_energy_j = 0.0;
  bool met = false;
  bool dropped = false;    ///< removed from the plan because no slot was left
};

struct EpisodeTrace {
  std::vector<SlotRecord> slots;
  std::vector<TaskRecord> tasks;
};

struct Metrics {
  int tasks = 0;
  int met = 0;
  double success_prob = 1.0;
  double energy_trans_j = 0.0;
  double energy_comp_j = 0.0;
  double total_energy_j = 0.0;
  int ct_tasks = 0;
  int replans = 0;
  int depleted_slots = 0;
  double reward_sum = 0.0;  ///< sum of task rewards in Joules (OPETRL only)
};

/// Hooks for a training episode: exploration, replay pushes and updates.
struct Learner {
  DdqnAgent* agent = nullptr;
  double epsilon = 0.0;
  Rng* rng = nullptr;
  std::vector<double>* losses = nullptr;
  int transitions = 0;
};

/// One episode. OPETRL needs `net` (or a learner, whose online net is used).
/// Channel, arrivals and exploration draw from separate seed-derived streams,
/// so policies sharing a seed see the same channel and traffic.
Metrics run_episode(const SimConfig& cfg, const QNetwork* net, std::uint64_t seed,
                    EpisodeTrace* trace = nullptr, Learner* learner = nullptr);

struct TrainResult {
  QNetwork online;
  struct Episode {
    int episode = 0;
    double epsilon = 0.0;
    double reward_sum = 0.0;
    double success_prob = 0.0;
    double energy_j = 0.0;
    int transitions = 0;
  };
  std::vector<Episode> curve;
  std::vector<double> losses;  ///< one entry per train_step
  int train_steps = 0;
};

/// OPETRL training over cfg.train_episodes episodes of cfg.horizon_slots.
TrainResult train_agent(const SimConfig& cfg, std::uint64_t seed);

struct Summary {
  std::string policy;
  std::string sweep_var;
  double sweep_value = 0.0;
  double success_mean = 0.0;
  double success_se = 0.0;
  double energy_mean = 0.0;
  double energy_se = 0.0;
  int episodes = 0;
  std::uint64_t seed = 0;
};

/// Mean and standard error (sample sd / sqrt(n); 0 for one episode).
Summary aggregate(const std::vector<Metrics>& runs);

/// Episodes seeded derive_seed(cfg.seed, e) for e in [0, cfg.episodes).
std::vector<Metrics> evaluate(const SimConfig& cfg, const QNetwork* net, int threads = 1);

void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const Summary& s);
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);
void write_task_csv(std::ostream& os, const EpisodeTrace& trace);

/// Transmit energy for D bits spread evenly over T slots at gain h.
double even_spread_energy(double bits, int slots, double h, const SystemParams& params);

/// Compute speed from {f_max/8, f_max/4, f_max/2, f_max} minimising compute
/// energy plus the mean-channel water-filling energy of the rest of the window.
double choose_compute_speed(int arrive_slot, int comp_queue_free_slot, const SystemParams& params,
                            const ChannelModel& model);

/// Greedy baseline mode rule at the current gain h.
Mode greedy_mode(double h, const SystemParams& params);
/// Greedy baseline power for the head task.
double greedy_power(double residual_bits, int remaining_slots, double h, const SystemParams& params);

}  // namespace uavsplit
