#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavsplit/system_model.hpp"

namespace uavsplit {

struct AgentConfig {
  int max_tasks = 8;
  int hidden = 32;
  double learn_rate = 1e-3;
  double discount_gamma = 0.95;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay = 0.5;  ///< fraction of training episodes over which eps anneals
  int minibatch = 64;
  int buffer_capacity = 1000;
  int target_sync_every = 20;
  double deadline_penalty = 0.0;  ///< Joules; 0 selects 10 * p_max * C * tau
  double success_bonus = 0.0;

  int state_dim() const { return 2 * max_tasks + 1; }
  /// Linear anneal from eps_start to eps_end, then flat.
  double epsilon_at(int episode, int total_episodes) const;
  double penalty(const SystemParams& params) const;
  void validate() const;
};

/// What the agent sees of one pending task.
struct PendingTask {
  double bits = 0.0;
  int remaining_slots = 0;
};

/// [queue bits / S, remaining slots / C, battery / E_max], zero-padded to
/// max_tasks per vector; tasks beyond max_tasks are summed into the last entry.
std::vector<double> build_state(std::span<const PendingTask> pending, double battery_j,
                                const SystemParams& params, int max_tasks);

/// One hidden ReLU layer, linear output. Weights are row-major (out x in).
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(int n_in, int hidden, int n_out);

  void xavier_init(Rng& rng);
  std::vector<double> forward(std::span<const double> s) const;

  int n_in() const { return n_in_; }
  int hidden() const { return hidden_; }
  int n_out() const { return n_out_; }
  std::size_t param_count() const;

  /// W1, b1, W2, b2 concatenated.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> theta);

  /// Adds d Q_a(s) / d theta * scale to `grad` (flattened layout).
  void accumulate_grad(std::span<const double> s, int action, double scale,
                       std::span<double> grad) const;

  bool operator==(const QNetwork& o) const = default;

  std::vector<double> w1, b1, w2, b2;

 private:
  int n_in_ = 0;
  int hidden_ = 0;
  int n_out_ = 0;
};

struct Transition {
  std::vector<double> s;
  int action = 0;
  double reward = 0.0;
  std::vector<double> s_next;
  bool terminal = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest first.
  const Transition& at(std::size_t i) const;
  /// Uniform without replacement; n must not exceed size().
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next overwrite position once full
  std::vector<Transition> items_;
};

/// Index of the largest Q value; ties go to index 0.
int greedy_action(const QNetwork& net, std::span<const double> s);
int select_action(const QNetwork& net, std::span<const double> s, double eps, Rng& rng);

/// r if terminal, else r + gamma * Q_target(s', argmax_a Q_online(s', a)).
double ddqn_target(double r, std::span<const double> s_next, const QNetwork& online,
                   const QNetwork& target, double gamma, bool terminal);
/// Single-network rule r + gamma * max_a Q_target(s', a), for comparison.
double dqn_target(double r, std::span<const double> s_next, const QNetwork& target, double gamma,
                  bool terminal);

/// Mean of (Q_online(s,a) - y)^2 over the batch with targets from the frozen
/// nets. When `grad` is given it receives d loss / d theta of `online`.
double batch_loss(const QNetwork& online, const QNetwork& target,
                  std::span<const Transition* const> batch, double gamma,
                  std::vector<double>* grad = nullptr);

/// One SGD step on `online`; returns the loss before the update. Throws
/// std::invalid_argument when the batch is smaller than cfg.minibatch.
double train_step(QNetwork& online, const QNetwork& target,
                  std::span<const Transition* const> batch, const AgentConfig& cfg);

void sync_target(const QNetwork& online, QNetwork& target);

/// -energy (+ bonus) when the deadline was met, -penalty otherwise.
double task_reward(double energy_j, bool deadline_met, const AgentConfig& cfg,
                   double penalty_j);

/// Online/target pair, replay memory and the sync counter.
class DdqnAgent {
 public:
  DdqnAgent(const AgentConfig& cfg, Rng& init_rng);

  int act(std::span<const double> s, double eps, Rng& rng) const;
  void remember(Transition t) { buffer_.push(std::move(t)); }
  /// train_step on a fresh minibatch once the buffer holds one; syncs the
  /// target every target_sync_every steps. Returns the loss when it trained.
  std::optional<double> learn(Rng& rng);

  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  QNetwork& online() { return online_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const AgentConfig& config() const { return cfg_; }
  int train_steps() const { return train_steps_; }
  int steps_since_sync() const { return since_sync_; }
  int syncs() const { return syncs_; }

 private:
  AgentConfig cfg_;
  QNetwork online_;
  QNetwork target_;
  ReplayBuffer buffer_;
  int train_steps_ = 0;
  int since_sync_ = 0;
  int syncs_ = 0;
};

/// Binary checkpoint: "TRLQ", u32 version, u32 n_in/hidden/n_out, then
/// row-major little-endian f64 for W1, b1, W2, b2.
void save_checkpoint(const std::string& path, const QNetwork& net);
/// Throws std::runtime_error on I/O failure, bad magic or mismatched dims.
QNetwork load_checkpoint(const std::string& path, int n_in, int hidden, int n_out);

}  // namespace uavsplit
