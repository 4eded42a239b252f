#include "uavsplit/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "uavsplit/csv.hpp"

namespace uavsplit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDoneSlack = 1e-9;

// seed streams within one episode
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kArrivalStream = 2;
constexpr std::uint64_t kSaaStream = 4;

}  // namespace

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::kOpetrl: return "opetrl";
    case Policy::kOneTask: return "one-task";
    case Policy::kGreedy: return "greedy";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  std::string n;
  for (char c : name) {
    if (c != '-' && c != '_') n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (n == "opetrl") return Policy::kOpetrl;
  if (n == "onetask") return Policy::kOneTask;
  if (n == "greedy") return Policy::kGreedy;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

void SimConfig::validate() const {
  system.validate();
  agent.validate();
  if (horizon_slots < system.deadline_slots) {
    throw std::invalid_argument("SimConfig: horizon_slots must be >= deadline_C");
  }
  if (episodes < 1) throw std::invalid_argument("SimConfig: episodes must be >= 1");
  if (train_episodes < 1) throw std::invalid_argument("SimConfig: train_episodes must be >= 1");
  if (!(saa.epsilon > 0 && saa.epsilon < 1) || !(saa.theta > 0 && saa.theta < 1)) {
    throw std::invalid_argument("SimConfig: saa epsilon/theta must lie in (0,1)");
  }
  if (saa.k_samples < 0) throw std::invalid_argument("SimConfig: saa k_samples must be >= 0");
  make_channel_model(channel);
}

double even_spread_energy(double bits, int slots, double h, const SystemParams& params) {
  if (slots <= 0) return kInf;
  const double per_slot = bits / (params.slot_s * params.bandwidth_hz * slots);
  return params.slot_s * slots * std::expm1(per_slot * std::log(2.0)) / h;
}

double choose_compute_speed(int arrive_slot, int comp_queue_free_slot, const SystemParams& params,
                            const ChannelModel& model) {
  const double h = effective_gain(model.mean_gain(), params);
  const double bits = task_payload(Mode::kCompute, params);
  const int deadline = arrive_slot + params.deadline_slots;
  const LinkParams link = LinkParams::from(params);
  double best_f = params.f_max_hz;
  double best = kInf;
  for (int div : {8, 4, 2, 1}) {
    const double f = params.f_max_hz / div;
    const int ready = std::max(arrive_slot, comp_queue_free_slot) + compute_slots(f, params);
    const int len = deadline - ready;
    if (len < 1) continue;
    const std::vector<double> gains(static_cast<std::size_t>(len), h);
    const auto wf = optimal_power_single_task(bits, gains, link);
    if (wf.infeasible) continue;
    const double cost = compute_energy(f, params) + schedule_energy(wf.power, params.slot_s);
    if (cost < best) {
      best = cost;
      best_f = f;
    }
  }
  return best_f;
}

Mode greedy_mode(double h, const SystemParams& params) {
  const int comp = compute_slots(params.f_max_hz, params);
  const int c = params.deadline_slots;
  if (c - comp < 1) return Mode::kDirect;
  const double ct = even_spread_energy(task_payload(Mode::kCompute, params), c - comp, h, params) +
                    compute_energy(params.f_max_hz, params);
  const double dt = even_spread_energy(task_payload(Mode::kDirect, params), c, h, params);
  return ct < dt ? Mode::kCompute : Mode::kDirect;
}

double greedy_power(double residual_bits, int remaining_slots, double h, const SystemParams& params) {
  if (residual_bits <= 0 || remaining_slots <= 0) return 0.0;
  const double per_slot = residual_bits / (params.slot_s * params.bandwidth_hz * remaining_slots);
  return std::min(std::expm1(per_slot * std::log(2.0)) / h, params.p_max_w);
}

namespace {

struct LiveTask {
  TaskRecord rec;
  int comp_slots = 0;
  int comp_left = 0;
  int ready = -1;  // actual ready slot once known
  double residual = 0.0;
  bool resolved = false;
  // one-task plan
  P1bResult plan;
  bool boosted = false;
  bool was_head = false;
  // agent bookkeeping
  int decision = -1;
  double reward_j = 0.0;
};

struct Plan {
  bool active = false;
  int start = 0;
  PowerSchedule schedule;
  std::vector<double> expected;
  double delivered = 0.0;
  double mean_slot_bits = 0.0;
};

struct Decision {
  std::vector<double> state;
  int action = 0;
  int task = -1;
};

class Episode {
 public:
  Episode(const SimConfig& cfg, const QNetwork* net, std::uint64_t seed, EpisodeTrace* trace,
          Learner* learner)
      : cfg_(cfg),
        p_(cfg.system),
        link_(LinkParams::from(cfg.system)),
        net_(learner != nullptr ? &learner->agent->online() : net),
        seed_(seed),
        trace_(trace),
        learner_(learner),
        model_(make_channel_model(cfg.channel)),
        penalty_(cfg.agent.penalty(cfg.system)) {
    if (cfg.policy == Policy::kOpetrl && net_ == nullptr) {
      throw std::invalid_argument("run_episode: OPETRL needs a Q network");
    }
    if (net_ != nullptr && net_->n_in() != cfg.agent.state_dim()) {
      throw std::invalid_argument("run_episode: Q network input size does not match max_tasks");
    }
  }

  Metrics run() {
    const int H = cfg_.horizon_slots;
    const int C = p_.deadline_slots;
    Rng ch_rng(derive_seed(seed_, kChannelStream));
    Rng ar_rng(derive_seed(seed_, kArrivalStream));
    gs_.resize(H);
    hs_.resize(H);
    const double floor_g = 1e-12 * model_->mean_gain();
    for (int t = 0; t < H; ++t) {
      gs_[t] = std::max(model_->sample_gain(ch_rng), floor_g);
      hs_[t] = effective_gain(gs_[t], p_);
    }
    std::bernoulli_distribution arrive(p_.arrival_prob);
    std::vector<char> arrivals(H, 0);
    for (int t = 0; t < H; ++t) {
      const bool a = arrive(ar_rng);
      arrivals[t] = (a && t + C <= H) ? 1 : 0;
    }

    battery_.energy_j = p_.batt_init_j;
    energy_cum_.assign(1, 0.0);
    const double harvest = slot_harvest(p_);

    for (int t = 0; t < H; ++t) {
      SlotRecord rec;
      rec.slot = t;
      rec.g = gs_[t];
      rec.h = hs_[t];
      rec.queue_len = unresolved_count();

      if (arrivals[t]) admit(t);
      rec.replanned = plan_slot(t);

      // processor: first task without data, serial after its predecessor
      int computing = -1;
      for (std::size_t i = first_unready_; i < tasks_.size(); ++i) {
        LiveTask& k = tasks_[i];
        if (k.ready >= 0) continue;
        const int prev_ready = i == 0 ? 0 : tasks_[i - 1].ready;
        if (i > 0 && (prev_ready < 0 || prev_ready > t)) break;
        if (k.rec.arrive_slot > t) break;
        if (k.resolved) k.comp_left = 0;  // expired before its data existed
        if (k.comp_left == 0) {
          k.ready = std::max(k.rec.arrive_slot, prev_ready);
          continue;
        }
        computing = static_cast<int>(i);
        break;
      }
      double e_comp = 0.0;
      if (computing >= 0) {
        const LiveTask& k = tasks_[computing];
        e_comp = k.rec.comp_energy_j / k.comp_slots;
      }

      // transmission candidates: ready, unresolved, FIFO
      std::vector<int> chain;
      double chain_bits = 0.0;
      for (std::size_t i = first_open_; i < tasks_.size(); ++i) {
        const LiveTask& k = tasks_[i];
        if (k.resolved) continue;
        if (k.ready < 0 || k.ready > t) break;
        chain.push_back(static_cast<int>(i));
        chain_bits += k.residual;
      }
      double power = chain.empty() ? 0.0 : slot_power(t, chain.front());
      power = std::clamp(power, 0.0, p_.p_max_w);
      double bits = link_.slot_bits(power, hs_[t]);
      if (!chain.empty() && bits > chain_bits) {
        power = std::expm1(chain_bits * std::log(2.0) / (p_.slot_s * p_.bandwidth_hz)) / hs_[t];
        power = std::min(power, p_.p_max_w);
        bits = chain_bits;
      }
      if (chain.empty()) {
        power = 0.0;
        bits = 0.0;
      }
      double e_tx = p_.slot_s * power;

      // battery: full spend, else stall compute, else drop transmission
      BatteryStep step = battery_step(battery_, harvest, e_tx, e_comp, p_.batt_cap_j);
      if (step.depleted) {
        rec.depleted = true;
        if (e_comp > 0) {
          step = battery_step(battery_, harvest, e_tx, 0.0, p_.batt_cap_j);
          if (!step.depleted) {
            e_comp = 0.0;
            computing = -1;
          }
        }
        if (step.depleted) {
          e_tx = 0.0;
          power = 0.0;
          bits = 0.0;
          step = battery_step(battery_, harvest, 0.0, e_comp, p_.batt_cap_j);
          if (step.depleted) {
            e_comp = 0.0;
            computing = -1;
            step = battery_step(battery_, harvest, 0.0, 0.0, p_.batt_cap_j);
          }
        }
      }
      if (rec.depleted) {
        ++metrics_.depleted_slots;
        force_replan_ = true;
      }
      battery_ = step.next;

      if (computing >= 0) {
        LiveTask& k = tasks_[computing];
        if (--k.comp_left == 0) k.ready = t + 1;
      }

      // FIFO delivery
      double left = bits;
      rec.head_task = chain.empty() ? -1 : tasks_[chain.front()].rec.id;
      for (int i : chain) {
        if (left <= 0) break;
        LiveTask& k = tasks_[i];
        const double take = bits == chain_bits ? k.residual : std::min(left, k.residual);
        k.residual -= take;
        k.rec.delivered_bits += take;
        left -= take;
        if (take > 0) {
          if (k.rec.first_tx_slot < 0) k.rec.first_tx_slot = t;
          k.rec.finish_slot = t;
        }
        if (k.residual <= kDoneSlack * k.rec.payload_bits) {
          k.residual = 0.0;
          resolve(i, t, true);
        }
      }
      if (plan_.active) plan_.delivered += bits;

      metrics_.energy_trans_j += e_tx;
      metrics_.energy_comp_j += e_comp;
      energy_cum_.push_back(energy_cum_.back() + e_tx + e_comp);

      rec.power_w = power;
      rec.bits = bits;
      rec.harvest_j = harvest;
      rec.e_trans_j = e_tx;
      rec.e_comp_j = e_comp;
      rec.battery_j = battery_.energy_j;

      // deadlines are exclusive
      for (std::size_t i = first_open_; i < tasks_.size(); ++i) {
        if (!tasks_[i].resolved && tasks_[i].rec.deadline_slot <= t + 1) resolve(i, t, false);
      }
      advance_cursors();
      settle_rewards(false);
      if (trace_ != nullptr) trace_->slots.push_back(rec);
    }
    settle_rewards(true);

    metrics_.tasks = static_cast<int>(tasks_.size());
    for (const auto& k : tasks_) {
      metrics_.met += k.rec.met ? 1 : 0;
      metrics_.ct_tasks += k.rec.mode == Mode::kCompute ? 1 : 0;
      if (trace_ != nullptr) trace_->tasks.push_back(k.rec);
    }
    metrics_.success_prob =
        metrics_.tasks == 0 ? 1.0 : static_cast<double>(metrics_.met) / metrics_.tasks;
    metrics_.total_energy_j = metrics_.energy_trans_j + metrics_.energy_comp_j;
    return metrics_;
  }

 private:
  int unresolved_count() const {
    int n = 0;
    for (std::size_t i = first_open_; i < tasks_.size(); ++i) n += tasks_[i].resolved ? 0 : 1;
    return n;
  }

  // projected data-ready slot of every unresolved task, assuming no stalls
  std::vector<int> projected_ready(int now) const {
    std::vector<int> out(tasks_.size(), 0);
    int prev = 0;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const LiveTask& k = tasks_[i];
      if (k.ready >= 0) {
        out[i] = k.ready;
      } else {
        const int base = std::max({k.rec.arrive_slot, prev, now});
        out[i] = base + k.comp_left;
      }
      prev = out[i];
    }
    return out;
  }

  std::vector<double> agent_state(int now) const {
    std::vector<PendingTask> pending;
    for (std::size_t i = first_open_; i < tasks_.size(); ++i) {
      const LiveTask& k = tasks_[i];
      if (k.resolved) continue;
      pending.push_back({k.residual, k.rec.deadline_slot - now});
    }
    return build_state(pending, battery_.energy_j, p_, cfg_.agent.max_tasks);
  }

  void admit(int t) {
    const int id = static_cast<int>(tasks_.size());
    const int free_slot = tasks_.empty() ? t : projected_ready(t).back();
    Mode mode = Mode::kDirect;
    int decision = -1;
    std::vector<double> state;
    switch (cfg_.policy) {
      case Policy::kOpetrl: {
        state = agent_state(t);
        int a;
        if (learner_ != nullptr) {
          a = select_action(*net_, state, learner_->epsilon, *learner_->rng);
        } else {
          a = greedy_action(*net_, state);
        }
        mode = a == 1 ? Mode::kCompute : Mode::kDirect;
        decision = static_cast<int>(decisions_.size());
        decisions_.push_back({state, a, id});
        break;
      }
      case Policy::kOneTask:
        mode = task_payload(Mode::kCompute, p_) < task_payload(Mode::kDirect, p_) ? Mode::kCompute
                                                                                  : Mode::kDirect;
        break;
      case Policy::kGreedy:
        mode = greedy_mode(hs_[t], p_);
        break;
    }
    double f = 0.0;
    if (mode == Mode::kCompute) {
      f = cfg_.policy == Policy::kGreedy ? p_.f_max_hz
                                         : choose_compute_speed(t, free_slot, p_, *model_);
    }
    const Task task = make_task(id, t, mode, f, p_);
    LiveTask k;
    k.rec.id = id;
    k.rec.arrive_slot = t;
    k.rec.ready_slot = -1;
    k.rec.mode = mode;
    k.rec.comp_speed_hz = f;
    k.rec.payload_bits = task.payload_bits;
    k.rec.deadline_slot = task.deadline_slot;
    k.rec.comp_energy_j = mode == Mode::kCompute ? compute_energy(f, p_) : 0.0;
    k.comp_slots = task.comp_slots;
    k.comp_left = task.comp_slots;
    k.residual = task.payload_bits;
    k.decision = decision;
    tasks_.push_back(std::move(k));

    if (cfg_.policy == Policy::kOneTask) {
      LiveTask& nk = tasks_.back();
      const int ready = projected_ready(t).back();
      if (ready < nk.rec.deadline_slot) {
        const QueuedTask q{id, nk.residual, ready, nk.rec.deadline_slot};
        nk.plan = solve_p1b(std::span<const QueuedTask>(&q, 1), t, cfg_.saa, *model_,
                            derive_seed(derive_seed(seed_, kSaaStream), static_cast<std::uint64_t>(t)),
                            p_);
      }
    }
    arrived_this_slot_ = true;
  }

  // OPETRL re-planning; returns whether a solve happened this slot
  bool plan_slot(int t) {
    if (cfg_.policy != Policy::kOpetrl) {
      arrived_this_slot_ = false;
      return false;
    }
    bool replan = arrived_this_slot_ || force_replan_;
    arrived_this_slot_ = false;
    if (!replan && plan_.active && t > plan_.start) {
      double expected = 0.0;
      for (int s = plan_.start; s < t && s - plan_.start < static_cast<int>(plan_.expected.size()); ++s) {
        expected += plan_.expected[s - plan_.start];
      }
      replan = plan_.delivered < expected - plan_.mean_slot_bits;
    }
    if (!replan) return false;
    force_replan_ = false;
    replan_now(t);
    return true;
  }

  void replan_now(int t) {
    const auto ready = projected_ready(t);
    std::vector<QueuedTask> queue;
    std::vector<int> index;
    for (std::size_t i = first_open_; i < tasks_.size(); ++i) {
      const LiveTask& k = tasks_[i];
      if (k.resolved) continue;
      queue.push_back({k.rec.id, k.residual, ready[i], k.rec.deadline_slot});
      index.push_back(static_cast<int>(i));
    }
    // drop tasks that cannot receive a single slot
    for (;;) {
      int next_free = t;
      int bad = -1;
      for (std::size_t j = 0; j < queue.size(); ++j) {
        const int s = std::max(next_free, queue[j].ready_slot);
        if (s >= queue[j].deadline_slot) {
          bad = static_cast<int>(j);
          break;
        }
        next_free = s + 1;
      }
      if (bad < 0) break;
      LiveTask& k = tasks_[index[bad]];
      k.rec.dropped = true;
      resolve(static_cast<std::size_t>(index[bad]), t - 1, false);
      queue.erase(queue.begin() + bad);
      index.erase(index.begin() + bad);
    }
    ++metrics_.replans;
    plan_ = Plan{};
    if (queue.empty()) return;
    const P1bResult res =
        solve_p1b(queue, t, cfg_.saa, *model_,
                  derive_seed(derive_seed(seed_, kSaaStream), static_cast<std::uint64_t>(t)), p_);
    plan_.active = true;
    plan_.start = t;
    plan_.schedule = res.schedule;
    plan_.expected = res.expected_bits;
    double total = 0.0;
    int used = 0;
    for (double b : res.expected_bits) {
      total += b;
      used += b > 0 ? 1 : 0;
    }
    plan_.mean_slot_bits = used > 0 ? total / used : 0.0;
  }

  double slot_power(int t, int head) {
    LiveTask& k = tasks_[head];
    switch (cfg_.policy) {
      case Policy::kOpetrl:
        return plan_.active ? plan_.schedule.at(t) : 0.0;
      case Policy::kOneTask: {
        if (!k.was_head) {
          k.was_head = true;
          double remaining = 0.0;
          for (int s = t; s < k.plan.schedule.end_slot(); ++s) {
            remaining += k.plan.expected_bits[s - k.plan.schedule.start_slot];
          }
          if (remaining < k.residual * (1.0 - kDoneSlack)) k.boosted = true;
        }
        return k.boosted ? p_.p_max_w : k.plan.schedule.at(t);
      }
      case Policy::kGreedy:
        return greedy_power(k.residual, k.rec.deadline_slot - t, hs_[t], p_);
    }
    return 0.0;
  }

  void resolve(std::size_t i, int slot, bool met) {
    LiveTask& k = tasks_[i];
    if (k.resolved) return;
    k.resolved = true;
    k.rec.met = met;
    if (k.ready >= 0) k.rec.ready_slot = k.ready;
    // the reward window closes at `slot`; its spend is known after the slot
    if (k.decision >= 0) pending_energy_.push_back({static_cast<int>(i), slot});
  }

  void advance_cursors() {
    while (first_open_ < tasks_.size() && tasks_[first_open_].resolved) ++first_open_;
    while (first_unready_ < tasks_.size() && tasks_[first_unready_].ready >= 0) ++first_unready_;
  }

  void finalize_pending_energy() {
    for (const auto& [i, end] : pending_energy_) {
      LiveTask& k = tasks_[i];
      const int upto = std::min(end + 1, static_cast<int>(energy_cum_.size()) - 1);
      const double e = upto > k.rec.arrive_slot ? energy_cum_[upto] - energy_cum_[k.rec.arrive_slot] : 0.0;
      k.reward_j = task_reward(e, k.rec.met, cfg_.agent, penalty_);
    }
    pending_energy_.clear();
  }

  void settle_rewards(bool episode_end) {
    finalize_pending_energy();
    while (next_push_ < decisions_.size()) {
      const Decision& d = decisions_[next_push_];
      const LiveTask& k = tasks_[d.task];
      if (!k.resolved) break;
      const bool has_next = next_push_ + 1 < decisions_.size();
      if (!has_next && !episode_end) break;
      metrics_.reward_sum += k.reward_j;
      if (learner_ != nullptr) {
        Transition tr;
        tr.s = d.state;
        tr.action = d.action;
        tr.reward = k.reward_j / penalty_;
        tr.terminal = !has_next;
        tr.s_next = has_next ? decisions_[next_push_ + 1].state
                             : std::vector<double>(d.state.size(), 0.0);
        learner_->agent->remember(std::move(tr));
        ++learner_->transitions;
        if (const auto loss = learner_->agent->learn(*learner_->rng);
            loss && learner_->losses != nullptr) {
          learner_->losses->push_back(*loss);
        }
      }
      ++next_push_;
    }
  }

  const SimConfig& cfg_;
  const SystemParams& p_;
  LinkParams link_;
  const QNetwork* net_;
  std::uint64_t seed_;
  EpisodeTrace* trace_;
  Learner* learner_;
  std::unique_ptr<ChannelModel> model_;
  double penalty_;

  std::vector<double> gs_, hs_;
  std::vector<LiveTask> tasks_;
  std::size_t first_open_ = 0;
  std::size_t first_unready_ = 0;
  BatteryState battery_;
  std::vector<double> energy_cum_;
  Plan plan_;
  bool arrived_this_slot_ = false;
  bool force_replan_ = false;
  std::vector<Decision> decisions_;
  std::vector<std::pair<int, int>> pending_energy_;
  std::size_t next_push_ = 0;
  Metrics metrics_;
};

}  // namespace

Metrics run_episode(const SimConfig& cfg, const QNetwork* net, std::uint64_t seed,
                    EpisodeTrace* trace, Learner* learner) {
  cfg.validate();
  if (trace != nullptr) {
    trace->slots.clear();
    trace->tasks.clear();
  }
  Episode ep(cfg, net, seed, trace, learner);
  return ep.run();
}

TrainResult train_agent(const SimConfig& cfg, std::uint64_t seed) {
  SimConfig c = cfg;
  c.policy = Policy::kOpetrl;
  c.validate();
  Rng init_rng(derive_seed(seed, 0x51));
  Rng learn_rng(derive_seed(seed, 0x52));
  DdqnAgent agent(c.agent, init_rng);
  TrainResult out;
  for (int e = 0; e < c.train_episodes; ++e) {
    Learner l;
    l.agent = &agent;
    l.epsilon = c.agent.epsilon_at(e, c.train_episodes);
    l.rng = &learn_rng;
    l.losses = &out.losses;
    const Metrics m = run_episode(c, nullptr, derive_seed(seed, 1000 + static_cast<std::uint64_t>(e)),
                                  nullptr, &l);
    out.curve.push_back({e, l.epsilon, m.reward_sum, m.success_prob, m.total_energy_j, l.transitions});
  }
  out.online = agent.online();
  out.train_steps = agent.train_steps();
  return out;
}

Summary aggregate(const std::vector<Metrics>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no episodes");
  const double n = static_cast<double>(runs.size());
  Summary s;
  s.episodes = static_cast<int>(runs.size());
  for (const auto& m : runs) {
    s.success_mean += m.success_prob / n;
    s.energy_mean += m.total_energy_j / n;
  }
  if (runs.size() > 1) {
    double vs = 0.0;
    double ve = 0.0;
    for (const auto& m : runs) {
      vs += (m.success_prob - s.success_mean) * (m.success_prob - s.success_mean);
      ve += (m.total_energy_j - s.energy_mean) * (m.total_energy_j - s.energy_mean);
    }
    s.success_se = std::sqrt(vs / (n - 1.0) / n);
    s.energy_se = std::sqrt(ve / (n - 1.0) / n);
  }
  return s;
}

std::vector<Metrics> evaluate(const SimConfig& cfg, const QNetwork* net, int threads) {
  cfg.validate();
  std::vector<Metrics> out(static_cast<std::size_t>(cfg.episodes));
  threads = std::clamp(threads, 1, cfg.episodes);
  auto work = [&](int w) {
    for (int e = w; e < cfg.episodes; e += threads) {
      out[static_cast<std::size_t>(e)] =
          run_episode(cfg, net, derive_seed(cfg.seed, static_cast<std::uint64_t>(e)));
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  return out;
}

void write_summary_header(std::ostream& os) {
  os << "policy,sweep_var,sweep_value,success_prob_mean,success_prob_se,energy_J_mean,energy_J_se,"
        "episodes,seed\n";
}

void write_summary_row(std::ostream& os, const Summary& s) {
  os << s.policy << ',' << s.sweep_var << ',' << fmt_double(s.sweep_value) << ','
     << fmt_double(s.success_mean) << ',' << fmt_double(s.success_se) << ','
     << fmt_double(s.energy_mean) << ',' << fmt_double(s.energy_se) << ',' << s.episodes << ','
     << s.seed << '\n';
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "slot,g,h,power_w,bits,harvest_j,e_trans_j,e_comp_j,battery_j,queue_len,head_task,"
        "depleted,replanned\n";
  for (const auto& r : trace.slots) {
    os << r.slot << ',' << fmt_double(r.g) << ',' << fmt_double(r.h) << ',' << fmt_double(r.power_w)
       << ',' << fmt_double(r.bits) << ',' << fmt_double(r.harvest_j) << ','
       << fmt_double(r.e_trans_j) << ',' << fmt_double(r.e_comp_j) << ','
       << fmt_double(r.battery_j) << ',' << r.queue_len << ',' << r.head_task << ','
       << (r.depleted ? 1 : 0) << ',' << (r.replanned ? 1 : 0) << '\n';
  }
}

void write_task_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "id,arrive_slot,mode,comp_speed_hz,payload_bits,ready_slot,first_tx_slot,finish_slot,"
        "deadline_slot,delivered_bits,comp_energy_j,met,dropped\n";
  for (const auto& k : trace.tasks) {
    os << k.id << ',' << k.arrive_slot << ',' << mode_name(k.mode) << ','
       << fmt_double(k.comp_speed_hz) << ',' << fmt_double(k.payload_bits) << ',' << k.ready_slot
       << ',' << k.first_tx_slot << ',' << k.finish_slot << ',' << k.deadline_slot << ','
       << fmt_double(k.delivered_bits) << ',' << fmt_double(k.comp_energy_j) << ','
       << (k.met ? 1 : 0) << ',' << (k.dropped ? 1 : 0) << '\n';
  }
}

}  // namespace uavsplit
