#include "uavsplit/power_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "uavsplit/csv.hpp"

namespace uavsplit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// relative slack on "delivered >= payload" tests
constexpr double kRateSlack = 1e-9;

thread_local double g_level_scale = 1.0;

}  // namespace

namespace detail {

WaterLevelMutation::WaterLevelMutation(double scale) : saved_(g_level_scale) { g_level_scale = scale; }
WaterLevelMutation::~WaterLevelMutation() { g_level_scale = saved_; }

}  // namespace detail

double LinkParams::payload_nats(double bits) const {
  return bits * std::numbers::ln2 / (slot_s * bandwidth_hz);
}

double LinkParams::slot_bits(double power_w, double gain_h) const {
  return slot_s * bandwidth_hz * std::log1p(power_w * gain_h) / std::numbers::ln2;
}

std::span<const double> ChannelTrace::window(int first, int len) const {
  if (len < 0 || !covers(first, first + len)) {
    throw std::out_of_range("ChannelTrace: window outside trace");
  }
  return std::span<const double>(gains).subspan(static_cast<std::size_t>(first - start_slot),
                                                static_cast<std::size_t>(len));
}

double PowerSchedule::at(int slot) const {
  if (slot < start_slot || slot >= end_slot()) return 0.0;
  return power[static_cast<std::size_t>(slot - start_slot)];
}

SingleTaskPower optimal_power_single_task(double payload_bits, std::span<const double> gains,
                                          const LinkParams& link) {
  if (gains.empty()) throw std::domain_error("optimal_power_single_task: empty window");
  if (!(payload_bits > 0)) throw std::domain_error("optimal_power_single_task: payload must be > 0");
  const std::size_t n = gains.size();
  const double target = link.payload_nats(payload_bits);
  const double pmax = link.p_max_w;

  SingleTaskPower out;
  out.power.assign(n, 0.0);

  double log_sum = 0.0;
  double floor_max = 0.0;
  double ceil_min = kInf;
  double cap_nats = 0.0;
  for (double h : gains) {
    if (!(h > 0)) throw std::domain_error("optimal_power_single_task: gains must be > 0");
    log_sum += std::log(h);
    floor_max = std::max(floor_max, 1.0 / h);
    ceil_min = std::min(ceil_min, 1.0 / h + pmax);
    cap_nats += std::log1p(pmax * h);
  }

  if (cap_nats < target * (1.0 - 1e-12)) {
    std::fill(out.power.begin(), out.power.end(), pmax);
    out.water_level = kInf;
    out.clipped = true;
    out.infeasible = true;
    return out;
  }

  // Unclipped closed form over the whole window.
  double level = std::exp((target - log_sum) / static_cast<double>(n));
  if (level >= floor_max && level <= ceil_min) {
    level *= g_level_scale;
    for (std::size_t t = 0; t < n; ++t) out.power[t] = std::clamp(level - 1.0 / gains[t], 0.0, pmax);
    out.water_level = level;
    return out;
  }

  // Capped: locate the water level between consecutive breakpoints 1/h and
  // 1/h + p_max, where the active set is fixed and the closed form applies.
  std::vector<double> breaks;
  breaks.reserve(2 * n);
  for (double h : gains) {
    breaks.push_back(1.0 / h);
    breaks.push_back(1.0 / h + pmax);
  }
  std::sort(breaks.begin(), breaks.end());
  auto delivered = [&](double nu) {
    double s = 0.0;
    for (double h : gains) s += std::log1p(h * std::clamp(nu - 1.0 / h, 0.0, pmax));
    return s;
  };
  std::size_t hi = 0;
  while (hi < breaks.size() && delivered(breaks[hi]) < target) ++hi;
  if (hi == 0) hi = 1;
  if (hi == breaks.size()) hi = breaks.size() - 1;
  const double lo_b = breaks[hi - 1];
  const double hi_b = breaks[hi];
  const double mid = 0.5 * (lo_b + hi_b);

  double fixed = 0.0;
  double act_logs = 0.0;
  int active = 0;
  for (double h : gains) {
    const double a = 1.0 / h;
    if (a + pmax <= mid) {
      fixed += std::log1p(pmax * h);
    } else if (a < mid) {
      act_logs += std::log(h);
      ++active;
    }
  }
  if (active == 0) {
    level = hi_b;
  } else {
    level = std::exp((target - fixed - act_logs) / active);
    level = std::clamp(level, lo_b, hi_b);
  }
  level *= g_level_scale;
  for (std::size_t t = 0; t < n; ++t) {
    out.power[t] = std::clamp(level - 1.0 / gains[t], 0.0, pmax);
  }
  out.water_level = level;
  out.clipped = true;
  return out;
}

double schedule_energy(std::span<const double> power, double slot_s) {
  double s = 0.0;
  for (double p : power) s += p;
  return slot_s * s;
}

TimeRatio time_ratio_residual(const QueuedTask& m, const Window& wm, const QueuedTask& n,
                            const Window& wn, const ChannelTrace& trace, const LinkParams& link) {
  if (wm.len <= 0 || wn.len <= 0) throw std::domain_error("time_ratio_residual: empty window");
  const double scale = link.slot_s * link.bandwidth_hz / std::numbers::ln2;
  auto exponent = [&](const QueuedTask& task, const Window& w) {
    double mean_log = 0.0;
    for (double h : trace.window(w.start, w.len)) mean_log += std::log(scale * h);
    mean_log /= w.len;
    return link.payload_nats(task.bits) / w.len - mean_log;
  };
  TimeRatio r;
  r.lhs = static_cast<double>(wn.len) / wm.len;
  r.rhs = std::exp(exponent(m, wm) - exponent(n, wn));
  return r;
}

bool queue_feasible(std::span<const QueuedTask> tasks, int now) {
  int next_free = now;
  for (const auto& t : tasks) {
    const int s = std::max(next_free, t.ready_slot);
    if (s >= t.deadline_slot) return false;
    next_free = s + 1;
  }
  return true;
}

bool allocation_valid(std::span<const QueuedTask> tasks, const TimeAllocation& alloc, int now) {
  if (alloc.windows.size() != tasks.size()) return false;
  int prev_end = now;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Window& w = alloc.windows[i];
    if (w.task_id != tasks[i].id || w.len < 1) return false;
    if (w.start < prev_end || w.start < tasks[i].ready_slot) return false;
    // contiguity unless the task's data is not ready yet
    if (w.start != std::max(prev_end, tasks[i].ready_slot)) return false;
    if (w.end() > tasks[i].deadline_slot) return false;
    prev_end = w.end();
  }
  return tasks.empty() || alloc.windows.back().end() == tasks.back().deadline_slot;
}

namespace {

// Windows from per-task end slots.
TimeAllocation from_ends(std::span<const QueuedTask> tasks, const std::vector<int>& ends, int now) {
  TimeAllocation a;
  a.windows.resize(tasks.size());
  int prev_end = now;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const int s = std::max(prev_end, tasks[i].ready_slot);
    a.windows[i] = Window{tasks[i].id, s, ends[i] - s};
    prev_end = ends[i];
  }
  return a;
}

std::vector<int> ends_of(const TimeAllocation& a) {
  std::vector<int> e;
  e.reserve(a.windows.size());
  for (const auto& w : a.windows) e.push_back(w.end());
  return e;
}

AllocationCost window_cost(const QueuedTask& task, int start, int len, const ChannelTrace& trace,
                           const LinkParams& link) {
  AllocationCost c;
  if (task.bits <= 0) return c;
  const auto sol = optimal_power_single_task(task.bits, trace.window(start, len), link);
  c.infeasible_windows = sol.infeasible ? 1 : 0;
  c.energy_j = schedule_energy(sol.power, link.slot_s);
  return c;
}

AllocationCost add(AllocationCost a, const AllocationCost& b) {
  a.infeasible_windows += b.infeasible_windows;
  a.energy_j += b.energy_j;
  return a;
}

TimeAllocation allocate_exact(std::span<const QueuedTask> tasks, const ChannelTrace& trace, int now,
                              const LinkParams& link) {
  const std::size_t n = tasks.size();
  const int first = std::max(now, tasks[0].ready_slot);
  const int last = tasks.back().deadline_slot;
  const int span_len = last - first + 1;
  const auto idx = [&](int slot) { return static_cast<std::size_t>(slot - first); };

  // best[i][end]: cheapest cost for tasks 0..i with task i ending at `end`.
  const AllocationCost unreachable{std::numeric_limits<int>::max(), kInf};
  std::vector<std::vector<AllocationCost>> best(n, std::vector<AllocationCost>(span_len, unreachable));
  std::vector<std::vector<int>> parent(n, std::vector<int>(span_len, -1));
  // window costs by (start, end); the same window recurs for many predecessor ends
  std::vector<AllocationCost> memo(static_cast<std::size_t>(span_len) * span_len);
  std::vector<char> known(memo.size());
  const auto cost = [&](std::size_t i, int start, int end) -> const AllocationCost& {
    const std::size_t key = idx(start) * span_len + idx(end);
    if (!known[key]) {
      memo[key] = window_cost(tasks[i], start, end - start, trace, link);
      known[key] = 1;
    }
    return memo[key];
  };

  for (std::size_t i = 0; i < n; ++i) {
    const QueuedTask& task = tasks[i];
    std::fill(known.begin(), known.end(), 0);
    const int end_lo = (i + 1 == n) ? task.deadline_slot : first + 1;
    for (int end = end_lo; end <= task.deadline_slot; ++end) {
      if (i == 0) {
        if (end <= first) continue;
        best[0][idx(end)] = cost(0, first, end);
        continue;
      }
      for (int prev_end = first + 1; prev_end < end; ++prev_end) {
        const AllocationCost& before = best[i - 1][idx(prev_end)];
        if (before.infeasible_windows == std::numeric_limits<int>::max()) continue;
        const int start = std::max(prev_end, task.ready_slot);
        if (start >= end) continue;
        const AllocationCost total = add(before, cost(i, start, end));
        if (total < best[i][idx(end)]) {
          best[i][idx(end)] = total;
          parent[i][idx(end)] = prev_end;
        }
      }
    }
  }

  TimeAllocation out;
  if (best[n - 1][idx(last)].infeasible_windows == std::numeric_limits<int>::max()) {
    out.feasible = false;
    return out;
  }
  std::vector<int> ends(n);
  ends[n - 1] = last;
  for (std::size_t i = n - 1; i > 0; --i) ends[i - 1] = parent[i][idx(ends[i])];
  out = from_ends(tasks, ends, now);
  return out;
}

TimeAllocation allocate_pairwise(std::span<const QueuedTask> tasks, const ChannelTrace& trace,
                                 int now, const LinkParams& link, int loop_cap) {
  TimeAllocation alloc = initial_allocation(tasks, now);
  if (!alloc.feasible || tasks.size() < 2) return alloc;
  const std::size_t n = tasks.size();

  int last_donor = -1;
  int last_receiver = -1;
  int iter = 1;
  for (; iter < loop_cap; ++iter) {
    double best = -kInf;
    std::size_t bn = 0;
    std::size_t bm = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        const auto r = time_ratio_residual(tasks[b], alloc.windows[b], tasks[a], alloc.windows[a],
                                         trace, link);
        const double resid = r.rhs - r.lhs;
        if (resid > best) {
          best = resid;
          bn = a;
          bm = b;
        }
      }
    }
    std::size_t donor;
    std::size_t receiver;
    if (best > 0) {
      donor = bm;
      receiver = bn;
    } else if (best < 0) {
      donor = bn;
      receiver = bm;
    } else {
      break;
    }
    // undoing the previous move means the integer split oscillates
    if (static_cast<int>(donor) == last_receiver && static_cast<int>(receiver) == last_donor) break;

    std::vector<int> ends = ends_of(alloc);
    if (donor < receiver) {
      for (std::size_t j = donor; j < receiver; ++j) --ends[j];
    } else {
      for (std::size_t j = receiver; j < donor; ++j) ++ends[j];
    }
    TimeAllocation next = from_ends(tasks, ends, now);
    if (!allocation_valid(tasks, next, now)) break;
    alloc = std::move(next);
    last_donor = static_cast<int>(donor);
    last_receiver = static_cast<int>(receiver);
  }
  alloc.iterations = iter;
  return alloc;
}

}  // namespace

TimeAllocation initial_allocation(std::span<const QueuedTask> tasks, int now) {
  TimeAllocation out;
  if (!queue_feasible(tasks, now)) {
    out.feasible = false;
    return out;
  }
  // every window runs to its own deadline, then pull ends back so each
  // successor keeps at least one slot
  std::vector<int> ends(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) ends[i] = tasks[i].deadline_slot;
  for (std::size_t i = tasks.size(); i-- > 1;) ends[i - 1] = std::min(ends[i - 1], ends[i] - 1);
  out = from_ends(tasks, ends, now);
  if (!allocation_valid(tasks, out, now)) {
    out.windows.clear();
    out.feasible = false;
  }
  return out;
}

TimeAllocation allocate_times(std::span<const QueuedTask> tasks, const ChannelTrace& trace,
                              int now, const LinkParams& link, const AllocationOptions& opts) {
  if (tasks.empty()) throw std::invalid_argument("allocate_times: empty queue");
  for (std::size_t i = 1; i < tasks.size(); ++i) {
    if (tasks[i].ready_slot < tasks[i - 1].ready_slot ||
        tasks[i].deadline_slot < tasks[i - 1].deadline_slot) {
      throw std::invalid_argument("allocate_times: queue not in FIFO order");
    }
  }
  if (!queue_feasible(tasks, now)) {
    TimeAllocation out;
    out.feasible = false;
    return out;
  }
  const int first = std::max(now, tasks[0].ready_slot);
  if (!trace.covers(first, tasks.back().deadline_slot)) {
    throw std::invalid_argument("allocate_times: trace does not cover the horizon");
  }
  if (opts.rule == AllocationRule::kPairwiseResidual) {
    const int cap = opts.loop_cap > 0 ? opts.loop_cap : 10 * (tasks.back().deadline_slot - now);
    return allocate_pairwise(tasks, trace, now, link, cap);
  }
  return allocate_exact(tasks, trace, now, link);
}

AllocationCost allocation_cost(std::span<const QueuedTask> tasks, const TimeAllocation& alloc,
                               const ChannelTrace& trace, const LinkParams& link) {
  AllocationCost c;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Window& w = alloc.windows.at(i);
    c = add(c, window_cost(tasks[i], w.start, w.len, trace, link));
  }
  return c;
}

int saa_sample_count(double epsilon, double theta, int n_vars, SaaBound bound) {
  if (!(epsilon > 0 && epsilon < 1) || !(theta > 0 && theta < 1)) {
    throw std::domain_error("saa_sample_count: epsilon and theta must lie in (0,1)");
  }
  if (n_vars < 1) throw std::domain_error("saa_sample_count: n_vars must be >= 1");
  const double l = std::log(1.0 / theta);
  const double nm1 = n_vars - 1.0;
  const double root = std::sqrt(2.0 * nm1 * l + l * l);
  const double inner = bound == SaaBound::kPrinted ? nm1 + l * root : nm1 + l + root;
  // shave round-off so an exact integer is not bumped by one ulp
  return static_cast<int>(std::ceil(inner / epsilon * (1.0 - 1e-12)));
}

Subproblem solve_subproblem(const ChannelTrace& trace, std::span<const QueuedTask> tasks, int now,
                            const LinkParams& link, const AllocationOptions& opts) {
  Subproblem sub;
  sub.schedule.start_slot = now;
  if (tasks.empty()) {
    sub.schedule.power.assign(static_cast<std::size_t>(std::max(0, trace.end_slot() - now)), 0.0);
    return sub;
  }
  const int horizon_end = tasks.back().deadline_slot;
  sub.schedule.power.assign(static_cast<std::size_t>(horizon_end - now), 0.0);
  sub.allocation = allocate_times(tasks, trace, now, link, opts);
  if (!sub.allocation.feasible) {
    sub.feasible = false;
    sub.schedule.infeasible = true;
    return sub;
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Window& w = sub.allocation.windows[i];
    if (tasks[i].bits <= 0) continue;
    const auto sol = optimal_power_single_task(tasks[i].bits, trace.window(w.start, w.len), link);
    if (sol.infeasible) sub.feasible = false;
    std::copy(sol.power.begin(), sol.power.end(),
              sub.schedule.power.begin() + (w.start - now));
  }
  sub.schedule.infeasible = !sub.feasible;
  return sub;
}

PowerSchedule restore_power(std::span<const PowerSchedule> copies, double p_max_w) {
  if (copies.empty()) throw std::domain_error("restore_power: no copies");
  PowerSchedule out;
  out.start_slot = copies[0].start_slot;
  out.power.assign(copies[0].power.size(), 0.0);
  for (const auto& c : copies) {
    if (c.start_slot != out.start_slot || c.power.size() != out.power.size()) {
      throw std::domain_error("restore_power: copies do not share a horizon");
    }
    for (std::size_t t = 0; t < c.power.size(); ++t) out.power[t] += c.power[t];
  }
  const double k = static_cast<double>(copies.size());
  for (double& p : out.power) p = std::clamp(p / k, 0.0, p_max_w);
  return out;
}

ChannelTrace sample_trace(const ChannelModel& model, const SystemParams& params, int start,
                          int len, std::uint64_t seed, int k) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
  ChannelTrace tr;
  tr.start_slot = start;
  tr.gains.resize(static_cast<std::size_t>(len));
  const double floor_g = 1e-12 * model.mean_gain();
  for (double& h : tr.gains) h = effective_gain(std::max(model.sample_gain(rng), floor_g), params);
  return tr;
}

int resolve_sample_count(const SaaConfig& saa, int horizon_slots) {
  if (saa.k_samples > 0) return saa.k_samples;
  const int n = saa.n_vars > 0 ? saa.n_vars : std::max(1, horizon_slots);
  return saa_sample_count(saa.epsilon, saa.theta, n, saa.bound);
}

std::vector<bool> fifo_deadlines_met(std::span<const QueuedTask> tasks,
                                     const PowerSchedule& schedule, const ChannelTrace& trace,
                                     const LinkParams& link) {
  const std::size_t n = tasks.size();
  std::vector<bool> met(n, false);
  std::vector<bool> done(n, false);
  std::vector<double> left(n);
  for (std::size_t i = 0; i < n; ++i) {
    left[i] = tasks[i].bits;
    if (left[i] <= 0) met[i] = done[i] = true;
  }
  for (int t = schedule.start_slot; t < schedule.end_slot(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && tasks[i].deadline_slot <= t) done[i] = true;
    }
    double cap = link.slot_bits(schedule.at(t), trace.at(t));
    for (std::size_t i = 0; i < n && cap > 0; ++i) {
      if (done[i]) continue;
      if (tasks[i].ready_slot > t) break;
      const double take = std::min(cap, left[i]);
      left[i] -= take;
      cap -= take;
      if (left[i] <= kRateSlack * tasks[i].bits) {
        met[i] = done[i] = true;
      } else {
        break;
      }
    }
  }
  return met;
}

namespace {

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += threads) fn(i);
    });
  }
}

PowerSchedule scaled(const PowerSchedule& s, double alpha, double p_max) {
  PowerSchedule out = s;
  for (double& p : out.power) p = std::min(p * alpha, p_max);
  return out;
}

}  // namespace

P1bResult solve_p1b(std::span<const QueuedTask> tasks, int now, const SaaConfig& saa,
                    const ChannelModel& model, std::uint64_t seed, const SystemParams& params) {
  P1bResult res;
  res.schedule.start_slot = now;
  if (tasks.empty()) return res;

  const LinkParams link = LinkParams::from(params);
  const int horizon = tasks.back().deadline_slot - now;
  if (horizon <= 0) throw std::invalid_argument("solve_p1b: queue already expired");
  const int k_total = resolve_sample_count(saa, horizon);
  if (k_total < 1) throw std::invalid_argument("solve_p1b: need at least one sample");

  std::vector<ChannelTrace> traces(static_cast<std::size_t>(k_total));
  std::vector<Subproblem> subs(static_cast<std::size_t>(k_total));
  parallel_for(k_total, saa.threads, [&](int k) {
    const auto ki = static_cast<std::size_t>(k);
    traces[ki] = sample_trace(model, params, now, horizon, seed, k);
    subs[ki] = solve_subproblem(traces[ki], tasks, now, link, saa.allocation);
  });

  res.samples = k_total;
  for (const auto& s : subs) res.infeasible_samples += s.feasible ? 0 : 1;
  const bool drop = res.infeasible_samples <= static_cast<int>(std::floor(saa.epsilon * k_total));
  res.chance_infeasible = !drop;

  std::vector<PowerSchedule> kept;
  std::vector<const ChannelTrace*> kept_traces;
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (drop && !subs[k].feasible) continue;
    kept.push_back(subs[k].schedule);
    kept_traces.push_back(&traces[k]);
  }
  res.schedule = restore_power(kept, params.p_max_w);

  auto satisfied = [&](const PowerSchedule& s) {
    int c = 0;
    for (const ChannelTrace* tr : kept_traces) {
      const auto met = fifo_deadlines_met(tasks, s, *tr, link);
      c += std::all_of(met.begin(), met.end(), [](bool b) { return b; }) ? 1 : 0;
    }
    return c;
  };

  res.satisfied_samples = satisfied(res.schedule);
  const int all = static_cast<int>(kept.size());
  if (saa.feasibility_repair && res.satisfied_samples < all) {
    double min_pos = kInf;
    for (double p : res.schedule.power) {
      if (p > 0) min_pos = std::min(min_pos, p);
    }
    if (std::isfinite(min_pos)) {
      const double alpha_max = std::min(1e9, params.p_max_w / min_pos);
      const int reachable = satisfied(scaled(res.schedule, alpha_max, params.p_max_w));
      if (reachable > res.satisfied_samples) {
        double lo = 1.0;
        double hi = alpha_max;
        for (int it = 0; it < 100 && hi - lo > 1e-9 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (satisfied(scaled(res.schedule, mid, params.p_max_w)) >= reachable) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        res.schedule = scaled(res.schedule, hi, params.p_max_w);
        res.lift = hi;
        res.satisfied_samples = satisfied(res.schedule);
      }
    }
  }
  res.schedule.infeasible = res.chance_infeasible;

  res.expected_bits.assign(res.schedule.power.size(), 0.0);
  for (const ChannelTrace* tr : kept_traces) {
    for (std::size_t t = 0; t < res.schedule.power.size(); ++t) {
      res.expected_bits[t] += link.slot_bits(res.schedule.power[t], tr->gains[t]);
    }
  }
  for (double& b : res.expected_bits) b /= static_cast<double>(kept_traces.size());
  return res;
}

void write_schedule_csv(std::ostream& os, const PowerSchedule& s) {
  os << "slot,power_watts\n";
  for (int t = s.start_slot; t < s.end_slot(); ++t) os << t << ',' << fmt_double(s.at(t)) << '\n';
}

void write_allocation_csv(std::ostream& os, const TimeAllocation& a) {
  os << "task_id,start_slot,len_slots\n";
  for (const auto& w : a.windows) os << w.task_id << ',' << w.start << ',' << w.len << '\n';
}

}  // namespace uavsplit
