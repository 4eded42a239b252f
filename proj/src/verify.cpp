#include "uavsplit/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "uavsplit/oracles.hpp"
#include "uavsplit/power_opt.hpp"
#include "uavsplit/rl_agent.hpp"

namespace uavsplit {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

oracle::Link olink(const LinkParams& l) { return {l.slot_s, l.bandwidth_hz, l.p_max_w}; }

int count_or(const VerifyOptions& o, int dflt) { return o.instances > 0 ? o.instances : dflt; }

// Effective gains of the default link (about 1e4 per unit Rayleigh power).
std::vector<double> rayleigh_gains(Rng& rng, int n, double scale) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> h(static_cast<std::size_t>(n));
  for (double& x : h) x = scale * std::max(e(rng), 1e-3);
  return h;
}

struct MutationGuard {
  explicit MutationGuard(const VerifyOptions& o)
      : m(o.mutation == "water-level" ? 1.001 : 1.0) {
    if (!o.mutation.empty() && o.mutation != "water-level") {
      throw std::invalid_argument("unknown mutation '" + o.mutation + "'");
    }
  }
  detail::WaterLevelMutation m;
};

// ---- power-opt ----------------------------------------------------------

CheckResult waterfill_oracle_check(const VerifyOptions& o) {
  MutationGuard guard(o);
  const double tol = o.tolerance > 0 ? o.tolerance : 1e-9;
  Rng rng(derive_seed(o.seed, 101));
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count_or(o, 1000);
  double worst_unclipped = 0.0;
  double worst_clipped = 0.0;
  int clipped_cases = 0;
  for (int i = 0; i < n; ++i) {
    // unclipped: choose the water level first so every slot stays active
    LinkParams link{0.1, 2e6, 1e9};
    const auto h = rayleigh_gains(rng, len(rng), 1e4);
    const double floor = 1.0 / *std::min_element(h.begin(), h.end());
    const double nu = floor * (1.5 + 10.0 * u(rng));
    double bits = 0.0;
    for (double g : h) bits += link.slot_s * link.bandwidth_hz * std::log2(nu * g);
    const auto got = optimal_power_single_task(bits, h, link);
    const auto want = oracle::bisection_powers(bits, h, olink(link));
    for (std::size_t t = 0; t < h.size(); ++t) {
      worst_unclipped = std::max(worst_unclipped, rel_err(got.power[t], want[t]));
    }

    // clipped: payload a random fraction of what p_max can carry
    LinkParams cl{0.1, 2e6, 1e-4 * (0.2 + 2.0 * u(rng))};
    const auto hc = rayleigh_gains(rng, len(rng), 1e4);
    double cap = 0.0;
    for (double g : hc) cap += cl.slot_s * cl.bandwidth_hz * std::log2(1.0 + g * cl.p_max_w);
    const double cbits = cap * (0.2 + 0.75 * u(rng));
    const auto gc = optimal_power_single_task(cbits, hc, cl);
    if (!gc.clipped) continue;
    ++clipped_cases;
    const double e_got = schedule_energy(gc.power, cl.slot_s);
    const double e_pg = oracle::projected_gradient_energy(cbits, hc, olink(cl));
    worst_clipped = std::max(worst_clipped, rel_err(e_got, e_pg));
  }
  CheckResult r;
  r.pass = worst_unclipped <= tol && worst_clipped <= 1e-6 && clipped_cases > 0;
  r.detail = fmt("unclipped max rel %.2e (tol %.0e); ", worst_unclipped, tol) +
             fmt("clipped max rel %.2e over %.0f cases (tol 1e-06)", worst_clipped, clipped_cases);
  return r;
}

CheckResult rate_tightness(const VerifyOptions& o) {
  MutationGuard guard(o);
  Rng rng(derive_seed(o.seed, 102));
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count_or(o, 1000);
  double worst = 0.0;
  int unclipped = 0;
  for (int i = 0; i < n; ++i) {
    LinkParams link{0.1, 2e6, 1e-3};
    const auto h = rayleigh_gains(rng, len(rng), 1e4);
    const double bits = 1e3 + 6e4 * u(rng);
    const auto sol = optimal_power_single_task(bits, h, link);
    if (sol.clipped || sol.infeasible) continue;
    ++unclipped;
    worst = std::max(worst, rel_err(oracle::delivered_bits(sol.power, h, olink(link)), bits));
  }
  CheckResult r;
  r.pass = worst <= 1e-9 && unclipped > 0;
  r.detail = fmt("max rel rate gap %.2e over %.0f unclipped solutions", worst, unclipped);
  return r;
}

CheckResult window_monotone_check(const VerifyOptions& o) {
  MutationGuard guard(o);
  Rng rng(derive_seed(o.seed, 103));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count_or(o, 1000);
  double worst = -1e300;
  for (int i = 0; i < n; ++i) {
    LinkParams link{0.1, 2e6, 1e-2 * (0.1 + u(rng))};
    const auto h = rayleigh_gains(rng, 9, 1e4);
    // feasible already on the first slot so every T is feasible
    const double cap1 = link.slot_s * link.bandwidth_hz * std::log2(1.0 + h[0] * link.p_max_w);
    const double bits = cap1 * (0.05 + 0.9 * u(rng));
    double prev = std::numeric_limits<double>::infinity();
    for (int T = 1; T <= 8; ++T) {
      const auto sol = optimal_power_single_task(bits, std::span<const double>(h).first(T), link);
      const double e = schedule_energy(sol.power, link.slot_s);
      if (T > 1) worst = std::max(worst, e - prev);
      prev = e;
    }
  }
  CheckResult r;
  r.pass = worst <= 1e-12;
  r.detail = fmt("max energy increase E(T+1)-E(T) = %.2e J (slack 1e-12)", worst);
  return r;
}

CheckResult water_level_structure(const VerifyOptions& o) {
  MutationGuard guard(o);
  Rng rng(derive_seed(o.seed, 104));
  std::uniform_int_distribution<int> len(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = count_or(o, 1000);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    LinkParams link{0.1, 2e6, 2e-4 * (0.1 + u(rng))};
    const auto h = rayleigh_gains(rng, len(rng), 1e4);
    double cap = 0.0;
    for (double g : h) cap += link.slot_s * link.bandwidth_hz * std::log2(1.0 + g * link.p_max_w);
    const auto sol = optimal_power_single_task(cap * (0.1 + 0.8 * u(rng)), h, link);
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double p = sol.power[t];
      if (p <= 1e-12 * link.p_max_w || p >= link.p_max_w * (1 - 1e-12)) continue;
      lo = std::min(lo, p + 1.0 / h[t]);
      hi = std::max(hi, p + 1.0 / h[t]);
    }
    if (lo <= hi) worst = std::max(worst, rel_err(lo, hi));
  }
  CheckResult r;
  r.pass = worst <= 1e-9;
  r.detail = fmt("max spread of p+1/h on active slots %.2e (tol 1e-09)", worst);
  return r;
}

struct AllocInstance {
  std::vector<QueuedTask> tasks;
  ChannelTrace trace;
  LinkParams link;
};

AllocInstance random_queue(Rng& rng, int n_tasks, int max_horizon) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    AllocInstance inst;
    inst.link = {0.1, 2e6, 1e-5 * (0.5 + 4.0 * u(rng))};
    const int C = 3 + static_cast<int>(u(rng) * (max_horizon - 4));
    int arrive = 0;
    int ready_prev = 0;
    for (int i = 0; i < n_tasks; ++i) {
      if (i > 0) arrive += static_cast<int>(u(rng) * (C / 2 + 1));
      const int comp = static_cast<int>(u(rng) * 3);
      const int ready = std::max(arrive, ready_prev) + comp;
      inst.tasks.push_back({i, 2e3 + 3e4 * u(rng), ready, arrive + C});
      ready_prev = ready;
    }
    if (inst.tasks.back().deadline_slot > max_horizon) continue;
    if (!queue_feasible(inst.tasks, 0)) continue;
    inst.trace.start_slot = 0;
    inst.trace.gains = rayleigh_gains(rng, inst.tasks.back().deadline_slot, 1e4);
    return inst;
  }
}

std::vector<oracle::SplitTask> split_tasks(const std::vector<QueuedTask>& q) {
  std::vector<oracle::SplitTask> s;
  for (const auto& t : q) s.push_back({t.bits, t.ready_slot, t.deadline_slot});
  return s;
}

CheckResult allocation_bruteforce(const VerifyOptions& o) {
  MutationGuard guard(o);
  Rng rng(derive_seed(o.seed, 105));
  const int n2 = count_or(o, 500);
  const int n3 = std::max(1, n2 / 5);
  int mismatches = 0;
  int same_split = 0;
  int total = 0;
  double worst = 0.0;
  for (int i = 0; i < n2 + n3; ++i) {
    const AllocInstance inst = random_queue(rng, i < n2 ? 2 : 3, 12);
    const auto alloc = allocate_times(inst.tasks, inst.trace, 0, inst.link);
    const auto st = split_tasks(inst.tasks);
    const auto best = oracle::brute_force_split(st, inst.trace.gains, 0, olink(inst.link));
    ++total;
    if (!alloc.feasible) {
      ++mismatches;
      continue;
    }
    std::vector<int> ends;
    for (const auto& w : alloc.windows) ends.push_back(w.end());
    if (ends == best.ends) {
      ++same_split;
      continue;
    }
    const auto mine = oracle::split_energy(st, inst.trace.gains, 0, olink(inst.link), ends);
    const double gap = rel_err(mine.energy_j, best.energy_j);
    worst = std::max(worst, gap);
    if (mine.infeasible_windows != best.infeasible_windows || gap > 1e-9) ++mismatches;
  }
  CheckResult r;
  r.pass = mismatches == 0;
  r.detail = fmt("%.0f instances, %.0f identical splits, ", total, same_split) +
             fmt("%.0f non-optimal (tie gap max %.1e)", mismatches, worst);
  return r;
}

CheckResult allocation_local_optimality(const VerifyOptions& o) {
  MutationGuard guard(o);
  Rng rng(derive_seed(o.seed, 106));
  const int n = count_or(o, 300);
  int violations = 0;
  int moves = 0;
  for (int i = 0; i < n; ++i) {
    const AllocInstance inst = random_queue(rng, 2 + i % 2, 14);
    const auto alloc = allocate_times(inst.tasks, inst.trace, 0, inst.link);
    if (!alloc.feasible) continue;
    const auto base = allocation_cost(inst.tasks, alloc, inst.trace, inst.link);
    for (std::size_t j = 0; j + 1 < alloc.windows.size(); ++j) {
      for (int d : {-1, 1}) {
        TimeAllocation moved = alloc;
        moved.windows[j].len += d;
        const int next_start = std::max(moved.windows[j].end(), inst.tasks[j + 1].ready_slot);
        moved.windows[j + 1].len = alloc.windows[j + 1].end() - next_start;
        moved.windows[j + 1].start = next_start;
        if (!allocation_valid(inst.tasks, moved, 0)) continue;
        ++moves;
        if (allocation_cost(inst.tasks, moved, inst.trace, inst.link) < base) ++violations;
      }
    }
  }
  CheckResult r;
  r.pass = violations == 0;
  r.detail = fmt("%.0f single-slot moves tried, %.0f improved on the allocation", moves, violations);
  return r;
}

CheckResult residual_symmetry(const VerifyOptions&) {
  LinkParams link{0.1, 2e6, 1.0};
  ChannelTrace flat{0, std::vector<double>(10, 1e4)};
  QueuedTask a{0, 2e4, 0, 5};
  QueuedTask b{1, 2e4, 5, 10};
  const auto r1 = time_ratio_residual(a, {0, 0, 5}, b, {1, 5, 5}, flat, link);
  bool ok = std::abs(r1.lhs - 1.0) < 1e-12 && std::abs(r1.rhs - 1.0) < 1e-12;
  ChannelTrace tr{0, {1e4, 3e4, 2e3, 5e4, 8e3, 1e4, 6e4, 2e4}};
  QueuedTask m{0, 1e4, 0, 8};
  QueuedTask n{1, 3e4, 0, 8};
  const Window wm{0, 0, 3};
  const Window wn{1, 3, 5};
  const auto fwd = time_ratio_residual(m, wm, n, wn, tr, link);
  const auto rev = time_ratio_residual(n, wn, m, wm, tr, link);
  ok = ok && rel_err(fwd.lhs, 1.0 / rev.lhs) < 1e-12 && rel_err(fwd.rhs, 1.0 / rev.rhs) < 1e-12;
  // single task: the whole window, no exchanges
  const auto single = allocate_times(std::vector<QueuedTask>{m}, tr, 0, link,
                                     {AllocationRule::kPairwiseResidual, 0});
  ok = ok && single.windows.size() == 1 && single.windows[0].len == 8;
  // identical tasks on a flat channel split evenly under both rules
  const std::vector<QueuedTask> twins{{0, 2e4, 0, 10}, {1, 2e4, 0, 10}};
  for (auto rule : {AllocationRule::kExact, AllocationRule::kPairwiseResidual}) {
    const auto a2 = allocate_times(twins, flat, 0, link, {rule, 0});
    ok = ok && a2.feasible && a2.windows[0].len == 5 && a2.windows[1].len == 5;
  }
  CheckResult r;
  r.pass = ok;
  r.detail = "flat symmetric pair gives f_L = f_R = 1; swapping inverts both ratios; twin split 5/5";
  return r;
}

CheckResult saa_count_fixtures(const VerifyOptions&) {
  const double l = std::log(1.0 / 0.05);
  const int printed = static_cast<int>(std::ceil((10.0 + l * std::sqrt(20.0 * l + l * l)) / 0.1 - 1e-9));
  const int corrected = static_cast<int>(std::ceil((10.0 + l + std::sqrt(20.0 * l + l * l)) / 0.1 - 1e-9));
  bool ok = saa_sample_count(0.5, std::exp(-1.0), 1) == 2;
  ok = ok && saa_sample_count(0.1, 0.05, 11) == printed;
  ok = ok && saa_sample_count(0.1, 0.05, 11, SaaBound::kCorrected) == corrected;
  int prev = 0;
  for (double eps : {0.5, 0.3, 0.2, 0.1, 0.05, 0.01}) {
    const int k = saa_sample_count(eps, 0.05, 11);
    ok = ok && k > prev;
    prev = k;
  }
  CheckResult r;
  r.pass = ok;
  r.detail = "K*(0.5, 1/e, 1) = 2; K*(0.1, 0.05, 11) = " + std::to_string(printed) +
             " printed, " + std::to_string(corrected) + " corrected; increasing as eps falls";
  return r;
}

CheckResult consensus_bounds(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 107));
  std::uniform_real_distribution<double> u(0.0, 2.0);
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    std::vector<PowerSchedule> copies(1 + i % 7);
    for (auto& c : copies) {
      c.start_slot = 3;
      c.power.resize(6);
      for (double& p : c.power) p = u(rng);
    }
    const auto mean = restore_power(copies, 1e9);
    const auto capped = restore_power(copies, 1.0);
    for (std::size_t t = 0; t < 6; ++t) {
      double lo = 1e300;
      double hi = -1e300;
      for (const auto& c : copies) {
        lo = std::min(lo, c.power[t]);
        hi = std::max(hi, c.power[t]);
      }
      ok = ok && mean.power[t] >= lo - 1e-15 && mean.power[t] <= hi + 1e-15;
      ok = ok && capped.power[t] <= 1.0 && capped.power[t] == std::min(mean.power[t], 1.0);
    }
  }
  CheckResult r;
  r.pass = ok;
  r.detail = "restored power within per-slot [min, max] of copies; clamp at p_max";
  return r;
}

CheckResult saa_chance_constraint(const VerifyOptions& o) {
  SystemParams p = o.base.system;
  p.raw_bits = 20000;
  const LinkParams link = LinkParams::from(p);
  const RayleighChannel model(1.0);
  const std::vector<QueuedTask> queue{{0, 20000, 0, 10}, {1, 20000, 3, 13}};
  SaaConfig saa = o.base.saa;
  saa.epsilon = 0.1;
  saa.k_samples = 0;
  saa.n_vars = 0;
  const int horizon = queue.back().deadline_slot;
  const int k = resolve_sample_count(saa, horizon);
  const auto plan = solve_p1b(queue, 0, saa, model, derive_seed(o.seed, 108), p);
  const int trials = count_or(o, 10000);
  int violations = 0;
  for (int i = 0; i < trials; ++i) {
    const auto tr = sample_trace(model, p, 0, horizon, derive_seed(o.seed, 109), i);
    const auto met = fifo_deadlines_met(queue, plan.schedule, tr, link);
    if (!std::all_of(met.begin(), met.end(), [](bool b) { return b; })) ++violations;
  }
  const double freq = static_cast<double>(violations) / trials;
  CheckResult r;
  r.pass = freq <= saa.epsilon + 0.05 && !plan.chance_infeasible;
  r.detail = fmt("K = %.0f, violation frequency %.4f over %.0f fresh traces (limit 0.15)", k, freq,
                 trials);
  return r;
}

// ---- rl-agent -----------------------------------------------------------

std::vector<Transition> toy_batch(Rng& rng, int n, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Transition> b(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& t = b[static_cast<std::size_t>(i)];
    t.s.resize(static_cast<std::size_t>(dim));
    t.s_next.resize(static_cast<std::size_t>(dim));
    for (double& x : t.s) x = u(rng);
    for (double& x : t.s_next) x = u(rng);
    t.action = i % 2;
    t.reward = u(rng);
    t.terminal = i % 3 == 2;
  }
  return b;
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& b) {
  std::vector<const Transition*> p;
  for (const auto& t : b) p.push_back(&t);
  return p;
}

CheckResult ddqn_gradient(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 110));
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    QNetwork online(5, 32, 2);
    QNetwork target(5, 32, 2);
    online.xavier_init(rng);
    target.xavier_init(rng);
    // random biases so no pre-activation sits exactly on the ReLU kink
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& b : online.b1) b = u(rng);
    const auto batch = toy_batch(rng, 3, 5);
    const auto bp = ptrs(batch);
    std::vector<double> grad;
    batch_loss(online, target, bp, 0.9, &grad);
    const auto theta = online.flatten();
    const auto numeric = oracle::finite_difference(
        [&](std::span<const double> x) {
          QNetwork net = online;
          net.unflatten(x);
          return batch_loss(net, target, bp, 0.9);
        },
        theta, 1e-5);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double scale = std::max({std::abs(grad[i]), std::abs(numeric[i]), 1e-6});
      worst = std::max(worst, std::abs(grad[i] - numeric[i]) / scale);
    }
  }
  CheckResult r;
  r.pass = worst <= 1e-4;
  r.detail = fmt("max relative gradient error %.2e (tol 1e-04, h = 1e-5)", worst);
  return r;
}

CheckResult ddqn_double_q(const VerifyOptions&) {
  QNetwork online(1, 1, 2);
  QNetwork target(1, 1, 2);
  online.b2 = {5.0, 0.0};
  target.b2 = {1.0, 9.0};
  const std::vector<double> s{0.0};
  const double y = ddqn_target(0.0, s, online, target, 1.0, false);
  const double y_single = dqn_target(0.0, s, target, 1.0, false);
  CheckResult r;
  r.pass = y == 1.0 && y_single == 9.0 && y != y_single;
  r.detail = fmt("double-Q target %.0f, single-network max %.0f", y, y_single);
  return r;
}

CheckResult ddqn_loss_decreases(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, 111));
  AgentConfig cfg;
  cfg.learn_rate = 1e-2;
  QNetwork online(cfg.state_dim(), cfg.hidden, 2);
  online.xavier_init(rng);
  QNetwork target = online;
  const auto batch = toy_batch(rng, cfg.minibatch, cfg.state_dim());
  const auto bp = ptrs(batch);
  const double first = train_step(online, target, bp, cfg);
  double last = first;
  for (int i = 1; i <= 200; ++i) last = train_step(online, target, bp, cfg);
  CheckResult r;
  r.pass = last < first;
  r.detail = fmt("loss step 0 = %.4g, step 200 = %.4g", first, last);
  return r;
}

CheckResult replay_and_sync(const VerifyOptions& o) {
  ReplayBuffer buf(1000);
  for (int i = 0; i < 1500; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  bool ok = buf.size() == 1000 && buf.at(0).reward == 500.0 && buf.at(999).reward == 1499.0;
  Rng rng(derive_seed(o.seed, 112));
  const auto s = buf.sample(64, rng);
  std::vector<double> seen;
  for (const auto* t : s) seen.push_back(t->reward);
  std::sort(seen.begin(), seen.end());
  ok = ok && std::adjacent_find(seen.begin(), seen.end()) == seen.end() && seen.front() >= 500.0;

  AgentConfig cfg;
  Rng init(1);
  DdqnAgent agent(cfg, init);
  const auto batch = toy_batch(rng, 64, cfg.state_dim());
  for (const auto& t : batch) agent.remember(t);
  QNetwork before = agent.target();
  for (int i = 0; i < 19; ++i) agent.learn(rng);
  ok = ok && agent.target() == before && agent.syncs() == 0;
  agent.learn(rng);
  ok = ok && agent.target() == agent.online() && agent.syncs() == 1 && agent.steps_since_sync() == 0;
  CheckResult r;
  r.pass = ok;
  r.detail = "capacity 1000 keeps the newest; minibatch without replacement; target moves only at sync";
  return r;
}

// ---- system model and simulator ----------------------------------------

CheckResult system_identities(const VerifyOptions& o) {
  SystemParams p;
  Rng rng(derive_seed(o.seed, 113));
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double worst = 0.0;
  bool mono = true;
  for (int i = 0; i < 200; ++i) {
    const double f = p.f_max_hz * u(rng);
    const double e = compute_energy(f, p);
    worst = std::max(worst, rel_err(e, p.chip_k * f * f * f * compute_time(f, p)));
    const double h = 1e4 * u(rng);
    const double p1 = u(rng);
    mono = mono && achievable_rate(p1, h, p.bandwidth_hz) < achievable_rate(p1 * 1.01, h, p.bandwidth_hz);
  }
  const bool payload_ok = (task_payload(Mode::kCompute, p) < task_payload(Mode::kDirect, p)) ==
                          (static_cast<double>(p.feat_h) * p.feat_w * p.quant_bits < p.raw_bits);
  CheckResult r;
  r.pass = worst <= 1e-12 && mono && payload_ok;
  r.detail = fmt("E = k f^3 t max rel %.1e; rate increasing in p", worst);
  return r;
}

CheckResult trace_invariants(const VerifyOptions& o) {
  SimConfig cfg = o.base;
  cfg.horizon_slots = o.horizon_slots;
  Rng rng(derive_seed(o.seed, 114));
  QNetwork random_net(cfg.agent.state_dim(), cfg.agent.hidden, 2);
  random_net.xavier_init(rng);
  const QNetwork* net = o.net != nullptr ? o.net : &random_net;
  int slots = 0;
  int episodes = 0;
  std::vector<std::string> bad;
  for (Policy pol : {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy}) {
    cfg.policy = pol;
    for (int e = 0; e < o.episodes; ++e) {
      EpisodeTrace tr;
      run_episode(cfg, net, derive_seed(o.seed, 1000 + e), &tr);
      slots += static_cast<int>(tr.slots.size());
      ++episodes;
      for (auto& v : trace_violations(cfg, tr)) {
        if (bad.size() < 5) bad.push_back(std::string(policy_name(pol)) + ": " + v);
      }
    }
  }
  CheckResult r;
  r.pass = bad.empty();
  r.detail = fmt("%.0f episodes, %.0f slots", episodes, slots);
  for (const auto& b : bad) r.detail += "; " + b;
  return r;
}

CheckResult determinism(const VerifyOptions& o) {
  SimConfig cfg = o.base;
  cfg.horizon_slots = std::min(o.horizon_slots, 200);
  Rng rng(derive_seed(o.seed, 115));
  QNetwork net(cfg.agent.state_dim(), cfg.agent.hidden, 2);
  net.xavier_init(rng);
  bool ok = true;
  for (Policy pol : {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy}) {
    cfg.policy = pol;
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      EpisodeTrace tr;
      run_episode(cfg, &net, o.seed, &tr);
      std::ostringstream os;
      write_trace_csv(os, tr);
      write_task_csv(os, tr);
      if (rep == 0) {
        first = os.str();
      } else {
        ok = ok && os.str() == first;
      }
    }
  }
  CheckResult r;
  r.pass = ok;
  r.detail = "repeated episodes with one seed give byte-identical trace CSVs";
  return r;
}

}  // namespace

std::vector<std::string> trace_violations(const SimConfig& cfg, const EpisodeTrace& trace) {
  const SystemParams& p = cfg.system;
  std::vector<std::string> v;
  auto add = [&](const std::string& s) {
    if (v.size() < 20) v.push_back(s);
  };
  if (static_cast<int>(trace.slots.size()) != cfg.horizon_slots) add("trace length != horizon");
  double prev = p.batt_init_j;
  double slot_bits_total = 0.0;
  for (const auto& r : trace.slots) {
    const std::string at = "slot " + std::to_string(r.slot) + ": ";
    if (r.battery_j < 0 || r.battery_j > p.batt_cap_j) add(at + "battery out of [0, E_max]");
    const double raw = prev + r.harvest_j - r.e_trans_j - r.e_comp_j;
    const double expect = std::min(raw, p.batt_cap_j);
    if (std::abs(expect - r.battery_j) > 1e-12) add(at + "battery delta != harvest - spend");
    if (r.power_w < 0 || r.power_w > p.p_max_w) add(at + "power outside [0, p_max]");
    if (std::abs(r.e_trans_j - p.slot_s * r.power_w) > 1e-18) add(at + "transmit energy != tau p");
    if (r.bits > 0) {
      if (r.head_task < 0 || r.head_task >= static_cast<int>(trace.tasks.size())) {
        add(at + "bits without a head task");
      } else if (trace.tasks[r.head_task].ready_slot < 0 ||
                 trace.tasks[r.head_task].ready_slot > r.slot) {
        add(at + "head task transmitting before its data exists");
      }
    }
    slot_bits_total += r.bits;
    prev = r.battery_j;
  }
  double task_bits_total = 0.0;
  for (const auto& k : trace.tasks) {
    const std::string at = "task " + std::to_string(k.id) + ": ";
    const int comp = k.mode == Mode::kCompute ? compute_slots(k.comp_speed_hz, p) : 0;
    if (k.first_tx_slot >= 0) {
      if (k.first_tx_slot < k.arrive_slot + comp) add(at + "transmitted before arrival + compute");
      if (k.ready_slot < 0 || k.first_tx_slot < k.ready_slot) add(at + "transmitted before ready");
      if (k.finish_slot >= k.deadline_slot) add(at + "transmitted after its deadline");
    }
    if (k.ready_slot >= 0 && k.ready_slot < k.arrive_slot + comp) add(at + "ready before compute finished");
    if (k.met && k.delivered_bits < k.payload_bits * (1 - 1e-9)) add(at + "met without full payload");
    if (!k.met && k.delivered_bits >= k.payload_bits * (1 - 1e-9)) add(at + "full payload but missed");
    if ((k.mode == Mode::kCompute) != (k.comp_speed_hz > 0)) add(at + "speed/mode mismatch");
    task_bits_total += k.delivered_bits;
  }
  if (std::abs(task_bits_total - slot_bits_total) > 1e-6 * std::max(1.0, slot_bits_total)) {
    add("delivered bits per task do not sum to slot bits");
  }
  return v;
}

const std::vector<Check>& verify_checks() {
  static const std::vector<Check> checks = {
      {"waterfill-oracle", "closed form vs bisection (unclipped) and projected gradient (clipped)",
       waterfill_oracle_check},
      {"rate-tightness", "unclipped schedules deliver exactly the payload", rate_tightness},
      {"energy-monotone-in-window", "optimal energy non-increasing in window length T = 1..8",
       window_monotone_check},
      {"water-level-structure", "p_t + 1/h_t constant on active slots", water_level_structure},
      {"allocation-bruteforce", "exact allocation matches exhaustive split enumeration",
       allocation_bruteforce},
      {"allocation-local-optimality", "no single-slot boundary move lowers the energy",
       allocation_local_optimality},
      {"time-ratio-symmetry", "time-ratio residual symmetric cases and twin splits",
       residual_symmetry},
      {"saa-sample-count", "sample-count fixtures and monotonicity", saa_count_fixtures},
      {"consensus-bounds", "restored power within copies, clamped at p_max", consensus_bounds},
      {"saa-chance-constraint", "fresh-trace deadline violation within eps + 0.05",
       saa_chance_constraint},
      {"ddqn-gradient", "analytic gradient vs central differences", ddqn_gradient},
      {"ddqn-double-q", "double-Q target differs from single-network max", ddqn_double_q},
      {"ddqn-loss-decreases", "200 SGD steps on a fixed batch lower the loss", ddqn_loss_decreases},
      {"replay-and-sync", "replay capacity, sampling and target sync cadence", replay_and_sync},
      {"system-identities", "compute energy/time identity, rate monotonicity, payload rule",
       system_identities},
      {"trace-invariants", "battery, causality, power cap and delivery accounting per slot",
       trace_invariants},
      {"determinism", "identical seed gives identical traces", determinism},
  };
  return checks;
}

const Check& find_check(const std::string& name) {
  for (const auto& c : verify_checks()) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("no check named '" + name + "'");
}

int run_verify(const VerifyOptions& opts, std::ostream& os, const std::string& filter) {
  int failed = 0;
  int ran = 0;
  for (const auto& c : verify_checks()) {
    if (!filter.empty() && c.name.find(filter) == std::string::npos) continue;
    ++ran;
    const auto t0 = Clock::now();
    CheckResult r;
    try {
      r = c.run(opts);
    } catch (const std::exception& ex) {
      r.pass = false;
      r.detail = std::string("threw: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    failed += r.pass ? 0 : 1;
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %-28s %6.2fs  ", r.pass ? "PASS" : "FAIL", c.name.c_str(),
                  r.seconds);
    os << head << r.detail << '\n';
  }
  os << (ran - failed) << '/' << ran << " checks passed\n";
  return failed;
}

}  // namespace uavsplit
