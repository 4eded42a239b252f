#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "uavsplit/simulator.hpp"
#include "uavsplit/verify.hpp"

using namespace uavsplit;
using doctest::Approx;

namespace {

// Q network that always prefers one action (0 = DT, 1 = CT).
QNetwork fixed_net(const SimConfig& cfg, int action) {
  QNetwork n(cfg.agent.state_dim(), cfg.agent.hidden, 2);
  n.b2 = {action == 0 ? 1.0 : 0.0, action == 1 ? 1.0 : 0.0};
  return n;
}

SimConfig small_cfg(Policy p) {
  SimConfig c;
  c.policy = p;
  c.horizon_slots = 200;
  c.episodes = 4;
  c.train_episodes = 2;
  c.saa.k_samples = 16;
  return c;
}

// One task arriving at slot 0 on a constant channel.
SimConfig lone_task_cfg(Policy p) {
  SimConfig c = small_cfg(p);
  c.channel = "constant";
  c.system.arrival_prob = 1.0;
  c.horizon_slots = c.system.deadline_slots;
  return c;
}

}  // namespace

TEST_CASE("no arrivals") {
  SimConfig c = small_cfg(Policy::kOneTask);
  c.system.arrival_prob = 0.0;
  EpisodeTrace tr;
  const Metrics m = run_episode(c, nullptr, 1, &tr);
  CHECK(m.tasks == 0);
  CHECK(m.success_prob == 1.0);
  CHECK(m.energy_trans_j == 0.0);
  CHECK(tr.slots.size() == 200);
  CHECK(tr.tasks.empty());
}

TEST_CASE("a lone direct task on a flat channel is delivered") {
  for (Policy p : {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy}) {
    SimConfig c = lone_task_cfg(p);
    const QNetwork net = fixed_net(c, 0);
    EpisodeTrace tr;
    const Metrics m = run_episode(c, &net, 3, &tr);
    REQUIRE(tr.tasks.size() == 1);
    CHECK(m.tasks == 1);
    CHECK(tr.tasks[0].mode == Mode::kDirect);
    CHECK(tr.tasks[0].met);
    CHECK(tr.tasks[0].delivered_bits >= c.system.raw_bits * (1 - 1e-9));
    CHECK(trace_violations(c, tr).empty());
  }
}

TEST_CASE("OPETRL on a deterministic channel follows the subproblem plan") {
  SimConfig c = lone_task_cfg(Policy::kOpetrl);
  const QNetwork net = fixed_net(c, 0);
  EpisodeTrace tr;
  run_episode(c, &net, 3, &tr);
  const double h = effective_gain(1.0, c.system);
  const ChannelTrace flat{0, std::vector<double>(static_cast<std::size_t>(c.horizon_slots), h)};
  const std::vector<QueuedTask> q{{0, c.system.raw_bits, 0, c.system.deadline_slots}};
  const auto sub = solve_subproblem(flat, q, 0, LinkParams::from(c.system));
  for (const auto& r : tr.slots) CHECK(r.power_w == Approx(sub.schedule.at(r.slot)).epsilon(1e-9));
}

TEST_CASE("one-task matches OPETRL for a lone task") {
  SimConfig a = lone_task_cfg(Policy::kOpetrl);
  SimConfig b = lone_task_cfg(Policy::kOneTask);
  const QNetwork net = fixed_net(a, 0);
  EpisodeTrace ta;
  EpisodeTrace tb;
  run_episode(a, &net, 9, &ta);
  run_episode(b, nullptr, 9, &tb);
  REQUIRE(ta.slots.size() == tb.slots.size());
  for (std::size_t i = 0; i < ta.slots.size(); ++i) {
    CHECK(ta.slots[i].power_w == Approx(tb.slots[i].power_w).epsilon(1e-12));
  }
}

TEST_CASE("CT tasks pay compute energy before transmitting") {
  SimConfig c = lone_task_cfg(Policy::kOpetrl);
  c.horizon_slots = 60;
  c.system.arrival_prob = 0.2;
  c.channel = "rayleigh";
  const QNetwork net = fixed_net(c, 1);
  EpisodeTrace tr;
  run_episode(c, &net, 17, &tr);
  REQUIRE_FALSE(tr.tasks.empty());
  double comp_total = 0.0;
  for (const auto& r : tr.slots) comp_total += r.e_comp_j;
  double charged = 0.0;
  for (const auto& k : tr.tasks) {
    CHECK(k.mode == Mode::kCompute);
    CHECK(k.comp_speed_hz > 0);
    CHECK(k.payload_bits == task_payload(Mode::kCompute, c.system));
    if (k.first_tx_slot >= 0) {
      // the whole compute bill lands before the first transmitted bit
      double before = 0.0;
      for (const auto& r : tr.slots) {
        if (r.slot >= k.arrive_slot && r.slot < k.first_tx_slot) before += r.e_comp_j;
      }
      CHECK(before >= k.comp_energy_j * (1 - 1e-12));
      CHECK(k.comp_energy_j == Approx(compute_energy(k.comp_speed_hz, c.system)).epsilon(1e-12));
    }
    charged += k.comp_energy_j;
  }
  CHECK(comp_total == Approx(charged).epsilon(1e-12));
}

TEST_CASE("one-task: back-to-back arrivals starve the second task") {
  SimConfig c = small_cfg(Policy::kOneTask);
  c.channel = "constant";
  c.system.arrival_prob = 1.0;
  c.horizon_slots = c.system.deadline_slots + 1;  // arrivals at slots 0 and 1
  // one payload needs about 4.7 slots at p_max, so both fit in 11 slots only
  // if the first is not spread across its whole window
  c.system.p_max_w = 1.5e-6;
  EpisodeTrace tr;
  run_episode(c, nullptr, 1, &tr);
  REQUIRE(tr.tasks.size() == 2);
  CHECK(tr.tasks[0].arrive_slot == 0);
  CHECK(tr.tasks[1].arrive_slot == 1);
  CHECK(tr.tasks[0].met);
  CHECK_FALSE(tr.tasks[1].met);

  // OPETRL plans both windows jointly and meets both
  SimConfig o = c;
  o.policy = Policy::kOpetrl;
  const QNetwork net = fixed_net(o, 0);
  EpisodeTrace to;
  run_episode(o, &net, 1, &to);
  REQUIRE(to.tasks.size() == 2);
  CHECK(to.tasks[0].met);
  CHECK(to.tasks[1].met);
}

TEST_CASE("one-task mode rule") {
  SimConfig c = small_cfg(Policy::kOneTask);
  c.system.raw_bits = 30000;  // above the 24576-bit feature map
  EpisodeTrace tr;
  run_episode(c, nullptr, 2, &tr);
  REQUIRE_FALSE(tr.tasks.empty());
  for (const auto& k : tr.tasks) CHECK(k.mode == Mode::kCompute);
  c.system.raw_bits = 20000;
  run_episode(c, nullptr, 2, &tr);
  for (const auto& k : tr.tasks) CHECK(k.mode == Mode::kDirect);
}

TEST_CASE("greedy rules") {
  SystemParams p;
  CHECK(greedy_power(2e4, 1000000000, 1e4, p) < 1e-12);
  CHECK(greedy_power(2e4, 1000000000, 1e4, p) > 0.0);
  const double d = 3000;
  CHECK(greedy_power(d, 1, 1e4, p) ==
        Approx(std::min((std::exp2(d / (p.slot_s * p.bandwidth_hz)) - 1) / 1e4, p.p_max_w)));
  CHECK(greedy_power(1e6, 1, 1e4, p) == p.p_max_w);
  CHECK(greedy_power(0.0, 3, 1e4, p) == 0.0);

  p.raw_bits = 60000;
  CHECK(greedy_mode(1e2, p) == Mode::kCompute);
  CHECK(greedy_mode(1e12, p) == Mode::kDirect);
}

TEST_CASE("compute speed comes from the grid") {
  SystemParams p;
  const RayleighChannel ray(1.0);
  for (int free_slot : {0, 2, 5}) {
    const double f = choose_compute_speed(0, free_slot, p, ray);
    bool on_grid = false;
    for (int div : {8, 4, 2, 1}) on_grid = on_grid || f == p.f_max_hz / div;
    CHECK(on_grid);
  }
  CHECK(even_spread_energy(1e4, 0, 1e4, p) == std::numeric_limits<double>::infinity());
  CHECK(even_spread_energy(1e4, 2, 1e4, p) ==
        Approx(2 * p.slot_s * (std::exp2(1e4 / (2 * p.slot_s * p.bandwidth_hz)) - 1) / 1e4));
}

TEST_CASE("aggregate") {
  Metrics a;
  a.success_prob = 0.4;
  a.total_energy_j = 2.0;
  Summary s = aggregate({a});
  CHECK(s.success_mean == 0.4);
  CHECK(s.success_se == 0.0);
  CHECK(s.episodes == 1);
  s = aggregate({a, a, a});
  CHECK(s.success_se == 0.0);
  CHECK(s.energy_se == 0.0);
  Metrics b = a;
  b.success_prob = 0.6;
  s = aggregate({a, b});
  CHECK(s.success_mean == Approx(0.5));
  CHECK(s.success_se == Approx(0.1));
  CHECK_THROWS(aggregate({}));
}

TEST_CASE("traces satisfy the invariants under every policy") {
  for (Policy p : {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy}) {
    SimConfig c = small_cfg(p);
    Rng rng(4);
    QNetwork net(c.agent.state_dim(), c.agent.hidden, 2);
    net.xavier_init(rng);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      EpisodeTrace tr;
      const Metrics m = run_episode(c, &net, seed, &tr);
      CHECK(trace_violations(c, tr).empty());
      CHECK(tr.slots.size() == static_cast<std::size_t>(c.horizon_slots));
      CHECK(m.success_prob >= 0.0);
      CHECK(m.success_prob <= 1.0);
      CHECK(m.total_energy_j >= 0.0);
      CHECK(m.total_energy_j == Approx(m.energy_trans_j + m.energy_comp_j));
      for (const auto& r : tr.slots) {
        CHECK(r.battery_j >= 0.0);
        CHECK(r.battery_j <= c.system.batt_cap_j);
      }
    }
  }
}

TEST_CASE("checker catches a broken trace") {
  SimConfig c = small_cfg(Policy::kGreedy);
  EpisodeTrace tr;
  run_episode(c, nullptr, 5, &tr);
  REQUIRE(trace_violations(c, tr).empty());
  EpisodeTrace bad = tr;
  bad.slots[10].battery_j += 1e-9;
  CHECK_FALSE(trace_violations(c, bad).empty());
  bad = tr;
  bad.slots[3].power_w = 2 * c.system.p_max_w;
  CHECK_FALSE(trace_violations(c, bad).empty());
  bad = tr;
  for (auto& k : bad.tasks) {
    if (k.first_tx_slot >= 0) {
      k.first_tx_slot = k.arrive_slot - 1;
      break;
    }
  }
  CHECK_FALSE(trace_violations(c, bad).empty());
}

TEST_CASE("determinism") {
  for (Policy p : {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy}) {
    SimConfig c = small_cfg(p);
    const QNetwork net = fixed_net(c, 0);
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      EpisodeTrace tr;
      run_episode(c, &net, 42, &tr);
      std::ostringstream os;
      write_trace_csv(os, tr);
      write_task_csv(os, tr);
      if (rep == 0) first = os.str();
      else CHECK(os.str() == first);
    }
  }
  SimConfig c = small_cfg(Policy::kOneTask);
  const auto one = evaluate(c, nullptr, 1);
  const auto four = evaluate(c, nullptr, 4);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].success_prob == four[i].success_prob);
    CHECK(one[i].total_energy_j == four[i].total_energy_j);
  }
}

TEST_CASE("training pushes one transition per task") {
  SimConfig c = small_cfg(Policy::kOpetrl);
  c.horizon_slots = 100;
  Rng init(1);
  Rng rng(2);
  DdqnAgent agent(c.agent, init);
  Learner l;
  l.agent = &agent;
  l.epsilon = 1.0;
  l.rng = &rng;
  std::vector<double> losses;
  l.losses = &losses;
  EpisodeTrace tr;
  const Metrics m = run_episode(c, nullptr, 11, &tr, &l);
  CHECK(l.transitions == m.tasks);
  CHECK(agent.buffer().size() == static_cast<std::size_t>(m.tasks));
  CHECK(agent.buffer().at(agent.buffer().size() - 1).terminal);
  CHECK(losses.size() == static_cast<std::size_t>(std::max(0, m.tasks - c.agent.minibatch + 1)));

  const TrainResult r = train_agent(c, 5);
  CHECK(r.curve.size() == 2);
  CHECK(r.train_steps == static_cast<int>(r.losses.size()));
  const TrainResult again = train_agent(c, 5);
  CHECK(again.online == r.online);
}

TEST_CASE("configuration errors") {
  SimConfig c = small_cfg(Policy::kOpetrl);
  CHECK_THROWS_AS(run_episode(c, nullptr, 1), std::invalid_argument);
  c.horizon_slots = c.system.deadline_slots - 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_cfg(Policy::kGreedy);
  c.episodes = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_policy("OPETRL") == Policy::kOpetrl);
  CHECK(parse_policy("one-task") == Policy::kOneTask);
  CHECK(parse_policy("onetask") == Policy::kOneTask);
  CHECK(parse_policy("greedy") == Policy::kGreedy);
  CHECK_THROWS(parse_policy("random"));
}

TEST_CASE("CSV schemas") {
  std::ostringstream os;
  write_summary_header(os);
  CHECK(os.str() ==
        "policy,sweep_var,sweep_value,success_prob_mean,success_prob_se,energy_J_mean,energy_J_se,"
        "episodes,seed\n");
  Summary s;
  s.policy = "greedy";
  s.sweep_var = "p_max";
  s.sweep_value = 1e-5;
  s.success_mean = 0.5;
  s.episodes = 2;
  s.seed = 7;
  std::ostringstream row;
  write_summary_row(row, s);
  CHECK(row.str() == "greedy,p_max,1.0000000000000001e-05,0.5,0,0,0,2,7\n");
}
