#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "uavsplit/oracles.hpp"
#include "uavsplit/rl_agent.hpp"

using namespace uavsplit;
using doctest::Approx;

namespace {

std::vector<Transition> random_batch(Rng& rng, int n, int dim) {
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
    t.terminal = i % 4 == 3;
  }
  return b;
}

std::vector<const Transition*> view(const std::vector<Transition>& b) {
  std::vector<const Transition*> v;
  for (const auto& t : b) v.push_back(&t);
  return v;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("forward pass") {
  QNetwork zero(3, 4, 2);
  zero.b2 = {0.25, -1.5};
  const std::vector<double> s{1.0, -2.0, 3.0};
  CHECK(zero.forward(s) == std::vector<double>{0.25, -1.5});

  // 1 input, 2 hidden, 2 outputs, set by hand
  QNetwork toy(1, 2, 2);
  toy.w1 = {2.0, -1.0};
  toy.b1 = {0.5, 0.0};
  toy.w2 = {1.0, 3.0, -2.0, 0.5};
  toy.b2 = {0.1, 0.2};
  // s = 1: hidden = relu(2.5, -1) = (2.5, 0)
  auto q = toy.forward(std::vector<double>{1.0});
  CHECK(q[0] == Approx(2.6));
  CHECK(q[1] == Approx(-4.8));
  // s = -1: hidden = relu(-1.5, 1) = (0, 1)
  q = toy.forward(std::vector<double>{-1.0});
  CHECK(q[0] == Approx(3.1));
  CHECK(q[1] == Approx(0.7));

  // every hidden pre-activation negative
  QNetwork dead(1, 3, 2);
  dead.w1 = {1.0, 2.0, 3.0};
  dead.b2 = {4.0, 5.0};
  dead.w2 = {1, 1, 1, 1, 1, 1};
  CHECK(dead.forward(std::vector<double>{-1.0}) == std::vector<double>{4.0, 5.0});

  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  CHECK_THROWS_AS(zero.forward(bad), std::domain_error);
}

TEST_CASE("Xavier initialisation") {
  QNetwork net(17, 32, 2);
  Rng rng(1);
  net.xavier_init(rng);
  const double l1 = std::sqrt(6.0 / (17 + 32));
  const double l2 = std::sqrt(6.0 / (32 + 2));
  for (double w : net.w1) CHECK(std::abs(w) <= l1);
  for (double w : net.w2) CHECK(std::abs(w) <= l2);
  for (double b : net.b1) CHECK(b == 0.0);
  CHECK(net.param_count() == 17 * 32 + 32 + 32 * 2 + 2);
}

TEST_CASE("action selection") {
  QNetwork net(1, 1, 2);
  const std::vector<double> s{0.0};
  Rng rng(2);
  net.b2 = {3.0, 1.0};
  CHECK(select_action(net, s, 0.0, rng) == 0);
  net.b2 = {1.0, 3.0};
  CHECK(select_action(net, s, 0.0, rng) == 1);
  net.b2 = {1.0, 1.0};
  CHECK(select_action(net, s, 0.0, rng) == 0);

  // eps = 1: uniform, chi-square with one degree of freedom below 10.83 (p = 0.001)
  int ones = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ones += select_action(net, s, 1.0, rng);
  const double e = n / 2.0;
  const double chi2 = (ones - e) * (ones - e) / e + ((n - ones) - e) * ((n - ones) - e) / e;
  CHECK(chi2 < 10.83);
}

TEST_CASE("double-Q target") {
  QNetwork online(1, 1, 2);
  QNetwork target(1, 1, 2);
  online.b2 = {5.0, 0.0};
  target.b2 = {1.0, 9.0};
  const std::vector<double> s{0.0};
  CHECK(ddqn_target(0.0, s, online, target, 1.0, false) == 1.0);
  CHECK(dqn_target(0.0, s, target, 1.0, false) == 9.0);
  CHECK(ddqn_target(0.7, s, online, target, 0.0, false) == 0.7);
  CHECK(ddqn_target(0.7, s, online, target, 0.99, true) == 0.7);
  CHECK(ddqn_target(2.0, s, online, target, 0.5, false) == 2.5);
}

TEST_CASE("zero-error batch leaves the network unchanged") {
  AgentConfig cfg;
  cfg.minibatch = 4;
  QNetwork online(2, 3, 2);
  Rng rng(3);
  online.xavier_init(rng);
  const QNetwork target = online;
  std::vector<Transition> b(4);
  for (int i = 0; i < 4; ++i) {
    b[i].s = {0.1 * i, -0.2 * i};
    b[i].action = i % 2;
    b[i].terminal = true;
    b[i].reward = online.forward(b[i].s)[static_cast<std::size_t>(b[i].action)];
  }
  const QNetwork before = online;
  const double loss = train_step(online, target, view(b), cfg);
  CHECK(loss == Approx(0.0));
  for (std::size_t i = 0; i < online.flatten().size(); ++i) {
    CHECK(online.flatten()[i] == Approx(before.flatten()[i]).epsilon(1e-15));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    QNetwork online(4, 6, 2);
    QNetwork target(4, 6, 2);
    online.xavier_init(rng);
    target.xavier_init(rng);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& b : online.b1) b = u(rng);
    const auto batch = random_batch(rng, 3, 4);
    const auto v = view(batch);
    std::vector<double> grad;
    batch_loss(online, target, v, 0.9, &grad);
    const auto theta = online.flatten();
    const auto fd = oracle::finite_difference(
        [&](std::span<const double> x) {
          QNetwork n = online;
          n.unflatten(x);
          return batch_loss(n, target, v, 0.9);
        },
        theta, 1e-5);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double scale = std::max({std::abs(grad[i]), std::abs(fd[i]), 1e-6});
      CHECK(std::abs(grad[i] - fd[i]) / scale <= 1e-4);
    }
  }
}

TEST_CASE("training on a fixed batch lowers the loss") {
  Rng rng(5);
  AgentConfig cfg;
  cfg.learn_rate = 1e-2;
  QNetwork online(cfg.state_dim(), cfg.hidden, 2);
  online.xavier_init(rng);
  const QNetwork target = online;
  const auto batch = random_batch(rng, 64, cfg.state_dim());
  const auto v = view(batch);
  const double first = train_step(online, target, v, cfg);
  double last = first;
  for (int i = 0; i < 200; ++i) last = train_step(online, target, v, cfg);
  CHECK(last < first);

  std::vector<const Transition*> small(v.begin(), v.begin() + 10);
  CHECK_THROWS_AS(train_step(online, target, small, cfg), std::invalid_argument);
}

TEST_CASE("target sync") {
  QNetwork online(3, 4, 2);
  QNetwork target(3, 4, 2);
  Rng rng(6);
  online.xavier_init(rng);
  target.xavier_init(rng);
  sync_target(online, target);
  const std::vector<double> s{0.3, -0.1, 0.8};
  CHECK(online.forward(s) == target.forward(s));
  sync_target(online, target);
  CHECK(online == target);

  AgentConfig cfg;
  Rng init(7);
  DdqnAgent agent(cfg, init);
  CHECK(agent.online() == agent.target());
  for (auto& t : random_batch(rng, 63, cfg.state_dim())) agent.remember(t);
  CHECK_FALSE(agent.learn(rng).has_value());
  CHECK(agent.train_steps() == 0);
  for (auto& t : random_batch(rng, 100, cfg.state_dim())) agent.remember(t);
  const QNetwork frozen = agent.target();
  for (int i = 0; i < 19; ++i) {
    REQUIRE(agent.learn(rng).has_value());
    CHECK(agent.target() == frozen);
  }
  agent.learn(rng);
  CHECK(agent.syncs() == 1);
  CHECK(agent.steps_since_sync() == 0);
  CHECK(agent.target() == agent.online());
  const QNetwork synced = agent.target();
  for (int i = 0; i < 19; ++i) agent.learn(rng);
  CHECK(agent.target() == synced);
  agent.learn(rng);
  CHECK(agent.syncs() == 2);
}

TEST_CASE("replay buffer") {
  ReplayBuffer buf(1000);
  for (int i = 0; i < 1500; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
    CHECK(buf.size() <= 1000);
  }
  CHECK(buf.size() == 1000);
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(buf.at(i).reward == 500.0 + i);
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    auto s = buf.sample(64, rng);
    std::vector<double> r;
    for (const auto* t : s) r.push_back(t->reward);
    std::sort(r.begin(), r.end());
    CHECK(std::adjacent_find(r.begin(), r.end()) == r.end());
  }
  CHECK_THROWS(buf.sample(1001, rng));
}

TEST_CASE("task reward") {
  AgentConfig cfg;
  CHECK(task_reward(0.0, true, cfg, 5.0) == 0.0);
  CHECK(task_reward(0.6, true, cfg, 5.0) == Approx(-0.6));
  CHECK(task_reward(0.6, false, cfg, 5.0) == -5.0);
  CHECK(task_reward(123.0, false, cfg, 5.0) == -5.0);
  cfg.success_bonus = 1.0;
  CHECK(task_reward(0.25, true, cfg, 5.0) == Approx(0.75));
  SystemParams p;
  AgentConfig d;
  CHECK(d.penalty(p) == Approx(10 * p.p_max_w * p.deadline_slots * p.slot_s));
}

TEST_CASE("state vector") {
  SystemParams p;
  const std::vector<PendingTask> none;
  const auto empty = build_state(none, p.batt_cap_j / 2, p, 8);
  CHECK(empty.size() == 17);
  for (int i = 0; i < 16; ++i) CHECK(empty[i] == 0.0);
  CHECK(empty[16] == Approx(0.5));

  const std::vector<PendingTask> two{{p.raw_bits, p.deadline_slots}, {p.raw_bits / 4, 3}};
  const auto s = build_state(two, 0.0, p, 8);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 0.25);
  CHECK(s[8] == 1.0);
  CHECK(s[9] == Approx(0.3));
  for (int i = 2; i < 8; ++i) CHECK(s[i] == 0.0);

  std::vector<PendingTask> many(5, {p.raw_bits, 2});
  const auto o = build_state(many, 0.0, p, 3);
  CHECK(o.size() == 7);
  CHECK(o[2] == 3.0);
  CHECK(o[5] == Approx(3 * 2.0 / p.deadline_slots));
  for (double x : o) CHECK(x >= 0.0);
}

TEST_CASE("exploration schedule") {
  AgentConfig cfg;
  CHECK(cfg.epsilon_at(0, 200) == 1.0);
  CHECK(cfg.epsilon_at(50, 200) == Approx(0.525));
  CHECK(cfg.epsilon_at(100, 200) == Approx(0.05));
  CHECK(cfg.epsilon_at(199, 200) == Approx(0.05));
  AgentConfig bad;
  bad.minibatch = 2000;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = AgentConfig{};
  bad.discount_gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
  QNetwork net(17, 32, 2);
  Rng rng(9);
  net.xavier_init(rng);
  net.b2 = {0.125, -3.5};
  const std::string path = temp_path("uavsplit_test_agent.trlq");
  save_checkpoint(path, net);
  const QNetwork back = load_checkpoint(path, 17, 32, 2);
  CHECK(back == net);
  CHECK(std::filesystem::file_size(path) == 4 + 4 * 4 + 8 * net.param_count());
  {
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    CHECK(std::string(magic, 4) == "TRLQ");
  }
  CHECK_THROWS_AS(load_checkpoint(path, 17, 16, 2), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint(path, 9, 32, 2), std::runtime_error);
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE and more";
  }
  CHECK_THROWS_AS(load_checkpoint(path, 17, 32, 2), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path, 17, 32, 2), std::runtime_error);
}
