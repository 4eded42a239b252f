#include "uavsplit/rl_agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace uavsplit {

double AgentConfig::epsilon_at(int episode, int total_episodes) const {
  const double span = eps_decay * std::max(1, total_episodes);
  if (span <= 0) return eps_end;
  const double frac = std::min(1.0, episode / span);
  return eps_start + (eps_end - eps_start) * frac;
}

double AgentConfig::penalty(const SystemParams& params) const {
  if (deadline_penalty > 0) return deadline_penalty;
  return 10.0 * params.p_max_w * params.deadline_slots * params.slot_s;
}

void AgentConfig::validate() const {
  auto req = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("AgentConfig: ") + what);
  };
  req(max_tasks >= 1, "max_tasks must be >= 1");
  req(hidden >= 1, "hidden must be >= 1");
  req(learn_rate > 0, "learn_rate must be > 0");
  req(discount_gamma >= 0 && discount_gamma < 1, "discount_gamma must be in [0,1)");
  req(eps_start >= 0 && eps_start <= 1 && eps_end >= 0 && eps_end <= 1, "eps must be in [0,1]");
  req(eps_decay >= 0, "eps_decay must be >= 0");
  req(minibatch >= 1 && minibatch <= buffer_capacity, "minibatch must be in [1, capacity]");
  req(target_sync_every >= 1, "target_sync_every must be >= 1");
  req(deadline_penalty >= 0, "deadline_penalty must be >= 0");
}

std::vector<double> build_state(std::span<const PendingTask> pending, double battery_j,
                                const SystemParams& params, int max_tasks) {
  const auto m = static_cast<std::size_t>(max_tasks);
  std::vector<double> s(2 * m + 1, 0.0);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const std::size_t slot = std::min(i, m - 1);
    s[slot] += std::max(0.0, pending[i].bits) / params.raw_bits;
    s[m + slot] += std::max(0, pending[i].remaining_slots) / static_cast<double>(params.deadline_slots);
  }
  s[2 * m] = params.batt_cap_j > 0 ? std::max(0.0, battery_j) / params.batt_cap_j : 0.0;
  return s;
}

QNetwork::QNetwork(int n_in, int hidden, int n_out) : n_in_(n_in), hidden_(hidden), n_out_(n_out) {
  if (n_in < 1 || hidden < 1 || n_out < 1) throw std::invalid_argument("QNetwork: dims must be >= 1");
  w1.assign(static_cast<std::size_t>(hidden) * n_in, 0.0);
  b1.assign(static_cast<std::size_t>(hidden), 0.0);
  w2.assign(static_cast<std::size_t>(n_out) * hidden, 0.0);
  b2.assign(static_cast<std::size_t>(n_out), 0.0);
}

void QNetwork::xavier_init(Rng& rng) {
  auto fill = [&](std::vector<double>& w, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& x : w) x = u(rng);
  };
  fill(w1, n_in_, hidden_);
  fill(w2, hidden_, n_out_);
  std::fill(b1.begin(), b1.end(), 0.0);
  std::fill(b2.begin(), b2.end(), 0.0);
}

std::vector<double> QNetwork::forward(std::span<const double> s) const {
  if (s.size() != static_cast<std::size_t>(n_in_)) throw std::invalid_argument("forward: bad input size");
  for (double x : s) {
    if (!std::isfinite(x)) throw std::domain_error("forward: non-finite input");
  }
  std::vector<double> h(static_cast<std::size_t>(hidden_));
  for (int j = 0; j < hidden_; ++j) {
    double z = b1[j];
    for (int k = 0; k < n_in_; ++k) z += w1[j * n_in_ + k] * s[k];
    h[j] = z > 0 ? z : 0.0;
  }
  std::vector<double> q(static_cast<std::size_t>(n_out_));
  for (int a = 0; a < n_out_; ++a) {
    double v = b2[a];
    for (int j = 0; j < hidden_; ++j) v += w2[a * hidden_ + j] * h[j];
    q[a] = v;
  }
  return q;
}

std::size_t QNetwork::param_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

std::vector<double> QNetwork::flatten() const {
  std::vector<double> t;
  t.reserve(param_count());
  for (const auto* v : {&w1, &b1, &w2, &b2}) t.insert(t.end(), v->begin(), v->end());
  return t;
}

void QNetwork::unflatten(std::span<const double> theta) {
  if (theta.size() != param_count()) throw std::invalid_argument("unflatten: size mismatch");
  std::size_t off = 0;
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    std::copy_n(theta.begin() + off, v->size(), v->begin());
    off += v->size();
  }
}

void QNetwork::accumulate_grad(std::span<const double> s, int action, double scale,
                               std::span<double> grad) const {
  const std::size_t o_b1 = w1.size();
  const std::size_t o_w2 = o_b1 + b1.size();
  const std::size_t o_b2 = o_w2 + w2.size();
  for (int j = 0; j < hidden_; ++j) {
    double z = b1[j];
    for (int k = 0; k < n_in_; ++k) z += w1[j * n_in_ + k] * s[k];
    const double h = z > 0 ? z : 0.0;
    grad[o_w2 + action * hidden_ + j] += scale * h;
    if (z > 0) {
      const double dz = scale * w2[action * hidden_ + j];
      for (int k = 0; k < n_in_; ++k) grad[j * n_in_ + k] += dz * s[k];
      grad[o_b1 + j] += dz;
    }
  }
  grad[o_b2 + action] += scale;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("ReplayBuffer::at");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (n > items_.size()) throw std::invalid_argument("ReplayBuffer::sample: not enough items");
  // partial Fisher-Yates over indices
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&items_[idx[i]]);
  }
  return out;
}

int greedy_action(const QNetwork& net, std::span<const double> s) {
  const auto q = net.forward(s);
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

int select_action(const QNetwork& net, std::span<const double> s, double eps, Rng& rng) {
  if (eps < 0 || eps > 1) throw std::domain_error("select_action: eps must be in [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (eps > 0 && u(rng) < eps) {
    std::uniform_int_distribution<int> pick(0, net.n_out() - 1);
    return pick(rng);
  }
  return greedy_action(net, s);
}

double ddqn_target(double r, std::span<const double> s_next, const QNetwork& online,
                   const QNetwork& target, double gamma, bool terminal) {
  if (terminal || gamma == 0.0) return r;
  const int a = greedy_action(online, s_next);
  return r + gamma * target.forward(s_next)[a];
}

double dqn_target(double r, std::span<const double> s_next, const QNetwork& target, double gamma,
                  bool terminal) {
  if (terminal || gamma == 0.0) return r;
  const auto q = target.forward(s_next);
  return r + gamma * *std::max_element(q.begin(), q.end());
}

double batch_loss(const QNetwork& online, const QNetwork& target,
                  std::span<const Transition* const> batch, double gamma,
                  std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  if (grad != nullptr) grad->assign(online.param_count(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const Transition* t : batch) {
    const double y = ddqn_target(t->reward, t->s_next, online, target, gamma, t->terminal);
    const double err = online.forward(t->s)[t->action] - y;
    loss += err * err * inv_b;
    if (grad != nullptr) online.accumulate_grad(t->s, t->action, 2.0 * err * inv_b, *grad);
  }
  return loss;
}

double train_step(QNetwork& online, const QNetwork& target,
                  std::span<const Transition* const> batch, const AgentConfig& cfg) {
  if (static_cast<int>(batch.size()) < cfg.minibatch) {
    throw std::invalid_argument("train_step: batch smaller than minibatch");
  }
  // targets use the pre-update online net for action selection
  std::vector<double> grad;
  const double loss = batch_loss(online, target, batch, cfg.discount_gamma, &grad);
  std::vector<double> theta = online.flatten();
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= cfg.learn_rate * grad[i];
  online.unflatten(theta);
  return loss;
}

void sync_target(const QNetwork& online, QNetwork& target) {
  if (online.n_in() != target.n_in() || online.hidden() != target.hidden() ||
      online.n_out() != target.n_out()) {
    throw std::invalid_argument("sync_target: shape mismatch");
  }
  target = online;
}

double task_reward(double energy_j, bool deadline_met, const AgentConfig& cfg, double penalty_j) {
  if (!deadline_met) return -penalty_j;
  return -energy_j + cfg.success_bonus;
}

DdqnAgent::DdqnAgent(const AgentConfig& cfg, Rng& init_rng)
    : cfg_(cfg),
      online_(cfg.state_dim(), cfg.hidden, 2),
      target_(cfg.state_dim(), cfg.hidden, 2),
      buffer_(static_cast<std::size_t>(cfg.buffer_capacity)) {
  cfg_.validate();
  online_.xavier_init(init_rng);
  target_ = online_;
}

int DdqnAgent::act(std::span<const double> s, double eps, Rng& rng) const {
  return select_action(online_, s, eps, rng);
}

std::optional<double> DdqnAgent::learn(Rng& rng) {
  if (buffer_.size() < static_cast<std::size_t>(cfg_.minibatch)) return std::nullopt;
  const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.minibatch), rng);
  const double loss = train_step(online_, target_, batch, cfg_);
  ++train_steps_;
  if (++since_sync_ >= cfg_.target_sync_every) {
    sync_target(online_, target_);
    since_sync_ = 0;
    ++syncs_;
  }
  return loss;
}

namespace {

constexpr char kMagic[4] = {'T', 'R', 'L', 'Q'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw std::runtime_error("checkpoint truncated: " + path);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const QNetwork& net) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.n_in()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.n_out()));
  for (double x : net.flatten()) put<double>(os, x);
  if (!os) throw std::runtime_error("error writing checkpoint: " + path);
}

QNetwork load_checkpoint(const std::string& path, int n_in, int hidden, int n_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a TRLQ checkpoint: " + path);
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version: " + path);
  const auto fi = get<std::uint32_t>(is, path);
  const auto fh = get<std::uint32_t>(is, path);
  const auto fo = get<std::uint32_t>(is, path);
  if (fi != static_cast<std::uint32_t>(n_in) || fh != static_cast<std::uint32_t>(hidden) ||
      fo != static_cast<std::uint32_t>(n_out)) {
    throw std::runtime_error("checkpoint dims " + std::to_string(fi) + "x" + std::to_string(fh) +
                             "x" + std::to_string(fo) + " do not match the network: " + path);
  }
  QNetwork net(n_in, hidden, n_out);
  std::vector<double> theta(net.param_count());
  for (double& x : theta) x = get<double>(is, path);
  net.unflatten(theta);
  return net;
}

}  // namespace uavsplit
