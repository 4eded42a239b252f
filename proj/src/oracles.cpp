#include "uavsplit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uavsplit::oracle {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double target_nats(double bits, const Link& link) {
  return bits * kLn2 / (link.slot_s * link.bandwidth_hz);
}

double nats_at(double nu, std::span<const double> gains, double pmax) {
  double s = 0.0;
  for (double h : gains) s += std::log1p(h * std::clamp(nu - 1.0 / h, 0.0, pmax));
  return s;
}

// box-and-sum projection: clamp(base_t - lambda * w_t, 0, u_t) summing to total
std::vector<double> project(std::span<const double> base, std::span<const double> w,
                            std::span<const double> u, double total) {
  const std::size_t n = base.size();
  auto at = [&](double lam, std::vector<double>* out) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = std::clamp(base[t] - lam * w[t], 0.0, u[t]);
      s += v;
      if (out != nullptr) (*out)[t] = v;
    }
    return s;
  };
  double lo = -1.0;
  double hi = 1.0;
  while (at(lo, nullptr) < total && lo > -1e300) lo *= 2.0;
  while (at(hi, nullptr) > total && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (at(mid, nullptr) > total) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<double> out(n);
  at(0.5 * (lo + hi), &out);
  return out;
}

}  // namespace

std::vector<double> bisection_powers(double bits, std::span<const double> gains, const Link& link,
                                     double* water_level) {
  const double target = target_nats(bits, link);
  const double pmax = link.p_max_w;
  double hi = 0.0;
  for (double h : gains) hi = std::max(hi, 1.0 / h + pmax);
  std::vector<double> p(gains.size(), pmax);
  if (nats_at(hi, gains, pmax) < target) {
    if (water_level != nullptr) *water_level = std::numeric_limits<double>::infinity();
    return p;
  }
  double lo = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (nats_at(mid, gains, pmax) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double nu = 0.5 * (lo + hi);
  for (std::size_t t = 0; t < gains.size(); ++t) p[t] = std::clamp(nu - 1.0 / gains[t], 0.0, pmax);
  if (water_level != nullptr) *water_level = nu;
  return p;
}

double projected_gradient_energy(double bits, std::span<const double> gains, const Link& link) {
  const std::size_t n = gains.size();
  const double target = target_nats(bits, link);
  std::vector<double> u(n), ones(n, 1.0), zeros(n, 0.0);
  double cap = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    u[t] = std::log1p(gains[t] * link.p_max_w);
    cap += u[t];
  }
  if (cap < target) return std::numeric_limits<double>::infinity();

  auto objective = [&](std::span<const double> r) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += std::expm1(r[t]) / gains[t];
    return s;
  };

  // feasible start: equal rates clipped to the box
  std::vector<double> r = project(zeros, ones, u, target);
  for (double& v : r) v = std::max(v, 0.0);
  std::vector<double> base(n), w(n);
  double f = objective(r);
  for (int it = 0; it < 500; ++it) {
    // scaled gradient step: the Hessian exp(r)/h is diagonal
    for (std::size_t t = 0; t < n; ++t) {
      const double g = std::exp(r[t]) / gains[t];
      base[t] = r[t] - 1.0;
      w[t] = 1.0 / g;
    }
    const std::vector<double> cand = project(base, w, u, target);
    double step_norm = 0.0;
    double slope = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      step_norm = std::max(step_norm, std::abs(cand[t] - r[t]));
      slope += std::exp(r[t]) / gains[t] * (cand[t] - r[t]);
    }
    if (step_norm < 1e-15 || slope >= 0) break;
    double alpha = 1.0;
    std::vector<double> trial(n);
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t t = 0; t < n; ++t) trial[t] = r[t] + alpha * (cand[t] - r[t]);
      if (objective(trial) <= f + 1e-4 * alpha * slope) break;
      alpha *= 0.5;
    }
    const double f_new = objective(trial);
    if (!(f_new < f)) break;
    r = trial;
    f = f_new;
  }
  return link.slot_s * f;
}

double delivered_bits(std::span<const double> power, std::span<const double> gains, const Link& link) {
  double s = 0.0;
  for (std::size_t t = 0; t < power.size(); ++t) {
    s += link.slot_s * link.bandwidth_hz * std::log2(1.0 + power[t] * gains[t]);
  }
  return s;
}

namespace {

struct WindowCost {
  int infeasible = 0;
  double energy = 0.0;
};

WindowCost window_cost(const SplitTask& task, std::span<const double> gains, int now, int start,
                       int end, const Link& link) {
  WindowCost c;
  if (task.bits <= 0) return c;
  const auto w = gains.subspan(static_cast<std::size_t>(start - now), static_cast<std::size_t>(end - start));
  double cap = 0.0;
  for (double h : w) cap += std::log1p(h * link.p_max_w);
  const auto p = bisection_powers(task.bits, w, link);
  c.infeasible = cap < target_nats(task.bits, link) ? 1 : 0;
  for (double x : p) c.energy += link.slot_s * x;
  return c;
}

void enumerate(std::span<const SplitTask> tasks, std::span<const double> gains, int now,
               const Link& link, std::size_t i, int prev_end, std::vector<int>& ends,
               WindowCost acc, SplitResult& best, bool& found) {
  if (i == tasks.size()) {
    const bool better = !found || acc.infeasible < best.infeasible_windows ||
                        (acc.infeasible == best.infeasible_windows && acc.energy < best.energy_j);
    if (better) {
      found = true;
      best.ends = ends;
      best.infeasible_windows = acc.infeasible;
      best.energy_j = acc.energy;
    }
    return;
  }
  const SplitTask& task = tasks[i];
  const int start = std::max(prev_end, task.ready);
  const int lo = i + 1 == tasks.size() ? task.deadline : start + 1;
  for (int end = lo; end <= task.deadline; ++end) {
    if (end <= start) continue;
    const WindowCost c = window_cost(task, gains, now, start, end, link);
    ends.push_back(end);
    enumerate(tasks, gains, now, link, i + 1, end, ends,
              {acc.infeasible + c.infeasible, acc.energy + c.energy}, best, found);
    ends.pop_back();
  }
}

}  // namespace

SplitResult brute_force_split(std::span<const SplitTask> tasks, std::span<const double> gains,
                              int now, const Link& link) {
  SplitResult best;
  bool found = false;
  std::vector<int> ends;
  enumerate(tasks, gains, now, link, 0, now, ends, {}, best, found);
  return best;
}

SplitResult split_energy(std::span<const SplitTask> tasks, std::span<const double> gains, int now,
                         const Link& link, const std::vector<int>& ends) {
  if (ends.size() != tasks.size()) throw std::invalid_argument("split_energy: one end per task");
  SplitResult r;
  r.ends = ends;
  int prev = now;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const int start = std::max(prev, tasks[i].ready);
    const WindowCost c = window_cost(tasks[i], gains, now, start, ends[i], link);
    r.infeasible_windows += c.infeasible;
    r.energy_j += c.energy;
    prev = ends[i];
  }
  return r;
}

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> x, double h) {
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> g(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double keep = xs[i];
    xs[i] = keep + h;
    const double fp = f(xs);
    xs[i] = keep - h;
    const double fm = f(xs);
    xs[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace uavsplit::oracle
