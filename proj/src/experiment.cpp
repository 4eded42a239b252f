#include "uavsplit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

#include "uavsplit/config.hpp"

namespace uavsplit {

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  return out;
}

std::vector<Policy> parse_policy_list(const std::string& text) {
  if (text == "all") return {Policy::kOpetrl, Policy::kOneTask, Policy::kGreedy};
  std::vector<Policy> out;
  for (const auto& name : split_csv_list(text)) out.push_back(parse_policy(name));
  if (out.empty()) throw std::invalid_argument("no policy given");
  return out;
}

std::vector<Summary> run_sweep(const SimConfig& base, const SweepOptions& opts) {
  if (opts.values.empty()) throw std::invalid_argument("sweep: no values");
  const bool wants_agent =
      std::find(opts.policies.begin(), opts.policies.end(), Policy::kOpetrl) != opts.policies.end();
  if (wants_agent && !opts.train_per_point && opts.checkpoint == nullptr) {
    throw std::invalid_argument("sweep: opetrl needs a checkpoint or per-point training");
  }
  std::vector<SimConfig> points;
  for (const auto& v : opts.values) {
    SimConfig c = base;
    apply_setting(c, opts.var, v);
    c.validate();
    points.push_back(c);
  }

  const std::size_t n_pol = opts.policies.size();
  std::vector<Summary> rows(points.size() * n_pol);
  auto run_point = [&](std::size_t i) {
    SimConfig c = points[i];
    std::optional<QNetwork> trained;
    const QNetwork* net = opts.checkpoint;
    if (wants_agent && opts.train_per_point) {
      trained = train_agent(c, derive_seed(c.seed, 0x7000 + i)).online;
      net = &*trained;
    }
    double value = 0.0;
    try {
      value = std::stod(opts.values[i]);
    } catch (const std::exception&) {
      value = static_cast<double>(i);
    }
    for (std::size_t j = 0; j < n_pol; ++j) {
      c.policy = opts.policies[j];
      Summary s = aggregate(evaluate(c, c.policy == Policy::kOpetrl ? net : nullptr));
      s.policy = policy_name(c.policy);
      s.sweep_var = opts.var;
      s.sweep_value = value;
      s.seed = c.seed;
      rows[i * n_pol + j] = s;
    }
  };

  const int threads = std::clamp(opts.threads, 1, static_cast<int>(points.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < points.size(); i = next++) run_point(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

}  // namespace uavsplit
