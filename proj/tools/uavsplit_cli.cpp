// uavsplit: train, evaluate and sweep the split-inference policies, and run
// the verification suite.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uavsplit/config.hpp"
#include "uavsplit/csv.hpp"
#include "uavsplit/experiment.hpp"
#include "uavsplit/simulator.hpp"
#include "uavsplit/verify.hpp"

namespace fs = std::filesystem;
using namespace uavsplit;

namespace {

constexpr std::uint64_t kUnsetSeed = std::numeric_limits<std::uint64_t>::max();

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string policy;
  int episodes = 0;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out_dir, "output directory");
  app->add_option("--seed", c.seed, "base seed (random and reported when omitted)");
  app->add_option("--set", c.overrides, "key=value override, repeatable");
  app->add_option("--policy", c.policy, "opetrl, one-task, greedy, a comma list or all");
  app->add_option("--episodes", c.episodes, "episode count (training episodes for train)");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

SimConfig resolve(const Common& c) {
  SimConfig base;
  base.seed = kUnsetSeed;
  SimConfig cfg = c.config_path.empty() ? base : load_config(c.config_path, base);
  apply_overrides(cfg, c.overrides);
  if (c.seed) cfg.seed = *c.seed;
  if (cfg.seed == kUnsetSeed) {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed " << cfg.seed << " (random)\n";
  } else {
    std::cout << "seed " << cfg.seed << "\n";
  }
  return cfg;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + p.string() + ": " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void record_config(const fs::path& out, const SimConfig& cfg) {
  auto os = open_out(out / "run.cfg");
  os << dump_config(cfg);
}

QNetwork load_agent(const std::string& path, const SimConfig& cfg) {
  if (path.empty()) throw std::runtime_error("opetrl needs --checkpoint (or --train-per-point for sweep)");
  return load_checkpoint(path, cfg.agent.state_dim(), cfg.agent.hidden, 2);
}

int cmd_train(const Common& c) {
  SimConfig cfg = resolve(c);
  if (c.episodes > 0) cfg.train_episodes = c.episodes;
  const fs::path out = prepare_out(c.out_dir);
  const TrainResult r = train_agent(cfg, cfg.seed);
  save_checkpoint((out / "agent.trlq").string(), r.online);
  {
    auto os = open_out(out / "learning_curve.csv");
    os << "episode,epsilon,reward_sum_J,success_prob,energy_J,transitions\n";
    for (const auto& e : r.curve) {
      os << e.episode << ',' << fmt_double(e.epsilon) << ',' << fmt_double(e.reward_sum) << ','
         << fmt_double(e.success_prob) << ',' << fmt_double(e.energy_j) << ',' << e.transitions
         << '\n';
    }
  }
  {
    auto os = open_out(out / "loss.csv");
    os << "step,loss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) os << i << ',' << fmt_double(r.losses[i]) << '\n';
  }
  record_config(out, cfg);
  std::cout << "trained " << cfg.train_episodes << " episodes, " << r.train_steps
            << " gradient steps -> " << (out / "agent.trlq").string() << "\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint) {
  SimConfig cfg = resolve(c);
  if (c.episodes > 0) cfg.episodes = c.episodes;
  const auto policies = parse_policy_list(c.policy.empty() ? policy_name(cfg.policy) : c.policy);
  const fs::path out = prepare_out(c.out_dir);
  std::optional<QNetwork> net;
  for (Policy p : policies) {
    if (p == Policy::kOpetrl && !net) net = load_agent(checkpoint, cfg);
  }
  auto summary = open_out(out / "summary.csv");
  write_summary_header(summary);
  for (Policy p : policies) {
    cfg.policy = p;
    const QNetwork* agent = p == Policy::kOpetrl ? &*net : nullptr;
    Summary s = aggregate(evaluate(cfg, agent, c.threads));
    s.policy = policy_name(p);
    s.sweep_var = "none";
    s.seed = cfg.seed;
    write_summary_row(summary, s);

    EpisodeTrace trace;
    run_episode(cfg, agent, derive_seed(cfg.seed, 0), &trace);
    const std::string tag = policy_name(p);
    auto ts = open_out(out / ("trace_" + tag + ".csv"));
    write_trace_csv(ts, trace);
    auto ks = open_out(out / ("tasks_" + tag + ".csv"));
    write_task_csv(ks, trace);
    std::cout << tag << ": success " << s.success_mean << " +- " << s.success_se << ", energy "
              << s.energy_mean << " J +- " << s.energy_se << " over " << s.episodes << " episodes\n";
  }
  record_config(out, cfg);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& var, const std::string& values,
              const std::string& checkpoint, bool train_per_point) {
  SimConfig cfg = resolve(c);
  if (c.episodes > 0) cfg.episodes = c.episodes;
  SweepOptions opts;
  opts.var = var;
  opts.values = split_csv_list(values);
  opts.policies = parse_policy_list(c.policy.empty() ? "all" : c.policy);
  opts.train_per_point = train_per_point;
  opts.threads = c.threads;
  std::optional<QNetwork> net;
  const bool wants_agent = std::find(opts.policies.begin(), opts.policies.end(), Policy::kOpetrl) !=
                           opts.policies.end();
  if (wants_agent && !train_per_point) {
    net = load_agent(checkpoint, cfg);
    opts.checkpoint = &*net;
  }
  const fs::path out = prepare_out(c.out_dir);
  const auto rows = run_sweep(cfg, opts);
  auto os = open_out(out / "summary.csv");
  write_summary_header(os);
  for (const auto& r : rows) {
    write_summary_row(os, r);
    std::cout << r.policy << ' ' << r.sweep_var << '=' << r.sweep_value << ": success "
              << r.success_mean << ", energy " << r.energy_mean << " J\n";
  }
  record_config(out, cfg);
  return 0;
}

int cmd_verify(const Common& c, double tolerance, const std::string& mutation, int instances,
               const std::string& filter, bool list) {
  if (list) {
    for (const auto& k : verify_checks()) std::cout << k.name << "  " << k.what << "\n";
    return 0;
  }
  VerifyOptions o;
  o.base = resolve(c);
  o.seed = o.base.seed;
  o.tolerance = tolerance;
  o.mutation = mutation;
  o.instances = instances;
  if (c.episodes > 0) o.episodes = c.episodes;
  return run_verify(o, std::cout, filter) == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV split-inference energy/deadline simulator"};
  app.require_subcommand(1);

  Common train_c, eval_c, sweep_c, verify_c;
  auto* train = app.add_subcommand("train", "train the OPETRL agent");
  add_common(train, train_c);

  std::string eval_ckpt;
  auto* eval = app.add_subcommand("eval", "evaluate policies and write CSVs");
  add_common(eval, eval_c);
  eval->add_option("--checkpoint", eval_ckpt, "agent checkpoint for opetrl");

  std::string sweep_var, sweep_values, sweep_ckpt;
  bool per_point = false;
  auto* sweep = app.add_subcommand("sweep", "sweep one config key across values");
  add_common(sweep, sweep_c);
  sweep->add_option("--sweep", sweep_var, "config key to sweep")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();
  sweep->add_option("--checkpoint", sweep_ckpt, "agent checkpoint shared by all points");
  sweep->add_flag("--train-per-point", per_point, "train a fresh agent at every point");

  double tolerance = 0.0;
  std::string mutation, filter;
  int instances = 0;
  bool list = false;
  auto* verify = app.add_subcommand("verify", "run the oracle and property checks");
  add_common(verify, verify_c);
  verify->add_option("--tolerance", tolerance, "per-slot tolerance of the water-filling oracle check");
  verify->add_option("--mutate", mutation, "inject a fault: water-level");
  verify->add_option("--instances", instances, "instances per randomized check");
  verify->add_option("--filter", filter, "run checks whose name contains this");
  verify->add_flag("--list", list, "list checks and exit");

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed()) return cmd_train(train_c);
    if (eval->parsed()) return cmd_eval(eval_c, eval_ckpt);
    if (sweep->parsed()) return cmd_sweep(sweep_c, sweep_var, sweep_values, sweep_ckpt, per_point);
    if (verify->parsed()) return cmd_verify(verify_c, tolerance, mutation, instances, filter, list);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
