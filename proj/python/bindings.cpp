// Python bindings: configuration, the single-task power solver, the sample
// count, episodes, evaluation, training and the verification suite.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "uavsplit/config.hpp"
#include "uavsplit/power_opt.hpp"
#include "uavsplit/simulator.hpp"
#include "uavsplit/verify.hpp"

namespace py = pybind11;
using namespace uavsplit;

namespace {

SimConfig make_config(const std::vector<std::string>& overrides, const std::string& path) {
  SimConfig c = path.empty() ? SimConfig{} : load_config(path);
  apply_overrides(c, overrides);
  return c;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["tasks"] = m.tasks;
  d["met"] = m.met;
  d["success_prob"] = m.success_prob;
  d["energy_trans_j"] = m.energy_trans_j;
  d["energy_comp_j"] = m.energy_comp_j;
  d["total_energy_j"] = m.total_energy_j;
  d["ct_tasks"] = m.ct_tasks;
  d["replans"] = m.replans;
  d["depleted_slots"] = m.depleted_slots;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "UAV split-inference energy and deadline simulator";

  py::class_<SimConfig>(m, "Config")
      .def(py::init([](const std::vector<std::string>& overrides, const std::string& path) {
             return make_config(overrides, path);
           }),
           py::arg("overrides") = std::vector<std::string>{}, py::arg("path") = "")
      .def("set", [](SimConfig& c, const std::string& k, const std::string& v) { apply_setting(c, k, v); })
      .def("dump", &dump_config)
      .def_readwrite("horizon_slots", &SimConfig::horizon_slots)
      .def_readwrite("episodes", &SimConfig::episodes)
      .def_readwrite("train_episodes", &SimConfig::train_episodes)
      .def_readwrite("seed", &SimConfig::seed)
      .def_property(
          "policy", [](const SimConfig& c) { return std::string(policy_name(c.policy)); },
          [](SimConfig& c, const std::string& p) { c.policy = parse_policy(p); });
  m.def("config_keys", &config_keys);

  py::class_<QNetwork>(m, "QNetwork");
  m.def("load_checkpoint", [](const std::string& path, const SimConfig& c) {
    return load_checkpoint(path, c.agent.state_dim(), c.agent.hidden, 2);
  });
  m.def("save_checkpoint", &save_checkpoint);

  m.def(
      "optimal_power_single_task",
      [](double payload_bits, const std::vector<double>& gains, double p_max_w, double slot_s,
         double bandwidth_hz) {
        const auto r = optimal_power_single_task(payload_bits, gains, LinkParams{slot_s, bandwidth_hz, p_max_w});
        py::dict d;
        d["power"] = r.power;
        d["water_level"] = r.water_level;
        d["clipped"] = r.clipped;
        d["infeasible"] = r.infeasible;
        return d;
      },
      py::arg("payload_bits"), py::arg("gains"), py::arg("p_max_w"), py::arg("slot_s") = 0.1,
      py::arg("bandwidth_hz") = 2e6);

  m.def(
      "saa_sample_count",
      [](double eps, double theta, int n_vars, bool corrected) {
        return saa_sample_count(eps, theta, n_vars, corrected ? SaaBound::kCorrected : SaaBound::kPrinted);
      },
      py::arg("epsilon"), py::arg("theta"), py::arg("n_vars"), py::arg("corrected") = false);

  m.def(
      "run_episode",
      [](const SimConfig& c, std::uint64_t seed, const QNetwork* net) {
        py::gil_scoped_release nogil;
        const Metrics r = run_episode(c, net, seed);
        py::gil_scoped_acquire gil;
        return metrics_dict(r);
      },
      py::arg("config"), py::arg("seed"), py::arg("net") = nullptr);

  m.def(
      "evaluate",
      [](const SimConfig& c, const QNetwork* net, int threads) {
        std::vector<Metrics> runs;
        {
          py::gil_scoped_release nogil;
          runs = evaluate(c, net, threads);
        }
        const Summary s = aggregate(runs);
        py::dict d;
        d["success_mean"] = s.success_mean;
        d["success_se"] = s.success_se;
        d["energy_mean"] = s.energy_mean;
        d["energy_se"] = s.energy_se;
        d["episodes"] = s.episodes;
        return d;
      },
      py::arg("config"), py::arg("net") = nullptr, py::arg("threads") = 1);

  m.def(
      "train",
      [](const SimConfig& c, std::uint64_t seed) {
        py::gil_scoped_release nogil;
        return train_agent(c, seed).online;
      },
      py::arg("config"), py::arg("seed"));

  m.def(
      "verify",
      [](const std::string& filter, std::uint64_t seed) {
        VerifyOptions o;
        o.seed = seed;
        std::ostringstream os;
        const int failures = run_verify(o, os, filter);
        return py::make_tuple(failures, os.str());
      },
      py::arg("filter") = "", py::arg("seed") = 20240601);
}
