#include "uavsplit/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "uavsplit/csv.hpp"

namespace uavsplit {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

namespace {

struct Entry {
  const char* key;
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&)> set;
};

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config: '" + key + "' expects an integer");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

template <class M>
Entry num(const char* key, M SimConfig::*group, double M::*field) {
  return {key, [=](const SimConfig& c) { return fmt_double(c.*group.*field); },
          [=](SimConfig& c, const std::string& v) { c.*group.*field = to_double(key, v); }};
}

template <class M>
Entry integer(const char* key, M SimConfig::*group, int M::*field) {
  return {key, [=](const SimConfig& c) { return std::to_string(c.*group.*field); },
          [=](SimConfig& c, const std::string& v) {
            c.*group.*field = static_cast<int>(to_int(key, v));
          }};
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = [] {
    using S = SystemParams;
    using A = AgentConfig;
    using Q = SaaConfig;
    std::vector<Entry> e;
    e.push_back(num("bandwidth_W", &SimConfig::system, &S::bandwidth_hz));
    e.push_back(num("slot_tau", &SimConfig::system, &S::slot_s));
    e.push_back(num("distance_d", &SimConfig::system, &S::distance_m));
    e.push_back({"noise_var_dBm",
                 [](const SimConfig& c) { return fmt_double(10.0 * std::log10(c.system.noise_w) + 30.0); },
                 [](SimConfig& c, const std::string& v) {
                   c.system.noise_w = dbm_to_watts(to_double("noise_var_dBm", v));
                 }});
    e.push_back({"ref_gain_rho_dB",
                 [](const SimConfig& c) { return fmt_double(10.0 * std::log10(c.system.ref_gain)); },
                 [](SimConfig& c, const std::string& v) {
                   c.system.ref_gain = db_to_linear(to_double("ref_gain_rho_dB", v));
                 }});
    e.push_back(num("p_max", &SimConfig::system, &S::p_max_w));
    e.push_back(integer("deadline_C", &SimConfig::system, &S::deadline_slots));
    e.push_back(num("raw_bits_S", &SimConfig::system, &S::raw_bits));
    e.push_back(integer("feat_h_Lh", &SimConfig::system, &S::feat_h));
    e.push_back(integer("feat_w_Lw", &SimConfig::system, &S::feat_w));
    e.push_back(integer("quant_Q", &SimConfig::system, &S::quant_bits));
    e.push_back(num("batt_cap_Emax", &SimConfig::system, &S::batt_cap_j));
    e.push_back(num("batt_init_E0", &SimConfig::system, &S::batt_init_j));
    e.push_back(num("arrival_prob_q", &SimConfig::system, &S::arrival_prob));
    e.push_back(num("solar_eff", &SimConfig::system, &S::solar_eff));
    e.push_back(num("panel_area", &SimConfig::system, &S::panel_area_m2));
    e.push_back(num("irradiance_G", &SimConfig::system, &S::irradiance_w_m2));
    e.push_back(num("absorb_beta", &SimConfig::system, &S::absorb_per_m));
    e.push_back(num("cloud_thickness", &SimConfig::system, &S::cloud_m));
    e.push_back(num("chip_k", &SimConfig::system, &S::chip_k));
    e.push_back(num("f_max", &SimConfig::system, &S::f_max_hz));
    e.push_back(num("flops_nt", &SimConfig::system, &S::flops));
    e.push_back(integer("cores_Nc", &SimConfig::system, &S::cores));
    e.push_back(integer("vec_bits_nv", &SimConfig::system, &S::vec_bits));
    e.push_back(integer("os_bits_ns", &SimConfig::system, &S::os_bits));

    e.push_back(num("saa_epsilon", &SimConfig::saa, &Q::epsilon));
    e.push_back(num("saa_theta", &SimConfig::saa, &Q::theta));
    e.push_back(integer("saa_n_vars", &SimConfig::saa, &Q::n_vars));
    e.push_back(integer("saa_k_samples", &SimConfig::saa, &Q::k_samples));
    e.push_back({"saa_bound",
                 [](const SimConfig& c) {
                   return std::string(c.saa.bound == SaaBound::kPrinted ? "printed" : "corrected");
                 },
                 [](SimConfig& c, const std::string& v) {
                   if (v == "printed") {
                     c.saa.bound = SaaBound::kPrinted;
                   } else if (v == "corrected") {
                     c.saa.bound = SaaBound::kCorrected;
                   } else {
                     throw std::invalid_argument("config: saa_bound is 'printed' or 'corrected'");
                   }
                 }});
    e.push_back({"saa_repair",
                 [](const SimConfig& c) { return std::string(c.saa.feasibility_repair ? "1" : "0"); },
                 [](SimConfig& c, const std::string& v) {
                   c.saa.feasibility_repair = to_bool("saa_repair", v);
                 }});
    e.push_back(integer("saa_threads", &SimConfig::saa, &Q::threads));
    e.push_back({"alloc_rule",
                 [](const SimConfig& c) {
                   return std::string(c.saa.allocation.rule == AllocationRule::kExact ? "exact"
                                                                                     : "pairwise");
                 },
                 [](SimConfig& c, const std::string& v) {
                   if (v == "exact") {
                     c.saa.allocation.rule = AllocationRule::kExact;
                   } else if (v == "pairwise") {
                     c.saa.allocation.rule = AllocationRule::kPairwiseResidual;
                   } else {
                     throw std::invalid_argument("config: alloc_rule is 'exact' or 'pairwise'");
                   }
                 }});
    e.push_back({"alloc_loop_cap",
                 [](const SimConfig& c) { return std::to_string(c.saa.allocation.loop_cap); },
                 [](SimConfig& c, const std::string& v) {
                   c.saa.allocation.loop_cap = static_cast<int>(to_int("alloc_loop_cap", v));
                 }});

    e.push_back(integer("agent_max_tasks", &SimConfig::agent, &A::max_tasks));
    e.push_back(integer("agent_hidden", &SimConfig::agent, &A::hidden));
    e.push_back(num("agent_learn_rate", &SimConfig::agent, &A::learn_rate));
    e.push_back(num("agent_gamma", &SimConfig::agent, &A::discount_gamma));
    e.push_back(num("agent_eps_start", &SimConfig::agent, &A::eps_start));
    e.push_back(num("agent_eps_end", &SimConfig::agent, &A::eps_end));
    e.push_back(num("agent_eps_decay", &SimConfig::agent, &A::eps_decay));
    e.push_back(integer("agent_minibatch", &SimConfig::agent, &A::minibatch));
    e.push_back(integer("agent_buffer", &SimConfig::agent, &A::buffer_capacity));
    e.push_back(integer("agent_target_sync", &SimConfig::agent, &A::target_sync_every));
    e.push_back(num("agent_deadline_penalty", &SimConfig::agent, &A::deadline_penalty));
    e.push_back(num("agent_success_bonus", &SimConfig::agent, &A::success_bonus));

    e.push_back({"channel", [](const SimConfig& c) { return c.channel; },
                 [](SimConfig& c, const std::string& v) {
                   make_channel_model(v);
                   c.channel = v;
                 }});
    e.push_back({"policy", [](const SimConfig& c) { return std::string(policy_name(c.policy)); },
                 [](SimConfig& c, const std::string& v) { c.policy = parse_policy(v); }});
    e.push_back({"horizon_slots", [](const SimConfig& c) { return std::to_string(c.horizon_slots); },
                 [](SimConfig& c, const std::string& v) {
                   c.horizon_slots = static_cast<int>(to_int("horizon_slots", v));
                 }});
    e.push_back({"episodes", [](const SimConfig& c) { return std::to_string(c.episodes); },
                 [](SimConfig& c, const std::string& v) {
                   c.episodes = static_cast<int>(to_int("episodes", v));
                 }});
    e.push_back({"train_episodes",
                 [](const SimConfig& c) { return std::to_string(c.train_episodes); },
                 [](SimConfig& c, const std::string& v) {
                   c.train_episodes = static_cast<int>(to_int("train_episodes", v));
                 }});
    e.push_back({"seed", [](const SimConfig& c) { return std::to_string(c.seed); },
                 [](SimConfig& c, const std::string& v) {
                   std::size_t used = 0;
                   c.seed = std::stoull(v, &used);
                   if (used != v.size()) throw std::invalid_argument("config: bad seed '" + v + "'");
                 }});
    return e;
  }();
  return entries;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : table()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

SimConfig parse_config(const std::string& text, SimConfig base) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& ex) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return base;
}

SimConfig load_config(const std::string& path, SimConfig base) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_overrides(SimConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("override '" + o + "' is not key=value");
    apply_setting(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
}

std::string dump_config(const SimConfig& cfg) {
  std::string out;
  for (const auto& e : table()) out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& e : table()) k.emplace_back(e.key);
  return k;
}

}  // namespace uavsplit
