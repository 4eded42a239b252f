#pragma once

#include <string>
#include <vector>

#include "uavsplit/simulator.hpp"

namespace uavsplit {

/// Sets one key. Units follow the file format: noise_var_dBm in dBm,
/// ref_gain_rho_dB in dB, everything else SI. Throws std::invalid_argument
/// for unknown keys or unparsable values.
void apply_setting(SimConfig& cfg, const std::string& key, const std::string& value);

/// `key = value` lines; `#` starts a comment. Later lines win.
SimConfig parse_config(const std::string& text, SimConfig base = {});
SimConfig load_config(const std::string& path, SimConfig base = {});

/// Applies `key=value` overrides in order.
void apply_overrides(SimConfig& cfg, const std::vector<std::string>& overrides);

/// Every key with its current value, in file syntax.
std::string dump_config(const SimConfig& cfg);

std::vector<std::string> config_keys();

double dbm_to_watts(double dbm);
double db_to_linear(double db);

}  // namespace uavsplit
