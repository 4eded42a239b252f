#include "uavsplit/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavsplit {

const char* mode_name(Mode m) { return m == Mode::kCompute ? "CT" : "DT"; }

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("SystemParams: ") + what);
}

}  // namespace

void SystemParams::validate() const {
  require(bandwidth_hz > 0, "bandwidth_W must be > 0");
  require(slot_s > 0, "slot_tau must be > 0");
  require(distance_m > 0, "distance_d must be > 0");
  require(noise_w > 0, "noise_var must be > 0");
  require(ref_gain > 0, "ref_gain_rho must be > 0");
  require(p_max_w > 0, "p_max must be > 0");
  require(deadline_slots >= 1, "deadline_C must be >= 1");
  require(raw_bits > 0, "raw_bits_S must be > 0");
  require(feat_h >= 1 && feat_w >= 1 && quant_bits >= 1, "feature map dims must be >= 1");
  require(batt_cap_j >= 0 && batt_init_j >= 0, "battery energies must be >= 0");
  require(batt_init_j <= batt_cap_j, "batt_init_E0 must not exceed batt_cap_Emax");
  require(arrival_prob >= 0 && arrival_prob <= 1, "arrival_prob_q must be in [0,1]");
  require(solar_eff >= 0 && panel_area_m2 >= 0 && irradiance_w_m2 >= 0,
          "solar parameters must be >= 0");
  require(absorb_per_m >= 0 && cloud_m >= 0, "cloud parameters must be >= 0");
  require(chip_k >= 0, "chip_k must be >= 0");
  require(f_max_hz > 0, "f_max must be > 0");
  require(flops >= 0, "flops_nt must be >= 0");
  require(cores >= 1 && vec_bits >= 1 && os_bits >= 1, "processor widths must be >= 1");
}

double cloud_attenuation(double beta, double d_cloud) {
  if (beta < 0 || d_cloud < 0) throw std::domain_error("cloud_attenuation: negative input");
  return std::exp(-beta * d_cloud);
}

double solar_power(const SystemParams& p) {
  return p.solar_eff * p.panel_area_m2 * p.irradiance_w_m2 *
         cloud_attenuation(p.absorb_per_m, p.cloud_m);
}

double achievable_rate(double power_w, double gain_h, double bandwidth_hz) {
  if (power_w < 0) throw std::domain_error("achievable_rate: negative power");
  return bandwidth_hz * std::log2(1.0 + power_w * gain_h);
}

double effective_gain(double g, const SystemParams& p) {
  return p.ref_gain * g / (p.noise_w * p.distance_m * p.distance_m);
}

double compute_time(double f_hz, const SystemParams& p) {
  if (!(f_hz > 0)) throw std::domain_error("compute_time: speed must be > 0");
  return p.flops * p.os_bits / (f_hz * p.cores * p.vec_bits);
}

int compute_slots(double f_hz, const SystemParams& p) {
  const double slots = compute_time(f_hz, p) / p.slot_s;
  // absorb round-off so an exact multiple of the slot does not round up
  return static_cast<int>(std::ceil(slots * (1.0 - 1e-12)));
}

double compute_energy(double f_hz, const SystemParams& p) {
  if (f_hz < 0) throw std::domain_error("compute_energy: negative speed");
  return p.chip_k * f_hz * f_hz * p.flops * p.os_bits / (static_cast<double>(p.cores) * p.vec_bits);
}

double task_payload(Mode mode, const SystemParams& p) {
  if (mode == Mode::kCompute) {
    return static_cast<double>(p.feat_h) * p.feat_w * p.quant_bits;
  }
  return p.raw_bits;
}

BatteryStep battery_step(BatteryState state, double harvest_j, double e_trans_j,
                         double e_comp_j, double capacity_j) {
  if (e_trans_j < 0 || e_comp_j < 0 || harvest_j < 0) {
    throw std::domain_error("battery_step: negative energy term");
  }
  BatteryStep out;
  const double raw = state.energy_j + harvest_j - e_trans_j - e_comp_j;
  if (raw < 0) {
    out.next = state;
    out.depleted = true;
    return out;
  }
  if (raw > capacity_j) {
    out.overflow_j = raw - capacity_j;
    out.next.energy_j = capacity_j;
  } else {
    out.next.energy_j = raw;
  }
  return out;
}

RayleighChannel::RayleighChannel(double mean) : mean_(mean) {
  if (!(mean > 0)) throw std::invalid_argument("RayleighChannel: mean must be > 0");
}

double RayleighChannel::sample_gain(Rng& rng) const {
  std::exponential_distribution<double> exp_dist(1.0 / mean_);
  return exp_dist(rng);
}

ConstantChannel::ConstantChannel(double g) : g_(g) {
  if (!(g > 0)) throw std::invalid_argument("ConstantChannel: gain must be > 0");
}

std::unique_ptr<ChannelModel> make_channel_model(const std::string& name) {
  if (name == "rayleigh") return std::make_unique<RayleighChannel>(1.0);
  if (name == "constant") return std::make_unique<ConstantChannel>(1.0);
  throw std::invalid_argument("unknown channel model '" + name + "'");
}

ChannelSample sample_channel(const ChannelModel& model, const SystemParams& params, Rng& rng) {
  ChannelSample s;
  s.small_scale_g = model.sample_gain(rng);
  s.effective_h = effective_gain(s.small_scale_g, params);
  return s;
}

Task make_task(int id, int arrive_slot, Mode mode, double f_hz, const SystemParams& params) {
  Task t;
  t.id = id;
  t.arrive_slot = arrive_slot;
  t.mode = mode;
  t.payload_bits = task_payload(mode, params);
  if (mode == Mode::kCompute) {
    if (!(f_hz > 0) || f_hz > params.f_max_hz) {
      throw std::domain_error("make_task: CT needs 0 < f <= f_max");
    }
    t.comp_speed_hz = f_hz;
    t.comp_slots = compute_slots(f_hz, params);
  }
  t.deadline_slot = arrive_slot + params.deadline_slots;
  t.start_slot = arrive_slot + t.comp_slots;
  return t;
}

QueueDelays update_queue_delays(const Task* prev, const Task& cur) {
  QueueDelays d;
  if (prev != nullptr) {
    if (prev->arrive_slot > cur.arrive_slot) {
      throw std::invalid_argument("update_queue_delays: tasks out of arrival order");
    }
    d.comp_wait = std::max(0, prev->arrive_slot + prev->queue_comp_slots +
                                  prev->comp_slots - cur.arrive_slot);
  }
  const int ready = cur.arrive_slot + d.comp_wait + cur.comp_slots;
  int start = ready;
  if (prev != nullptr) start = std::max(ready, prev->start_slot + prev->trans_slots);
  d.start = start;
  d.trans_wait = std::max(0, start - ready);
  return d;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over a mixed key
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace uavsplit
