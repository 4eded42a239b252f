#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace uavsplit {

using Rng = std::mt19937_64;

/// Transmission pattern for one task. The numeric value doubles as the
/// agent's action index.
enum class Mode : int {
  kDirect = 0,   ///< DT: raw sample sent as-is.
  kCompute = 1,  ///< CT: feature map computed on board, then sent.
};

const char* mode_name(Mode m);

/// Physical and stochastic constants of the UAV link, solar panel, battery,
/// processor and sensor traffic. All values are SI and linear; the config
/// loader converts noise from dBm and the reference gain from dB.
struct SystemParams {
  // link
  double bandwidth_hz = 2e6;
  double slot_s = 0.1;
  double distance_m = 100.0;
  double noise_w = 1e-14;   // -110 dBm
  double ref_gain = 1e-6;   // -60 dB
  double p_max_w = 5e-6;
  int deadline_slots = 10;

  // payloads
  double raw_bits = 20000.0;
  int feat_h = 24;
  int feat_w = 32;
  int quant_bits = 32;

  // battery
  double batt_cap_j = 2e-4;
  double batt_init_j = 1e-4;

  // traffic
  double arrival_prob = 0.3;

  // solar
  double solar_eff = 0.2;
  double panel_area_m2 = 4e-8;
  double irradiance_w_m2 = 1000.0;
  double absorb_per_m = 0.01;
  double cloud_m = 10.0;

  // processor
  double chip_k = 1e-31;
  double f_max_hz = 1e9;
  double flops = 8e8;
  int cores = 4;
  int vec_bits = 256;
  int os_bits = 64;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// e^(-beta * d_cloud).
double cloud_attenuation(double beta, double d_cloud);

/// Constant harvested power P_s in watts.
double solar_power(const SystemParams& params);

/// Energy harvested over one slot.
inline double slot_harvest(const SystemParams& params) {
  return params.slot_s * solar_power(params);
}

/// W * log2(1 + p * h) in bits/s.
double achievable_rate(double power_w, double gain_h, double bandwidth_hz);

/// Bits delivered in one slot at the given power and effective gain.
inline double slot_bits(double power_w, double gain_h, const SystemParams& params) {
  return params.slot_s * achievable_rate(power_w, gain_h, params.bandwidth_hz);
}

/// Effective gain h = rho * g / (sigma^2 * d^2) in 1/W.
double effective_gain(double small_scale_g, const SystemParams& params);

/// Feature-map extraction time in seconds for speed f.
double compute_time(double f_hz, const SystemParams& params);

/// Feature-map extraction time in whole slots (ceiling over the slot length).
int compute_slots(double f_hz, const SystemParams& params);

/// k * f^2 * n_t * n_s / (N_c * n_v). Zero for f = 0.
double compute_energy(double f_hz, const SystemParams& params);

/// Payload in bits for the given mode.
double task_payload(Mode mode, const SystemParams& params);

struct BatteryState {
  double energy_j = 0.0;
};

struct BatteryStep {
  BatteryState next;
  bool depleted = false;  ///< The requested spend would have driven E below zero; state unchanged.
  double overflow_j = 0.0;
};

/// E' = min(E + harvest - e_tx - e_comp, capacity). A step that would go
/// negative is refused: `next` equals `state` and `depleted` is set.
BatteryStep battery_step(BatteryState state, double harvest_j, double e_trans_j,
                         double e_comp_j, double capacity_j);

struct ChannelSample {
  double small_scale_g = 0.0;
  double effective_h = 0.0;
};

/// Small-scale fading distribution. Implementations must be stateless so
/// that a sampler can be shared across worker threads.
class ChannelModel {
 public:
  virtual ~ChannelModel() = default;
  virtual double sample_gain(Rng& rng) const = 0;
  virtual double mean_gain() const = 0;
  virtual std::string name() const = 0;
};

/// Rayleigh fading: power gain g ~ Exp(mean).
class RayleighChannel final : public ChannelModel {
 public:
  explicit RayleighChannel(double mean = 1.0);
  double sample_gain(Rng& rng) const override;
  double mean_gain() const override { return mean_; }
  std::string name() const override { return "rayleigh"; }

 private:
  double mean_;
};

/// Zero-variance channel, g is always the same value.
class ConstantChannel final : public ChannelModel {
 public:
  explicit ConstantChannel(double g = 1.0);
  double sample_gain(Rng&) const override { return g_; }
  double mean_gain() const override { return g_; }
  std::string name() const override { return "constant"; }

 private:
  double g_;
};

std::unique_ptr<ChannelModel> make_channel_model(const std::string& name);

ChannelSample sample_channel(const ChannelModel& model, const SystemParams& params, Rng& rng);

/// One classification job as it moves through the UAV.
struct Task {
  int id = 0;
  int arrive_slot = 0;
  Mode mode = Mode::kDirect;
  double payload_bits = 0.0;
  double comp_speed_hz = 0.0;
  int comp_slots = 0;
  int start_slot = 0;       ///< first slot the task may transmit
  int trans_slots = 0;      ///< slots spent transmitting
  int queue_comp_slots = 0;
  int queue_trans_slots = 0;
  int deadline_slot = 0;    ///< exclusive: last usable slot is deadline_slot - 1

  int ready_slot() const { return arrive_slot + queue_comp_slots + comp_slots; }
};

/// Builds a task at admission time; the caller fills in the queue delays.
Task make_task(int id, int arrive_slot, Mode mode, double f_hz, const SystemParams& params);

struct QueueDelays {
  int comp_wait = 0;   ///< t^QC
  int trans_wait = 0;  ///< t^QT
  int start = 0;       ///< t^S
};

/// Computation- and transmission-queue delays of `cur` given its FIFO
/// predecessor (nullptr for the first task). The predecessor must already
/// carry its own delays and transmission time.
QueueDelays update_queue_delays(const Task* prev, const Task& cur);

/// Derives an independent 64-bit seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace uavsplit
