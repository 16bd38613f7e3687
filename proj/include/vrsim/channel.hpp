#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "vrsim/rng.hpp"

namespace vrsim {

enum class ChannelMode {
  /// Random-walk users, log-distance path loss, correlated shadowing.
  kMobility,
  /// Piecewise-constant mean SNR per segment plus per-slot Gaussian jitter.
  kPiecewise,
};

/// Radio and mobility parameters. Units: Hz, dBm, dBm/Hz, m, dB, m/s, rad.
struct ChannelParams {
  double carrier_freq = 3.5e9;
  double noise_psd = -174.0;
  double tx_power = 30.0;
  double total_bandwidth = 100e6;
  double bs_antenna_height = 4.0;
  double ue_antenna_height = 1.5;
  double shadow_std = 8.0;
  double shadow_corr_dist = 50.0;
  double pathloss_exponent = 3.5;
  double cell_side = 100.0;
  double min_distance = 1.0;

  double speed = 1.0;
  /// Std of the per-step heading increment.
  double heading_std = 0.1;
  /// Multiplies linear SNR by an Exp(1) draw each slot.
  bool rayleigh_fading = false;

  ChannelMode mode = ChannelMode::kMobility;
  std::vector<double> piecewise_means_db;
  std::vector<double> piecewise_user_offsets_db;
  std::int64_t piecewise_segment_slots = 1000;
  double piecewise_slot_std_db = 0.0;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// Position relative to the base station at the cell center.
struct UserMobilityState {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double heading = 0.0;
};

struct ChannelSample {
  double pathloss = 0.0;     // dB
  double shadow = 0.0;       // dB
  double snr = 0.0;          // linear
  double rate_per_hz = 0.0;  // bit/s/Hz

  double snr_db() const;
};

UserMobilityState step_mobility(const UserMobilityState& state, double dt, const ChannelParams& params,
                                Rng& rng);

double distance_3d(const UserMobilityState& user, const ChannelParams& params);

/// Free-space loss at 1 m for the carrier, in dB.
double reference_loss_db(const ChannelParams& params);

/// Log-distance path loss anchored at the 1 m free-space loss.
/// Distances below params.min_distance are clamped.
double path_loss(double distance_3d, const ChannelParams& params);

/// Gudmundson AR(1) shadowing update driven by the distance moved.
double shadow_step(double prev_shadow, double dist_moved, const ChannelParams& params, Rng& rng);

/// Thermal noise over the full band, in dBm.
double noise_power_dbm(const ChannelParams& params);

double rate_per_hz(double snr);

/// Builds a sample from the link budget terms (plus an optional linear fading gain).
ChannelSample make_sample(double pathloss_db, double shadow_db, const ChannelParams& params,
                          double fading_gain = 1.0);

/// Advances shadowing by `dist_moved` and recomputes SNR at the user's position.
/// Fading draws come from `fading_rng` when given, otherwise from `rng` after the shadow draw.
ChannelSample sample_channel(const UserMobilityState& user, const ChannelSample& prev, double dist_moved,
                             const ChannelParams& params, Rng& rng, Rng* fading_rng = nullptr);

/// Bits deliverable in one slot with an orthogonal `bandwidth_share` of the band.
double capacity_bits(const ChannelSample& sample, double bandwidth_share, double slot_len,
                     const ChannelParams& params);

/// Per-user channel state owned by the environment.
class UserChannel {
 public:
  UserChannel(const ChannelParams& params, std::uint64_t seed, std::size_t user_id);

  const ChannelSample& sample() const { return sample_; }
  const UserMobilityState& mobility() const { return mobility_; }
  std::int64_t slot() const { return slot_; }

  /// Advances one slot of length dt and returns the new sample.
  const ChannelSample& advance(double dt);

  /// Mean SNR in dB of the current piecewise segment; NaN outside piecewise mode.
  double segment_mean_db() const;

 private:
  ChannelSample piecewise_sample();

  ChannelParams params_;
  std::size_t user_id_;
  Rng mobility_rng_;
  Rng shadow_rng_;
  Rng fading_rng_;
  UserMobilityState mobility_;
  ChannelSample sample_;
  std::int64_t slot_ = 0;
};

void write_channel_trace_header(std::ostream& os);
void write_channel_trace_row(std::ostream& os, std::int64_t slot, std::size_t user_id,
                             const ChannelSample& sample);

}  // namespace vrsim
