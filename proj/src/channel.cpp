#include "vrsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "vrsim/error.hpp"
#include "vrsim/format.hpp"

namespace vrsim {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void ChannelParams::validate() const {
  require(carrier_freq > 0, "channel.carrier_freq must be > 0");
  require(total_bandwidth > 0, "channel.total_bandwidth must be > 0");
  require(shadow_std >= 0, "channel.shadow_std must be >= 0");
  require(shadow_corr_dist > 0, "channel.shadow_corr_dist must be > 0");
  require(cell_side > 0, "channel.cell_side must be > 0");
  require(min_distance > 0, "channel.min_distance must be > 0");
  require(pathloss_exponent >= 0, "channel.pathloss_exponent must be >= 0");
  require(speed >= 0, "channel.speed must be >= 0");
  require(heading_std >= 0, "channel.heading_std must be >= 0");
  require(std::isfinite(tx_power) && std::isfinite(noise_psd), "channel.tx_power/noise_psd must be finite");
  if (mode == ChannelMode::kPiecewise) {
    require(!piecewise_means_db.empty(), "channel.piecewise_means_db must not be empty in piecewise mode");
    require(piecewise_segment_slots >= 1, "channel.piecewise_segment_slots must be >= 1");
    require(piecewise_slot_std_db >= 0, "channel.piecewise_slot_std_db must be >= 0");
  }
}

double ChannelSample::snr_db() const { return 10.0 * std::log10(std::max(snr, 1e-30)); }

UserMobilityState step_mobility(const UserMobilityState& state, double dt, const ChannelParams& params,
                                Rng& rng) {
  const double half = params.cell_side / 2.0;
  UserMobilityState next = state;
  next.x += state.speed * dt * std::cos(state.heading);
  next.y += state.speed * dt * std::sin(state.heading);

  // Mirror at the walls until inside; a single step longer than the cell may bounce twice.
  for (int guard = 0; guard < 64 && (std::abs(next.x) > half || std::abs(next.y) > half); ++guard) {
    if (next.x > half) {
      next.x = 2.0 * half - next.x;
      next.heading = std::numbers::pi - next.heading;
    } else if (next.x < -half) {
      next.x = -2.0 * half - next.x;
      next.heading = std::numbers::pi - next.heading;
    }
    if (next.y > half) {
      next.y = 2.0 * half - next.y;
      next.heading = -next.heading;
    } else if (next.y < -half) {
      next.y = -2.0 * half - next.y;
      next.heading = -next.heading;
    }
  }
  next.x = std::clamp(next.x, -half, half);
  next.y = std::clamp(next.y, -half, half);

  if (params.heading_std > 0) next.heading += rng.normal(0.0, params.heading_std);
  next.heading = wrap_angle(next.heading);
  return next;
}

double distance_3d(const UserMobilityState& user, const ChannelParams& params) {
  const double dh = params.bs_antenna_height - params.ue_antenna_height;
  return std::sqrt(user.x * user.x + user.y * user.y + dh * dh);
}

double reference_loss_db(const ChannelParams& params) {
  return 20.0 * std::log10(4.0 * std::numbers::pi * params.carrier_freq / kSpeedOfLight);
}

double path_loss(double distance_3d, const ChannelParams& params) {
  const double d = std::max(distance_3d, params.min_distance);
  return reference_loss_db(params) + 10.0 * params.pathloss_exponent * std::log10(d);
}

double shadow_step(double prev_shadow, double dist_moved, const ChannelParams& params, Rng& rng) {
  const double rho = std::exp(-dist_moved / params.shadow_corr_dist);
  if (rho == 1.0) return prev_shadow;
  return rho * prev_shadow + std::sqrt(1.0 - rho * rho) * rng.normal(0.0, params.shadow_std);
}

double noise_power_dbm(const ChannelParams& params) {
  return params.noise_psd + 10.0 * std::log10(params.total_bandwidth);
}

double rate_per_hz(double snr) { return std::log2(1.0 + snr); }

ChannelSample make_sample(double pathloss_db, double shadow_db, const ChannelParams& params,
                          double fading_gain) {
  ChannelSample s;
  s.pathloss = pathloss_db;
  s.shadow = shadow_db;
  const double snr_db = params.tx_power - pathloss_db - shadow_db - noise_power_dbm(params);
  s.snr = std::pow(10.0, snr_db / 10.0) * fading_gain;
  s.rate_per_hz = rate_per_hz(s.snr);
  return s;
}

ChannelSample sample_channel(const UserMobilityState& user, const ChannelSample& prev, double dist_moved,
                             const ChannelParams& params, Rng& rng, Rng* fading_rng) {
  const double shadow = shadow_step(prev.shadow, dist_moved, params, rng);
  const double gain = params.rayleigh_fading ? (fading_rng ? *fading_rng : rng).exponential(1.0) : 1.0;
  return make_sample(path_loss(distance_3d(user, params), params), shadow, params, gain);
}

double capacity_bits(const ChannelSample& sample, double bandwidth_share, double slot_len,
                     const ChannelParams& params) {
  if (bandwidth_share <= 0.0) return 0.0;
  return bandwidth_share * params.total_bandwidth * slot_len * sample.rate_per_hz;
}

UserChannel::UserChannel(const ChannelParams& params, std::uint64_t seed, std::size_t user_id)
    : params_(params),
      user_id_(user_id),
      mobility_rng_(derive_seed(seed, stream::kMobility, user_id)),
      shadow_rng_(derive_seed(seed, stream::kShadow, user_id)),
      fading_rng_(derive_seed(seed, stream::kFading, user_id)) {
  if (params_.mode == ChannelMode::kPiecewise) {
    sample_ = piecewise_sample();
    return;
  }
  Rng placement(derive_seed(seed, stream::kPlacement, user_id));
  const double half = params_.cell_side / 2.0;
  mobility_.x = (2.0 * placement.uniform() - 1.0) * half;
  mobility_.y = (2.0 * placement.uniform() - 1.0) * half;
  mobility_.heading = wrap_angle((2.0 * placement.uniform() - 1.0) * std::numbers::pi);
  mobility_.speed = params_.speed;
  const double shadow0 = shadow_rng_.normal(0.0, params_.shadow_std);
  const double gain = params_.rayleigh_fading ? fading_rng_.exponential(1.0) : 1.0;
  sample_ = make_sample(path_loss(distance_3d(mobility_, params_), params_), shadow0, params_, gain);
}

const ChannelSample& UserChannel::advance(double dt) {
  ++slot_;
  if (params_.mode == ChannelMode::kPiecewise) {
    sample_ = piecewise_sample();
    return sample_;
  }
  mobility_ = step_mobility(mobility_, dt, params_, mobility_rng_);
  sample_ = sample_channel(mobility_, sample_, mobility_.speed * dt, params_, shadow_rng_, &fading_rng_);
  return sample_;
}

double UserChannel::segment_mean_db() const {
  if (params_.mode != ChannelMode::kPiecewise) return std::numeric_limits<double>::quiet_NaN();
  const auto& means = params_.piecewise_means_db;
  const auto seg = static_cast<std::size_t>(slot_ / params_.piecewise_segment_slots) % means.size();
  const double offset =
      user_id_ < params_.piecewise_user_offsets_db.size() ? params_.piecewise_user_offsets_db[user_id_] : 0.0;
  return means[seg] + offset;
}

ChannelSample UserChannel::piecewise_sample() {
  double snr_db = segment_mean_db();
  if (params_.piecewise_slot_std_db > 0) snr_db += shadow_rng_.normal(0.0, params_.piecewise_slot_std_db);
  // Express the draw as an equivalent path loss so logs stay comparable across modes.
  const double pathloss = params_.tx_power - noise_power_dbm(params_) - snr_db;
  const double gain = params_.rayleigh_fading ? fading_rng_.exponential(1.0) : 1.0;
  return make_sample(pathloss, 0.0, params_, gain);
}

void write_channel_trace_header(std::ostream& os) { os << "slot,user_id,pathloss_db,shadow_db,snr_db\n"; }

void write_channel_trace_row(std::ostream& os, std::int64_t slot, std::size_t user_id,
                             const ChannelSample& sample) {
  os << slot << ',' << user_id << ',' << format_double(sample.pathloss) << ',' << format_double(sample.shadow)
     << ',' << format_double(sample.snr_db()) << '\n';
}

}  // namespace vrsim
