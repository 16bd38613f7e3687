#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrsim/baselines.hpp"
#include "vrsim/channel.hpp"
#include "vrsim/media.hpp"
#include "vrsim/qoe.hpp"

namespace vrsim {

/// Weights of the per-slot scheduling reward.
struct SuRewardWeights {
  double w_success = 1.0;
  double w_waste = 0.5;
  double w_required_rate = 0.5;
};

struct EnvConfig {
  std::size_t n_users = 3;
  double slot_len = 1e-3;          // s
  int slots_per_frame = 20;
  std::int64_t episode_frames = 3000;
  std::uint64_t seed = 1;
  Level initial_level = 0;
  /// Frame deadline as a fraction of the frame interval, in (0, 1].
  double deadline_fraction = 1.0;
  /// 0: a level chosen at a boundary applies to the next frame; 1: to the one after.
  int signaling_delay_frames = 0;
  int history_slots = 8;
  int history_frames = 8;
  Bits packet_bits = 12000;

  ChannelParams channel;
  ResolutionLadder ladder = ResolutionLadder::standard();
  /// Optional frame-size trace; synthetic log-normal sizes when null.
  std::shared_ptr<const FrameTrace> trace;
  QoEParams qoe;
  SuRewardWeights su_reward;

  void validate() const;
  double frame_interval() const { return slot_len * slots_per_frame; }
  double fps() const { return 1.0 / frame_interval(); }
  Slot deadline_slots() const;
};

/// Slots per frame for a frame rate and slot length (rounded to nearest).
Slot frame_interval_slots(double fps, double slot_len);

using Observation = std::vector<double>;

struct ObsField {
  std::string name;
  std::size_t offset = 0;  // within the per-user block
  std::size_t length = 1;
  double scale = 1.0;      // value = raw * scale
  std::string unit;
};

/// User-major layout: element (u, field, i) lives at u * block + field.offset + i.
struct ObsLayout {
  std::string agent;
  std::size_t n_users = 0;
  std::size_t block = 0;
  std::vector<ObsField> fields;

  std::size_t size() const { return n_users * block; }
  const ObsField& field(const std::string& name) const;
  std::size_t index(std::size_t user, const std::string& name, std::size_t i = 0) const;
};

ObsLayout su_layout(const EnvConfig& config);
ObsLayout rs_layout(const EnvConfig& config);

/// Per-slot scheduling reward. Terms carry their weight and sign; total is their sum.
struct SuReward {
  double success_term = 0.0;
  double efficiency_term = 0.0;
  double required_rate_term = 0.0;
  double total = 0.0;
  // Unweighted quantities behind the terms.
  int frames_delivered = 0;
  double waste_fraction = 0.0;
  double required_rate = 0.0;
};

/// Per-user frame reward. Terms carry their weight and sign; total is their sum.
struct RsReward {
  double level_term = 0.0;
  double fail_term = 0.0;
  double transition_term = 0.0;
  double total = 0.0;
};

struct SlotEvents {
  Slot slot = 0;
  std::vector<double> shares;  // after renormalization
  bool renormalized = false;
  std::vector<ChannelSample> channel;  // sample each user transmitted on
  std::vector<double> capacity_bits;
  std::vector<Bits> consumed_bits;
  std::vector<Bits> queued_bits;  // after transmission and expiry
  std::vector<int> delivered;
  std::vector<int> failed;
};

struct SlotResult {
  Observation obs;
  SuReward reward;
  SlotEvents events;
};

/// Outcome summary of one user's frame.
struct FrameRecord {
  std::int64_t frame = 0;
  std::size_t user = 0;
  Level level = 0;
  Bits size_bits = 0;
  Bits consumed_bits = 0;
  bool delivered = false;
  Slot delay_slots = 0;
  double mean_snr_db = 0.0;
  double mean_rate_per_hz = 0.0;
  /// Mean SNR of the channel segment (piecewise channel mode only, NaN otherwise).
  double segment_mean_db = 0.0;
};

struct FrameResult {
  Observation obs;
  std::vector<RsReward> rewards;
  std::vector<FrameRecord> closed;
  std::vector<Level> next_levels;
  bool done = false;
};

/// Dual-timescale environment: slots_per_frame slot steps, then one frame step.
class Environment {
 public:
  explicit Environment(EnvConfig config);

  /// Fresh episode; uses config().seed when `seed` is empty.
  std::pair<Observation, Observation> reset(std::optional<std::uint64_t> seed = std::nullopt);

  SlotResult step_slot(std::span<const double> shares);
  FrameResult step_frame(std::span<const Level> levels);

  Observation observe_su() const;
  Observation observe_rs() const;

  const EnvConfig& config() const { return config_; }
  const ObsLayout& layout_su() const { return su_layout_; }
  const ObsLayout& layout_rs() const { return rs_layout_; }
  std::size_t n_users() const { return config_.n_users; }

  bool started() const { return started_; }
  bool done() const { return done_; }
  bool awaiting_frame_step() const { return started_ && !done_ && slot_in_frame_ == config_.slots_per_frame; }
  Slot now() const { return now_; }
  std::int64_t frame_index() const { return frame_index_; }
  int slot_in_frame() const { return slot_in_frame_; }

  const ChannelSample& channel(std::size_t user) const;
  /// Current frame of `user` (pending, delivered or failed); null before reset.
  const Frame* current_frame(std::size_t user) const;
  std::vector<PendingDemand> demand() const;
  /// Full-band bit rate per user, zero for users with nothing queued.
  std::vector<double> backlogged_rates() const;
  /// Summary of the user's current frame so far.
  FrameRecord frame_summary(std::size_t user) const;

  const std::vector<std::vector<TransitionEvent>>& events() const { return events_; }
  EpisodeMetrics metrics() const;

 private:
  struct UserState {
    UserChannel channel;
    FrameSource source;
    std::optional<Frame> frame{};
    Level chosen_level = 0;  // last level requested at a frame boundary

    // Accumulators for the current frame.
    double snr_db_sum = 0.0;
    double rate_sum = 0.0;
    double segment_sum = 0.0;
    int slots = 0;
    Bits consumed = 0;
    Level prev_frame_level = -1;

    // Slot-scale history.
    std::deque<double> snr_db_hist{};
    Bits last_tx_bits = 0;
    double last_share = 0.0;

    // Frame-scale history.
    std::deque<double> frame_snr_hist{};
    std::deque<double> delivered_hist{};
    std::deque<double> level_hist{};
    std::deque<double> delay_hist{};
    int frames_closed = 0;
  };

  void require_started(const char* op) const;
  void enqueue(std::size_t user, Level level);

  EnvConfig config_;
  ObsLayout su_layout_;
  ObsLayout rs_layout_;
  std::vector<UserState> users_;
  std::deque<double> window_max_rate_;
  std::vector<std::vector<TransitionEvent>> events_;

  bool started_ = false;
  bool done_ = false;
  Slot now_ = 0;
  std::int64_t frame_index_ = 0;
  int slot_in_frame_ = 0;
};

}  // namespace vrsim
