#pragma once

#include <span>
#include <vector>

#include "vrsim/media.hpp"

namespace vrsim {

/// Asymmetric, magnitude-dependent QoE weights.
///
/// A downgrade costs theta_down per level, an upgrade theta_up per level,
/// and any jump larger than jump_threshold levels is scaled by kappa_large.
struct QoEParams {
  double w_level = 1.0;
  double theta_down = 1.0;
  double theta_up = 0.3;
  double kappa_large = 2.0;
  int jump_threshold = 2;
  double w_fail = 10.0;

  void validate() const;
};

struct TransitionEvent {
  Level prev_level = 0;
  Level new_level = 0;
  bool delivered = true;
};

double transition_penalty(Level prev, Level next, const QoEParams& p);

/// w_level * new_level - w_fail * [failed] - transition_penalty(prev, new).
double frame_qoe(const TransitionEvent& event, const QoEParams& p);

struct UserMetrics {
  double avg_level = 0.0;
  double switching_rate = 0.0;
  double success_rate = 0.0;
  std::size_t frames = 0;
};

struct EpisodeMetrics {
  /// Mean level over delivered frames (0 when nothing was delivered).
  double avg_level = 0.0;
  double switching_rate = 0.0;
  double success_rate = 0.0;
  double mean_qoe = 0.0;
  std::size_t frames = 0;
  std::size_t delivered = 0;
  std::size_t failed = 0;
  std::size_t switches = 0;
  std::vector<UserMetrics> per_user;
  /// Jain index over per-user avg_level and success_rate.
  double jain_level = 1.0;
  double jain_success = 1.0;
};

/// Aggregates one event stream. Throws std::invalid_argument when empty.
EpisodeMetrics session_metrics(std::span<const TransitionEvent> events, const QoEParams& p = {});

/// Aggregates per-user event streams and fills the per-user and fairness fields.
EpisodeMetrics session_metrics(const std::vector<std::vector<TransitionEvent>>& per_user, const QoEParams& p = {});

/// Event stream for a raw level sequence; the first frame counts as a non-switch.
std::vector<TransitionEvent> events_from_levels(std::span<const Level> levels, const std::vector<bool>& delivered);

double jain_index(std::span<const double> values);

}  // namespace vrsim
