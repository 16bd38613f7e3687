#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vrsim/media.hpp"

namespace vrsim {

/// Shares of 1/n each. Throws std::invalid_argument for n == 0.
std::vector<double> equal_allocation(std::size_t n_users);

// ---------------------------------------------------------------------------
// Proportional fair

struct PfState {
  std::vector<double> avg_throughput;  // bit/s, EWMA
  double ewma_horizon = 100.0;         // slots
  double floor = 1.0;                  // bit/s

  static PfState initial(std::size_t n_users, double ewma_horizon = 100.0);
};

struct PfResult {
  std::vector<double> shares;
  PfState state;
  /// Served user, empty when every rate was zero and the band was split equally.
  std::optional<std::size_t> selected;
};

/// Index maximizing rate/avg; ties go to the lowest index. Empty if all rates are zero.
std::optional<std::size_t> pf_select(std::span<const double> instant_rates, std::span<const double> avg_throughput);

/// Single-winner PF slot: the whole band goes to pf_select's user, then the EWMA
/// is updated with each user's realized rate.
PfResult pf_allocation(std::span<const double> instant_rates, const PfState& state);

// ---------------------------------------------------------------------------
// Deadline urgency

struct PendingDemand {
  bool pending = false;
  Bits remaining_bits = 0;
  Slot deadline_slot = 0;
};

/// Shares proportional to remaining_bits / max(1, deadline - now) over users
/// with a pending frame. All zero when nothing is pending.
std::vector<double> urgency_allocation(std::span<const PendingDemand> demand, Slot now);

// ---------------------------------------------------------------------------
// Delay-based AIMD rate control driving ladder choice (SCReAM-like)

struct CcParams {
  double delay_target = 0.010;    // s
  double beta = 0.8;              // multiplicative decrease
  double increase_step = 100e3;   // bit/s per feedback
  double min_rate = 1e6;          // bit/s
  double max_rate = 500e6;        // bit/s
  double initial_rate = 1e6;      // bit/s

  void validate() const;
};

struct CcFeedback {
  double delivered_bits = 0.0;
  double queue_delay = 0.0;  // s
};

struct CcState {
  double target_rate = 0.0;
  double queue_delay_estimate = 0.0;
  double min_rate = 0.0;
  double max_rate = 0.0;
  double last_delivered_bits = 0.0;
  /// Feedback received but not yet acted on (one-frame delay).
  std::optional<CcFeedback> in_flight;

  static CcState initial(const CcParams& params);
};

struct CcResult {
  CcState state;
  Level level = 0;
};

/// Highest level whose mean bitrate fits in `rate`; level 0 when none does.
Level level_for_rate(const ResolutionLadder& ladder, double rate, double fps);

/// Applies the previously queued feedback, queues `feedback`, and picks a level.
CcResult cc_step(const CcState& state, const CcFeedback& feedback, const CcParams& params,
                 const ResolutionLadder& ladder, double fps);

}  // namespace vrsim
