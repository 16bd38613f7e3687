#include "vrsim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vrsim/error.hpp"

namespace vrsim {

std::vector<double> equal_allocation(std::size_t n_users) {
  if (n_users == 0) throw std::invalid_argument("equal_allocation: n_users must be >= 1");
  return std::vector<double>(n_users, 1.0 / static_cast<double>(n_users));
}

PfState PfState::initial(std::size_t n_users, double ewma_horizon) {
  PfState s;
  s.ewma_horizon = ewma_horizon;
  s.avg_throughput.assign(n_users, s.floor);
  return s;
}

std::optional<std::size_t> pf_select(std::span<const double> instant_rates, std::span<const double> avg_throughput) {
  std::optional<std::size_t> best;
  double best_metric = 0.0;
  for (std::size_t u = 0; u < instant_rates.size(); ++u) {
    if (!(instant_rates[u] > 0.0)) continue;
    const double metric = instant_rates[u] / avg_throughput[u];
    if (!best || metric > best_metric) {
      best = u;
      best_metric = metric;
    }
  }
  return best;
}

PfResult pf_allocation(std::span<const double> instant_rates, const PfState& state) {
  if (instant_rates.size() != state.avg_throughput.size())
    throw std::invalid_argument("pf_allocation: rate vector size does not match state");
  for (double r : instant_rates)
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("pf_allocation: rates must be finite and >= 0");

  PfResult out;
  out.state = state;
  out.selected = pf_select(instant_rates, state.avg_throughput);
  if (out.selected) {
    out.shares.assign(instant_rates.size(), 0.0);
    out.shares[*out.selected] = 1.0;
  } else {
    out.shares = equal_allocation(instant_rates.size());
  }

  const double alpha = 1.0 / state.ewma_horizon;
  for (std::size_t u = 0; u < instant_rates.size(); ++u) {
    const double realized = out.shares[u] * instant_rates[u];
    out.state.avg_throughput[u] =
        std::max(state.floor, (1.0 - alpha) * state.avg_throughput[u] + alpha * realized);
  }
  return out;
}

std::vector<double> urgency_allocation(std::span<const PendingDemand> demand, Slot now) {
  std::vector<double> shares(demand.size(), 0.0);
  double total = 0.0;
  for (std::size_t u = 0; u < demand.size(); ++u) {
    const auto& d = demand[u];
    if (!d.pending || d.remaining_bits <= 0) continue;
    const auto slots_left = std::max<Slot>(1, d.deadline_slot - now);
    shares[u] = static_cast<double>(d.remaining_bits) / static_cast<double>(slots_left);
    total += shares[u];
  }
  if (total > 0.0)
    for (double& s : shares) s /= total;
  return shares;
}

void CcParams::validate() const {
  if (!(delay_target > 0)) throw ConfigError("baselines.cc_delay_target must be > 0");
  if (!(beta > 0 && beta < 1)) throw ConfigError("baselines.cc_beta must be in (0, 1)");
  if (!(increase_step >= 0)) throw ConfigError("baselines.cc_increase_step must be >= 0");
  if (!(min_rate > 0 && min_rate <= max_rate)) throw ConfigError("baselines.cc_min_rate must be in (0, cc_max_rate]");
  if (!(initial_rate >= min_rate && initial_rate <= max_rate))
    throw ConfigError("baselines.cc_initial_rate must lie within [cc_min_rate, cc_max_rate]");
}

CcState CcState::initial(const CcParams& params) {
  CcState s;
  s.target_rate = params.initial_rate;
  s.min_rate = params.min_rate;
  s.max_rate = params.max_rate;
  return s;
}

Level level_for_rate(const ResolutionLadder& ladder, double rate, double fps) {
  Level best = 0;
  for (Level l = 0; l <= ladder.top(); ++l)
    if (ladder.at(l).mean_frame_bits * fps <= rate) best = l;
  return best;
}

CcResult cc_step(const CcState& state, const CcFeedback& feedback, const CcParams& params,
                 const ResolutionLadder& ladder, double fps) {
  CcResult out{state, 0};
  CcState& s = out.state;
  if (s.in_flight) {
    const CcFeedback fb = *s.in_flight;
    s.queue_delay_estimate = fb.queue_delay;
    s.last_delivered_bits = fb.delivered_bits;
    if (fb.queue_delay < params.delay_target)
      s.target_rate += params.increase_step;
    else if (fb.queue_delay > params.delay_target)
      s.target_rate *= params.beta;
    s.target_rate = std::clamp(s.target_rate, s.min_rate, s.max_rate);
  }
  s.in_flight = feedback;
  out.level = level_for_rate(ladder, s.target_rate, fps);
  return out;
}

}  // namespace vrsim
