#include "vrsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "vrsim/error.hpp"
#include "vrsim/format.hpp"

namespace vrsim {

std::vector<double> EqualAllocator::allocate(const Environment& env) { return equal_allocation(env.n_users()); }

void PfAllocator::reset(const Environment& env) { state_ = PfState::initial(env.n_users(), horizon_); }

std::vector<double> PfAllocator::allocate(const Environment& env) {
  if (state_.avg_throughput.size() != env.n_users()) reset(env);
  auto rates = env.backlogged_rates();
  auto r = pf_allocation(rates, state_);
  state_ = std::move(r.state);
  return std::move(r.shares);
}

std::vector<double> UrgencyAllocator::allocate(const Environment& env) {
  const auto demand = env.demand();
  return urgency_allocation(demand, env.now());
}

std::vector<Level> FixedResolution::choose(const Environment& env) {
  return std::vector<Level>(env.n_users(), level_);
}

void CcResolution::reset(const Environment& env) {
  params_.validate();
  states_.assign(env.n_users(), CcState::initial(params_));
}

std::vector<Level> CcResolution::choose(const Environment& env) {
  if (states_.size() != env.n_users()) reset(env);
  const auto& cfg = env.config();
  std::vector<Level> levels(env.n_users());
  for (std::size_t u = 0; u < env.n_users(); ++u) {
    const auto rec = env.frame_summary(u);
    // Queueing delay beyond the one-slot minimum transfer time.
    const double delay = static_cast<double>(std::max<Slot>(0, rec.delay_slots - 1)) * cfg.slot_len;
    auto r = cc_step(states_[u], {static_cast<double>(rec.consumed_bits), delay}, params_, cfg.ladder, cfg.fps());
    states_[u] = std::move(r.state);
    levels[u] = r.level;
  }
  return levels;
}

std::string ThresholdResolution::name() const { return "threshold:" + format_double(qoe_.theta_down); }

void ThresholdResolution::reset(const Environment& env) { capacity_window_.assign(env.n_users(), {}); }

std::vector<Level> ThresholdResolution::choose(const Environment& env) {
  if (capacity_window_.size() != env.n_users()) reset(env);
  const auto& cfg = env.config();
  const double equal_share_bits = cfg.channel.total_bandwidth / static_cast<double>(env.n_users()) *
                                  cfg.frame_interval();
  std::vector<Level> levels(env.n_users());
  for (std::size_t u = 0; u < env.n_users(); ++u) {
    const auto rec = env.frame_summary(u);
    auto& window = capacity_window_[u];
    window.push_back(equal_share_bits * rec.mean_rate_per_hz);
    while (window.size() > static_cast<std::size_t>(params_.window_frames)) window.pop_front();

    const Level current = rec.level;
    Level best = current;
    double best_score = -std::numeric_limits<double>::infinity();
    for (Level l = 0; l <= cfg.ladder.top(); ++l) {
      const auto& lvl = cfg.ladder.at(l);
      const double need = lvl.mean_frame_bits * (1.0 + params_.margin_cv * lvl.size_cv);
      const auto short_frames = std::count_if(window.begin(), window.end(), [&](double c) { return c < need; });
      const double p_fail = static_cast<double>(short_frames) / static_cast<double>(window.size());
      const double score = qoe_.w_level * l - qoe_.w_fail * p_fail -
                           transition_penalty(current, l, qoe_) / params_.horizon_frames;
      // Strict improvement required, and the current level wins ties.
      if (score > best_score || (score == best_score && l == current)) {
        best = l;
        best_score = score;
      }
    }
    levels[u] = best;
  }
  return levels;
}

void write_log_headers(const ScenarioSinks& sinks) {
  if (sinks.slot_log)
    *sinks.slot_log << "episode,slot,frame,user,share,renormalized,snr_db,rate_per_hz,capacity_bits,consumed_bits,"
                       "queued_bits,delivered,failed,su_frames_delivered,su_waste_fraction,su_required_rate,"
                       "su_success_term,su_efficiency_term,su_required_rate_term,su_total\n";
  if (sinks.frame_log)
    *sinks.frame_log << "episode,frame,user,level,size_bits,consumed_bits,delivered,delay_slots,mean_snr_db,"
                        "mean_rate_per_hz,segment_mean_db,next_level,rs_level_term,rs_fail_term,"
                        "rs_transition_term,rs_total\n";
  if (sinks.channel_trace) write_channel_trace_header(*sinks.channel_trace);
}

namespace {

std::string fmt_or_empty(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

void log_slot(const ScenarioSinks& sinks, std::int64_t frame, const SlotResult& r) {
  const auto& e = r.events;
  if (sinks.slot_log) {
    auto& os = *sinks.slot_log;
    const auto& w = r.reward;
    for (std::size_t u = 0; u < e.shares.size(); ++u) {
      os << sinks.episode << ',' << e.slot << ',' << frame << ',' << u << ',' << format_double(e.shares[u]) << ','
         << (e.renormalized ? 1 : 0) << ',' << format_double(e.channel[u].snr_db()) << ','
         << format_double(e.channel[u].rate_per_hz) << ',' << format_double(e.capacity_bits[u]) << ','
         << e.consumed_bits[u] << ',' << e.queued_bits[u] << ',' << e.delivered[u] << ',' << e.failed[u] << ','
         << w.frames_delivered << ',' << format_double(w.waste_fraction) << ',' << format_double(w.required_rate)
         << ',' << format_double(w.success_term) << ',' << format_double(w.efficiency_term) << ','
         << format_double(w.required_rate_term) << ',' << format_double(w.total) << '\n';
    }
  }
  if (sinks.channel_trace)
    for (std::size_t u = 0; u < e.channel.size(); ++u)
      write_channel_trace_row(*sinks.channel_trace, e.slot, u, e.channel[u]);
}

void log_frame(const ScenarioSinks& sinks, const FrameResult& r) {
  if (!sinks.frame_log) return;
  auto& os = *sinks.frame_log;
  for (std::size_t u = 0; u < r.closed.size(); ++u) {
    const auto& c = r.closed[u];
    const auto& w = r.rewards[u];
    os << sinks.episode << ',' << c.frame << ',' << c.user << ',' << c.level << ',' << c.size_bits << ','
       << c.consumed_bits << ',' << (c.delivered ? 1 : 0) << ',' << c.delay_slots << ','
       << format_double(c.mean_snr_db) << ',' << format_double(c.mean_rate_per_hz) << ','
       << fmt_or_empty(c.segment_mean_db) << ',' << r.next_levels[u] << ',' << format_double(w.level_term) << ','
       << format_double(w.fail_term) << ',' << format_double(w.transition_term) << ',' << format_double(w.total)
       << '\n';
  }
}

}  // namespace

ScenarioResult run_scenario(const EnvConfig& config, AllocationPolicy& allocation, ResolutionPolicy& resolution,
                            std::uint64_t seed, const ScenarioSinks& sinks) {
  Environment env(config);
  env.reset(seed);
  allocation.reset(env);
  resolution.reset(env);

  while (!env.done()) {
    for (int s = 0; s < config.slots_per_frame; ++s) {
      auto shares = allocation.allocate(env);
      SlotResult r;
      try {
        r = env.step_slot(shares);
      } catch (const ContractViolation& e) {
        throw ScenarioAborted("allocation policy '" + allocation.name() + "' at slot " + std::to_string(env.now()) +
                              ": " + e.what());
      }
      log_slot(sinks, env.frame_index(), r);
    }
    auto levels = resolution.choose(env);
    FrameResult fr;
    try {
      fr = env.step_frame(levels);
    } catch (const ContractViolation& e) {
      throw ScenarioAborted("resolution policy '" + resolution.name() + "' at frame " +
                            std::to_string(env.frame_index()) + ": " + e.what());
    }
    log_frame(sinks, fr);
  }
  return {env.metrics(), env.events()};
}

}  // namespace vrsim
