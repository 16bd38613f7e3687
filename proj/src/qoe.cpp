#include "vrsim/qoe.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "vrsim/error.hpp"

namespace vrsim {

void QoEParams::validate() const {
  if (!(theta_up >= 0)) throw ConfigError("qoe.theta_up must be >= 0");
  if (!(theta_down > theta_up)) throw ConfigError("qoe.theta_down must be > qoe.theta_up");
  if (!(kappa_large >= 1)) throw ConfigError("qoe.kappa_large must be >= 1");
  if (!(w_fail > 0)) throw ConfigError("qoe.w_fail must be > 0");
  if (jump_threshold < 1) throw ConfigError("qoe.jump_threshold must be >= 1");
  if (!std::isfinite(w_level)) throw ConfigError("qoe.w_level must be finite");
}

double transition_penalty(Level prev, Level next, const QoEParams& p) {
  const int delta = next - prev;
  if (delta == 0) return 0.0;
  const int magnitude = std::abs(delta);
  const double m = magnitude > p.jump_threshold ? p.kappa_large : 1.0;
  const double theta = delta < 0 ? p.theta_down : p.theta_up;
  return theta * magnitude * m;
}

double frame_qoe(const TransitionEvent& event, const QoEParams& p) {
  return p.w_level * event.new_level - (event.delivered ? 0.0 : p.w_fail) -
         transition_penalty(event.prev_level, event.new_level, p);
}

namespace {

struct Tally {
  std::size_t frames = 0, delivered = 0, switches = 0;
  double level_sum = 0.0, qoe_sum = 0.0;

  void add(const TransitionEvent& e, const QoEParams& p) {
    ++frames;
    if (e.delivered) {
      ++delivered;
      level_sum += e.new_level;
    }
    if (e.prev_level != e.new_level) ++switches;
    qoe_sum += frame_qoe(e, p);
  }
};

}  // namespace

EpisodeMetrics session_metrics(std::span<const TransitionEvent> events, const QoEParams& p) {
  if (events.empty()) throw std::invalid_argument("session_metrics: empty event sequence");
  Tally t;
  for (const auto& e : events) t.add(e, p);
  EpisodeMetrics m;
  m.frames = t.frames;
  m.delivered = t.delivered;
  m.failed = t.frames - t.delivered;
  m.switches = t.switches;
  m.avg_level = t.delivered ? t.level_sum / static_cast<double>(t.delivered) : 0.0;
  m.switching_rate = static_cast<double>(t.switches) / static_cast<double>(t.frames);
  m.success_rate = static_cast<double>(t.delivered) / static_cast<double>(t.frames);
  m.mean_qoe = t.qoe_sum / static_cast<double>(t.frames);
  return m;
}

EpisodeMetrics session_metrics(const std::vector<std::vector<TransitionEvent>>& per_user, const QoEParams& p) {
  std::vector<TransitionEvent> all;
  for (const auto& u : per_user) all.insert(all.end(), u.begin(), u.end());
  EpisodeMetrics m = session_metrics(all, p);

  std::vector<double> levels, successes;
  for (const auto& u : per_user) {
    UserMetrics um;
    if (!u.empty()) {
      const auto s = session_metrics(u, p);
      um = {s.avg_level, s.switching_rate, s.success_rate, s.frames};
    }
    m.per_user.push_back(um);
    levels.push_back(um.avg_level);
    successes.push_back(um.success_rate);
  }
  m.jain_level = jain_index(levels);
  m.jain_success = jain_index(successes);
  return m;
}

std::vector<TransitionEvent> events_from_levels(std::span<const Level> levels, const std::vector<bool>& delivered) {
  if (levels.size() != delivered.size()) throw std::invalid_argument("levels/delivered length mismatch");
  std::vector<TransitionEvent> out;
  out.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    out.push_back({i == 0 ? levels[0] : levels[i - 1], levels[i], delivered[i]});
  return out;
}

double jain_index(std::span<const double> values) {
  if (values.empty()) return 1.0;
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  if (sq == 0.0) return 1.0;
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

}  // namespace vrsim
