#include "vrsim/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vrsim/error.hpp"

namespace vrsim {

namespace {

constexpr double kSnrScale = 1.0 / 30.0;
constexpr double kMinRatePerHz = 1e-6;

void push_bounded(std::deque<double>& d, double v, std::size_t cap) {
  d.push_back(v);
  while (d.size() > cap) d.pop_front();
}

}  // namespace

void EnvConfig::validate() const {
  if (n_users < 1) throw ConfigError("env.n_users must be >= 1");
  if (!(slot_len > 0)) throw ConfigError("env.slot_len must be > 0");
  if (slots_per_frame < 1) throw ConfigError("env.slots_per_frame must be >= 1");
  if (episode_frames < 1) throw ConfigError("env.episode_frames must be >= 1");
  if (!(deadline_fraction > 0 && deadline_fraction <= 1))
    throw ConfigError("env.deadline_fraction must be in (0, 1]");
  if (signaling_delay_frames != 0 && signaling_delay_frames != 1)
    throw ConfigError("env.signaling_delay_frames must be 0 or 1");
  if (history_slots < 1 || history_frames < 1) throw ConfigError("env.history_slots/history_frames must be >= 1");
  if (packet_bits < 1) throw ConfigError("media.packet_bits must be >= 1");
  channel.validate();
  ladder.validate();
  qoe.validate();
  if (!ladder.contains(initial_level)) throw ConfigError("env.initial_level is not on the ladder");
  if (trace && trace->n_levels() < ladder.size()) throw ConfigError("frame trace has fewer columns than ladder levels");
  if (channel.mode == ChannelMode::kPiecewise && !channel.piecewise_user_offsets_db.empty() &&
      channel.piecewise_user_offsets_db.size() != n_users)
    throw ConfigError("channel.piecewise_user_offsets_db must have one entry per user");
}

Slot EnvConfig::deadline_slots() const {
  return std::max<Slot>(1, std::llround(deadline_fraction * slots_per_frame));
}

Slot frame_interval_slots(double fps, double slot_len) { return std::llround(1.0 / (fps * slot_len)); }

const ObsField& ObsLayout::field(const std::string& name) const {
  for (const auto& f : fields)
    if (f.name == name) return f;
  throw std::out_of_range("no observation field '" + name + "' in " + agent + " layout");
}

std::size_t ObsLayout::index(std::size_t user, const std::string& name, std::size_t i) const {
  const auto& f = field(name);
  if (user >= n_users || i >= f.length) throw std::out_of_range("observation index out of range");
  return user * block + f.offset + i;
}

namespace {

ObsLayout build_layout(std::string agent, std::size_t n_users,
                       std::initializer_list<std::tuple<const char*, std::size_t, double, const char*>> spec) {
  ObsLayout l;
  l.agent = std::move(agent);
  l.n_users = n_users;
  for (const auto& [name, len, scale, unit] : spec) {
    l.fields.push_back({name, l.block, len, scale, unit});
    l.block += len;
  }
  return l;
}

double bits_scale(const EnvConfig& c) { return 1.0 / c.ladder.levels.back().mean_frame_bits; }

}  // namespace

ObsLayout su_layout(const EnvConfig& c) {
  const auto h = static_cast<std::size_t>(c.history_slots);
  return build_layout("su", c.n_users,
                      {{"snr_db_history", h, kSnrScale, "dB"},
                       {"queued_bits", 1, bits_scale(c), "bit"},
                       {"tx_bits_last_slot", 1, bits_scale(c), "bit"},
                       {"prev_share", 1, 1.0, "fraction"},
                       {"remaining_slots", 1, 1.0 / c.slots_per_frame, "slot"}});
}

ObsLayout rs_layout(const EnvConfig& c) {
  const auto h = static_cast<std::size_t>(c.history_frames);
  const double level_scale = c.ladder.size() > 1 ? 1.0 / static_cast<double>(c.ladder.top()) : 1.0;
  return build_layout("rs", c.n_users,
                      {{"frame_snr_db_history", h, kSnrScale, "dB"},
                       {"queued_bits", 1, bits_scale(c), "bit"},
                       {"delivered_history", h, 1.0, "flag"},
                       {"level_history", h, level_scale, "level"},
                       {"frame_delay_history", h, 1.0 / c.slots_per_frame, "slot"},
                       {"loss_rate", 1, 1.0, "fraction"}});
}

Environment::Environment(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  su_layout_ = su_layout(config_);
  rs_layout_ = rs_layout(config_);
}

void Environment::require_started(const char* op) const {
  if (!started_) throw SequencingError(std::string(op) + " before reset");
  if (done_) throw SequencingError(std::string(op) + " after the episode ended");
}

std::pair<Observation, Observation> Environment::reset(std::optional<std::uint64_t> seed) {
  const std::uint64_t s = seed.value_or(config_.seed);
  const auto hs = static_cast<std::size_t>(config_.history_slots);
  const auto hf = static_cast<std::size_t>(config_.history_frames);

  users_.clear();
  users_.reserve(config_.n_users);
  for (std::size_t u = 0; u < config_.n_users; ++u) {
    UserState st{.channel = UserChannel(config_.channel, s, u),
                 .source = FrameSource(config_.ladder, s, u, config_.trace),
                 .frame = std::nullopt};
    st.snr_db_hist.assign(hs, 0.0);
    st.frame_snr_hist.assign(hf, 0.0);
    st.delivered_hist.assign(hf, 0.0);
    st.level_hist.assign(hf, 0.0);
    st.delay_hist.assign(hf, 0.0);
    st.chosen_level = config_.initial_level;
    users_.push_back(std::move(st));
  }
  window_max_rate_.assign(hs, 0.0);
  events_.assign(config_.n_users, {});
  started_ = true;
  done_ = false;
  now_ = 0;
  frame_index_ = 0;
  slot_in_frame_ = 0;
  for (std::size_t u = 0; u < config_.n_users; ++u) enqueue(u, config_.initial_level);
  return {observe_su(), observe_rs()};
}

void Environment::enqueue(std::size_t user, Level level) {
  auto& st = users_[user];
  st.frame = st.source.next_frame(level, now_, config_.deadline_slots());
  st.snr_db_sum = st.rate_sum = st.segment_sum = 0.0;
  st.slots = 0;
  st.consumed = 0;
}

SlotResult Environment::step_slot(std::span<const double> shares_in) {
  require_started("step_slot");
  if (awaiting_frame_step())
    throw SequencingError("step_slot called after " + std::to_string(config_.slots_per_frame) +
                          " slots; step_frame expected");
  const std::size_t n = config_.n_users;
  if (shares_in.size() != n)
    throw ContractViolation("step_slot expects " + std::to_string(n) + " shares, got " +
                            std::to_string(shares_in.size()));
  double sum = 0.0;
  for (double s : shares_in) {
    if (!std::isfinite(s)) throw ContractViolation("step_slot: non-finite share");
    if (s < 0.0) throw ContractViolation("step_slot: negative share");
    sum += s;
  }

  SlotResult out;
  auto& ev = out.events;
  ev.slot = now_;
  ev.shares.assign(shares_in.begin(), shares_in.end());
  // Slack so that n copies of 1/n, which can round to just above 1, are left alone.
  if (sum > 1.0 + 1e-12) {
    for (double& s : ev.shares) s /= sum;
    ev.renormalized = true;
  }
  ev.channel.resize(n);
  ev.capacity_bits.assign(n, 0.0);
  ev.consumed_bits.assign(n, 0);
  ev.queued_bits.assign(n, 0);
  ev.delivered.assign(n, 0);
  ev.failed.assign(n, 0);

  double slot_max_rate = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    auto& st = users_[u];
    const auto& sample = st.channel.sample();
    ev.channel[u] = sample;
    slot_max_rate = std::max(slot_max_rate, sample.rate_per_hz);
    st.snr_db_sum += sample.snr_db();
    st.rate_sum += sample.rate_per_hz;
    if (const double seg = st.channel.segment_mean_db(); !std::isnan(seg)) st.segment_sum += seg;
    ++st.slots;

    ev.capacity_bits[u] = capacity_bits(sample, ev.shares[u], config_.slot_len, config_.channel);
    if (st.frame && st.frame->pending()) {
      auto r = transmit(*st.frame, ev.capacity_bits[u], config_.packet_bits);
      st.frame = r.frame;
      ev.consumed_bits[u] = r.consumed_bits;
      st.consumed += r.consumed_bits;
      if (st.frame->outcome == FrameOutcome::kDelivered) {
        st.frame->delivered_slot = now_;
        ev.delivered[u] = 1;
      }
    }
  }

  ++now_;
  for (std::size_t u = 0; u < n; ++u) {
    auto& st = users_[u];
    if (st.frame && st.frame->pending()) {
      st.frame = expire(*st.frame, now_);
      if (st.frame->outcome == FrameOutcome::kFailed) ev.failed[u] = 1;
    }
    ev.queued_bits[u] = st.frame && st.frame->pending() ? st.frame->remaining_bits : 0;
  }

  // Reward.
  push_bounded(window_max_rate_, slot_max_rate, static_cast<std::size_t>(config_.history_slots));
  const double max_rate = std::max(kMinRatePerHz, *std::max_element(window_max_rate_.begin(), window_max_rate_.end()));
  const double norm = config_.channel.total_bandwidth * max_rate;
  const double granted = std::accumulate(ev.capacity_bits.begin(), ev.capacity_bits.end(), 0.0);
  const double used = static_cast<double>(std::accumulate(ev.consumed_bits.begin(), ev.consumed_bits.end(), Bits{0}));
  double rr_sum = 0.0;
  int rr_count = 0;
  for (const auto& st : users_) {
    if (!st.frame || !st.frame->pending()) continue;
    const auto slots_left = std::max<Slot>(1, st.frame->deadline_slot - now_);
    rr_sum += static_cast<double>(st.frame->remaining_bits) / (static_cast<double>(slots_left) * config_.slot_len) / norm;
    ++rr_count;
  }
  auto& rw = out.reward;
  const auto& w = config_.su_reward;
  rw.frames_delivered = std::accumulate(ev.delivered.begin(), ev.delivered.end(), 0);
  rw.waste_fraction = granted > 0.0 ? (granted - used) / granted : 0.0;
  rw.required_rate = rr_count ? rr_sum / rr_count : 0.0;
  rw.success_term = w.w_success * rw.frames_delivered;
  rw.efficiency_term = 0.0 - w.w_waste * rw.waste_fraction;
  rw.required_rate_term = 0.0 - w.w_required_rate * rw.required_rate;
  rw.total = rw.success_term + rw.efficiency_term + rw.required_rate_term;

  // Histories, then move the channel forward one slot.
  for (std::size_t u = 0; u < n; ++u) {
    auto& st = users_[u];
    st.last_tx_bits = ev.consumed_bits[u];
    st.last_share = ev.shares[u];
    const auto& next = st.channel.advance(config_.slot_len);
    push_bounded(st.snr_db_hist, next.snr_db(), static_cast<std::size_t>(config_.history_slots));
  }
  ++slot_in_frame_;
  out.obs = observe_su();
  return out;
}

FrameRecord Environment::frame_summary(std::size_t user) const {
  if (user >= users_.size()) throw std::out_of_range("user index out of range");
  const auto& st = users_[user];
  FrameRecord r;
  r.frame = frame_index_;
  r.user = user;
  if (!st.frame) return r;
  const Frame& f = *st.frame;
  r.level = f.level;
  r.size_bits = f.size_bits;
  r.consumed_bits = st.consumed;
  r.delivered = f.outcome == FrameOutcome::kDelivered;
  if (r.delivered)
    r.delay_slots = f.delivered_slot + 1 - f.arrival_slot;
  else if (f.outcome == FrameOutcome::kFailed)
    r.delay_slots = f.deadline_slot - f.arrival_slot;
  else
    r.delay_slots = now_ - f.arrival_slot;
  const double k = st.slots > 0 ? static_cast<double>(st.slots) : 1.0;
  r.mean_snr_db = st.snr_db_sum / k;
  r.mean_rate_per_hz = st.rate_sum / k;
  r.segment_mean_db = config_.channel.mode == ChannelMode::kPiecewise ? st.segment_sum / k
                                                                      : std::numeric_limits<double>::quiet_NaN();
  return r;
}

FrameResult Environment::step_frame(std::span<const Level> levels) {
  require_started("step_frame");
  if (!awaiting_frame_step())
    throw SequencingError("step_frame called after " + std::to_string(slot_in_frame_) + " of " +
                          std::to_string(config_.slots_per_frame) + " slots");
  const std::size_t n = config_.n_users;
  if (levels.size() != n)
    throw ContractViolation("step_frame expects " + std::to_string(n) + " levels, got " +
                            std::to_string(levels.size()));
  for (Level l : levels)
    if (!config_.ladder.contains(l)) throw ContractViolation("step_frame: level " + std::to_string(l) + " not on ladder");

  FrameResult out;
  const auto hf = static_cast<std::size_t>(config_.history_frames);
  const auto& q = config_.qoe;
  for (std::size_t u = 0; u < n; ++u) {
    auto& st = users_[u];
    // Deadlines never exceed the frame interval, so nothing is still pending here.
    if (st.frame && st.frame->pending()) {
      st.frame->outcome = FrameOutcome::kFailed;
      st.frame->remaining_bits = 0;
    }
    FrameRecord rec = frame_summary(u);
    out.closed.push_back(rec);

    const Level next = config_.signaling_delay_frames ? st.chosen_level : levels[u];
    st.chosen_level = levels[u];
    out.next_levels.push_back(next);

    const TransitionEvent act{rec.level, next, rec.delivered};
    RsReward r;
    r.level_term = q.w_level * next;
    r.fail_term = rec.delivered ? 0.0 : -q.w_fail;
    r.transition_term = 0.0 - transition_penalty(rec.level, next, q);
    r.total = frame_qoe(act, q);
    out.rewards.push_back(r);

    const Level prev = st.prev_frame_level < 0 ? rec.level : st.prev_frame_level;
    events_[u].push_back({prev, rec.level, rec.delivered});
    st.prev_frame_level = rec.level;

    push_bounded(st.frame_snr_hist, rec.mean_snr_db, hf);
    push_bounded(st.delivered_hist, rec.delivered ? 1.0 : 0.0, hf);
    push_bounded(st.level_hist, static_cast<double>(rec.level), hf);
    push_bounded(st.delay_hist, static_cast<double>(rec.delay_slots), hf);
    ++st.frames_closed;
  }

  ++frame_index_;
  slot_in_frame_ = 0;
  if (frame_index_ >= config_.episode_frames) {
    done_ = true;
  } else {
    for (std::size_t u = 0; u < n; ++u) enqueue(u, out.next_levels[u]);
  }
  out.done = done_;
  out.obs = observe_rs();
  return out;
}

Observation Environment::observe_su() const {
  Observation obs(su_layout_.size(), 0.0);
  if (!started_) return obs;
  const auto& L = su_layout_;
  for (std::size_t u = 0; u < users_.size(); ++u) {
    const auto& st = users_[u];
    const auto& snr = L.field("snr_db_history");
    for (std::size_t i = 0; i < snr.length; ++i) obs[L.index(u, snr.name, i)] = st.snr_db_hist[i] * snr.scale;
    const bool pending = st.frame && st.frame->pending();
    const auto& qb = L.field("queued_bits");
    obs[L.index(u, qb.name)] = pending ? static_cast<double>(st.frame->remaining_bits) * qb.scale : 0.0;
    const auto& tx = L.field("tx_bits_last_slot");
    obs[L.index(u, tx.name)] = static_cast<double>(st.last_tx_bits) * tx.scale;
    obs[L.index(u, "prev_share")] = st.last_share;
    const auto& rem = L.field("remaining_slots");
    obs[L.index(u, rem.name)] = pending ? static_cast<double>(st.frame->deadline_slot - now_) * rem.scale : 0.0;
  }
  return obs;
}

Observation Environment::observe_rs() const {
  Observation obs(rs_layout_.size(), 0.0);
  if (!started_) return obs;
  const auto& L = rs_layout_;
  auto fill = [&](std::size_t u, const char* name, const std::deque<double>& hist) {
    const auto& f = L.field(name);
    for (std::size_t i = 0; i < f.length; ++i) obs[L.index(u, name, i)] = hist[i] * f.scale;
  };
  for (std::size_t u = 0; u < users_.size(); ++u) {
    const auto& st = users_[u];
    fill(u, "frame_snr_db_history", st.frame_snr_hist);
    fill(u, "delivered_history", st.delivered_hist);
    fill(u, "level_history", st.level_hist);
    fill(u, "frame_delay_history", st.delay_hist);
    const auto& qb = L.field("queued_bits");
    const bool pending = st.frame && st.frame->pending();
    obs[L.index(u, qb.name)] = pending ? static_cast<double>(st.frame->remaining_bits) * qb.scale : 0.0;

    const auto window = std::min<std::size_t>(static_cast<std::size_t>(st.frames_closed), st.delivered_hist.size());
    double failed = 0.0;
    for (std::size_t i = st.delivered_hist.size() - window; i < st.delivered_hist.size(); ++i)
      failed += 1.0 - st.delivered_hist[i];
    obs[L.index(u, "loss_rate")] = window ? failed / static_cast<double>(window) : 0.0;
  }
  return obs;
}

const ChannelSample& Environment::channel(std::size_t user) const {
  if (!started_) throw SequencingError("channel() before reset");
  return users_.at(user).channel.sample();
}

const Frame* Environment::current_frame(std::size_t user) const {
  if (user >= users_.size() || !users_[user].frame) return nullptr;
  return &*users_[user].frame;
}

std::vector<PendingDemand> Environment::demand() const {
  std::vector<PendingDemand> d(users_.size());
  for (std::size_t u = 0; u < users_.size(); ++u) {
    const auto* f = current_frame(u);
    if (f && f->pending()) d[u] = {true, f->remaining_bits, f->deadline_slot};
  }
  return d;
}

std::vector<double> Environment::backlogged_rates() const {
  std::vector<double> r(users_.size(), 0.0);
  for (std::size_t u = 0; u < users_.size(); ++u) {
    const auto* f = current_frame(u);
    if (f && f->pending()) r[u] = users_[u].channel.sample().rate_per_hz * config_.channel.total_bandwidth;
  }
  return r;
}

EpisodeMetrics Environment::metrics() const { return session_metrics(events_, config_.qoe); }

}  // namespace vrsim
