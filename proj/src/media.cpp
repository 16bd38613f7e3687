#include "vrsim/media.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vrsim/error.hpp"

namespace vrsim {

ResolutionLadder ResolutionLadder::standard(double bits_per_pixel, double size_cv) {
  struct Res {
    const char* label;
    double w, h;
  };
  static constexpr Res kRes[] = {{"480P", 854, 480},   {"720P", 1280, 720},  {"1080P", 1920, 1080},
                                 {"1440P", 2560, 1440}, {"4K", 3840, 2160},   {"5K", 5120, 2880},
                                 {"8K", 7680, 4320}};
  ResolutionLadder ladder;
  for (const auto& r : kRes) ladder.levels.push_back({r.label, bits_per_pixel * r.w * r.h, size_cv});
  return ladder;
}

const LadderLevel& ResolutionLadder::at(Level level) const {
  if (!contains(level)) throw ContractViolation("resolution level " + std::to_string(level) + " not on ladder");
  return levels[static_cast<std::size_t>(level)];
}

void ResolutionLadder::validate() const {
  if (levels.empty()) throw ConfigError("ladder must have at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i].mean_frame_bits > 0)) throw ConfigError("ladder mean_frame_bits must be > 0");
    if (!(levels[i].size_cv >= 0)) throw ConfigError("ladder size_cv must be >= 0");
    if (i > 0 && !(levels[i].mean_frame_bits > levels[i - 1].mean_frame_bits))
      throw ConfigError("ladder mean_frame_bits must be strictly increasing");
  }
}

const char* to_string(FrameOutcome outcome) {
  switch (outcome) {
    case FrameOutcome::kPending:
      return "pending";
    case FrameOutcome::kDelivered:
      return "delivered";
    case FrameOutcome::kFailed:
      return "failed";
  }
  return "?";
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

FrameTrace parse_trace(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  FrameTrace trace;

  // Header.
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError("no frames");
  auto header = split_csv(trim(line));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) != "l" + std::to_string(i))
      throw ParseError("header column " + std::to_string(i) + " must be 'l" + std::to_string(i) + "'", lineno);
  }
  trace.columns.resize(header.size());

  while (std::getline(in, line)) {
    ++lineno;
    auto row = trim(line);
    if (row.empty()) continue;
    auto fields = split_csv(row);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(fields.size()),
                       lineno);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      auto f = trim(fields[i]);
      Bits v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw ParseError("malformed size '" + std::string(f) + "' in column l" + std::to_string(i), lineno);
      if (v <= 0) throw ParseError("frame size must be positive in column l" + std::to_string(i), lineno);
      trace.columns[i].push_back(v);
    }
  }
  if (trace.n_frames() == 0) throw ParseError("no frames");
  return trace;
}

FrameTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file " + path.string());
  try {
    return parse_trace(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

FrameSource::FrameSource(ResolutionLadder ladder, std::uint64_t seed, std::size_t user_id,
                         std::shared_ptr<const FrameTrace> trace)
    : ladder_(std::move(ladder)),
      user_id_(user_id),
      rng_(derive_seed(seed, stream::kSource, user_id)),
      trace_(std::move(trace)) {
  if (trace_) {
    if (trace_->n_levels() < ladder_.size())
      throw ConfigError("trace has " + std::to_string(trace_->n_levels()) + " columns, ladder needs " +
                        std::to_string(ladder_.size()));
    // Users start at different points of the shared trace.
    cursor_ = (user_id * 7919) % trace_->n_frames();
  }
}

Bits FrameSource::draw_size(Level level) {
  const auto& lvl = ladder_.at(level);
  if (trace_) return trace_->columns[static_cast<std::size_t>(level)][cursor_];
  if (lvl.size_cv == 0.0) return std::max<Bits>(1, std::llround(lvl.mean_frame_bits));
  const double sigma2 = std::log1p(lvl.size_cv * lvl.size_cv);
  const double mu = std::log(lvl.mean_frame_bits) - sigma2 / 2.0;
  return std::max<Bits>(1, std::llround(std::exp(rng_.normal(mu, std::sqrt(sigma2)))));
}

Frame FrameSource::next_frame(Level level, Slot now, Slot deadline_slots) {
  if (!ladder_.contains(level)) throw ContractViolation("resolution level " + std::to_string(level) + " not on ladder");
  if (deadline_slots < 1) throw ContractViolation("deadline must be at least one slot after arrival");
  Frame f;
  f.frame_id = next_id_++;
  f.user_id = user_id_;
  f.level = level;
  f.size_bits = draw_size(level);
  f.arrival_slot = now;
  f.deadline_slot = now + deadline_slots;
  f.remaining_bits = f.size_bits;
  if (trace_) cursor_ = (cursor_ + 1) % trace_->n_frames();
  return f;
}

TransmitResult transmit(const Frame& frame, double budget_bits, Bits packet_bits) {
  if (!frame.pending()) throw ContractViolation("transmit on a frame that is no longer pending");
  if (!(budget_bits >= 0.0)) throw ContractViolation("transmit budget must be >= 0");
  if (packet_bits <= 0) throw ContractViolation("packet size must be > 0");

  TransmitResult r{frame, 0};
  if (budget_bits >= static_cast<double>(frame.remaining_bits)) {
    r.consumed_bits = frame.remaining_bits;
  } else {
    const auto packets = static_cast<Bits>(std::floor(budget_bits / static_cast<double>(packet_bits)));
    r.consumed_bits = std::min(frame.remaining_bits, packets * packet_bits);
  }
  r.frame.remaining_bits -= r.consumed_bits;
  if (r.frame.remaining_bits == 0) r.frame.outcome = FrameOutcome::kDelivered;
  return r;
}

Frame expire(const Frame& frame, Slot now) {
  if (!frame.pending() || now < frame.deadline_slot || frame.remaining_bits == 0) return frame;
  Frame f = frame;
  f.outcome = FrameOutcome::kFailed;
  f.remaining_bits = 0;
  return f;
}

}  // namespace vrsim
