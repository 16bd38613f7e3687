#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "vrsim/rng.hpp"

namespace vrsim {

using Level = int;
using Slot = std::int64_t;
using Bits = std::int64_t;

struct LadderLevel {
  std::string label;
  double mean_frame_bits = 0.0;
  double size_cv = 0.0;
};

/// Ordered resolution levels; index 0 is the lowest quality.
struct ResolutionLadder {
  std::vector<LadderLevel> levels;

  /// 480P..8K with frame size proportional to pixel count.
  static ResolutionLadder standard(double bits_per_pixel = 0.2, double size_cv = 0.2);

  std::size_t size() const { return levels.size(); }
  Level top() const { return static_cast<Level>(levels.size()) - 1; }
  bool contains(Level level) const { return level >= 0 && level < static_cast<Level>(levels.size()); }
  const LadderLevel& at(Level level) const;

  void validate() const;
};

enum class FrameOutcome { kPending, kDelivered, kFailed };

const char* to_string(FrameOutcome outcome);

struct Frame {
  std::int64_t frame_id = 0;
  std::size_t user_id = 0;
  Level level = 0;
  Bits size_bits = 0;
  Slot arrival_slot = 0;
  Slot deadline_slot = 0;
  Bits remaining_bits = 0;
  FrameOutcome outcome = FrameOutcome::kPending;
  /// Slot index at whose end the last bit arrived; -1 until delivered.
  Slot delivered_slot = -1;

  bool pending() const { return outcome == FrameOutcome::kPending; }
};

/// Per-level frame size sequences, one column per ladder level.
struct FrameTrace {
  std::vector<std::vector<Bits>> columns;

  std::size_t n_levels() const { return columns.size(); }
  std::size_t n_frames() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// Parses the `l0,l1,...` CSV layout. Errors carry the 1-based line number.
FrameTrace parse_trace(std::istream& in);
FrameTrace load_trace(const std::filesystem::path& path);

/// Frame generator for one user: cyclic trace playback or log-normal sizes.
class FrameSource {
 public:
  FrameSource(ResolutionLadder ladder, std::uint64_t seed, std::size_t user_id,
              std::shared_ptr<const FrameTrace> trace = nullptr);

  /// Throws ContractViolation when `level` is not on the ladder.
  Frame next_frame(Level level, Slot now, Slot deadline_slots);

  const ResolutionLadder& ladder() const { return ladder_; }

 private:
  Bits draw_size(Level level);

  ResolutionLadder ladder_;
  std::size_t user_id_;
  Rng rng_;
  std::shared_ptr<const FrameTrace> trace_;
  std::size_t cursor_ = 0;
  std::int64_t next_id_ = 0;
};

struct TransmitResult {
  Frame frame;
  Bits consumed_bits = 0;
};

/// Sends whole packets of `packet_bits` out of `budget_bits`. The final
/// packet of a frame may be shorter than a full packet.
TransmitResult transmit(const Frame& frame, double budget_bits, Bits packet_bits);

/// Marks a pending frame failed once `now` reaches its deadline with bits left.
Frame expire(const Frame& frame, Slot now);

}  // namespace vrsim
