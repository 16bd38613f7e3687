#pragma once

#include <cstdint>
#include <random>

namespace vrsim {

/// Seeded random stream with platform-stable draws.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard). The std distributions are implementation-defined, so the
/// uniform and normal transforms are written out here to keep golden
/// transcripts identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  /// Box-Muller, one variate per call.
  double normal(double mean = 0.0, double stddev = 1.0);

  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64-based derivation of independent sub-stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Stream identifiers used with derive_seed.
namespace stream {
inline constexpr std::uint64_t kMobility = 1;
inline constexpr std::uint64_t kShadow = 2;
inline constexpr std::uint64_t kSource = 3;
inline constexpr std::uint64_t kPlacement = 4;
inline constexpr std::uint64_t kFading = 5;
}  // namespace stream

}  // namespace vrsim
