#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vrsim/baselines.hpp"
#include "vrsim/env.hpp"
#include "vrsim/scenario.hpp"

namespace vrsim {

struct MediaParams {
  double bits_per_pixel = 0.2;
  double size_cv = 0.2;
  /// Overrides the pixel-count ladder when non-empty.
  std::vector<double> mean_frame_bits;
  std::vector<std::string> labels;
  /// Frame-size trace CSV; relative paths resolve against the config file.
  std::string trace;
};

struct BaselineParams {
  double pf_horizon = 100.0;
  CcParams cc;
  ThresholdParams threshold;
};

/// Everything one config file describes.
struct SimConfig {
  EnvConfig env;
  MediaParams media;
  BaselineParams baselines;
  /// Directory used to resolve relative paths (the config file's directory).
  std::filesystem::path base_dir;

  /// Rebuilds env.ladder / env.trace from media, then validates everything.
  void finalize();
};

/// Parses the `[section]` / `key = value` format. Unknown keys are errors.
SimConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const SimConfig& config);

/// Stable 64-bit FNV-1a hash of the canonical text, as 16 hex digits.
std::string config_hash(const SimConfig& config);

}  // namespace vrsim
