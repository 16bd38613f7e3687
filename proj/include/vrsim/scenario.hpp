#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "vrsim/baselines.hpp"
#include "vrsim/env.hpp"

namespace vrsim {

/// Per-slot bandwidth allocation controller.
class AllocationPolicy {
 public:
  virtual ~AllocationPolicy() = default;
  virtual std::string name() const = 0;
  virtual void reset(const Environment&) {}
  virtual std::vector<double> allocate(const Environment& env) = 0;
};

/// Per-frame resolution controller, called at each frame boundary before step_frame.
class ResolutionPolicy {
 public:
  virtual ~ResolutionPolicy() = default;
  virtual std::string name() const = 0;
  virtual void reset(const Environment&) {}
  virtual std::vector<Level> choose(const Environment& env) = 0;
};

class EqualAllocator final : public AllocationPolicy {
 public:
  std::string name() const override { return "equal"; }
  std::vector<double> allocate(const Environment& env) override;
};

/// PF over backlogged users (users with nothing queued report a zero rate).
class PfAllocator final : public AllocationPolicy {
 public:
  explicit PfAllocator(double ewma_horizon = 100.0) : horizon_(ewma_horizon) {}
  std::string name() const override { return "pf"; }
  void reset(const Environment& env) override;
  std::vector<double> allocate(const Environment& env) override;
  const PfState& state() const { return state_; }

 private:
  double horizon_;
  PfState state_;
};

class UrgencyAllocator final : public AllocationPolicy {
 public:
  std::string name() const override { return "urgency"; }
  std::vector<double> allocate(const Environment& env) override;
};

class FixedResolution final : public ResolutionPolicy {
 public:
  explicit FixedResolution(Level level) : level_(level) {}
  std::string name() const override { return "fixed:" + std::to_string(level_); }
  std::vector<Level> choose(const Environment& env) override;

 private:
  Level level_;
};

/// One AIMD controller per user fed with the closing frame's delay.
class CcResolution final : public ResolutionPolicy {
 public:
  explicit CcResolution(CcParams params = {}) : params_(params) {}
  std::string name() const override { return "cc"; }
  void reset(const Environment& env) override;
  std::vector<Level> choose(const Environment& env) override;
  const std::vector<CcState>& states() const { return states_; }

 private:
  CcParams params_;
  std::vector<CcState> states_;
};

struct ThresholdParams {
  /// Frames over which a switch penalty is amortized.
  double horizon_frames = 10.0;
  /// Recent frames used to estimate the failure probability of each level.
  int window_frames = 10;
  /// A level is judged to fail on a frame whose equal-share capacity is below
  /// mean_bits * (1 + margin_cv * size_cv).
  double margin_cv = 2.0;
};

/// Penalty-aware threshold policy: switches only when the expected gain over
/// the horizon exceeds the QoE transition penalty, so larger theta_down
/// means fewer switches.
class ThresholdResolution final : public ResolutionPolicy {
 public:
  ThresholdResolution(QoEParams qoe, ThresholdParams params = {}) : qoe_(qoe), params_(params) {}
  std::string name() const override;
  void reset(const Environment& env) override;
  std::vector<Level> choose(const Environment& env) override;

 private:
  QoEParams qoe_;
  ThresholdParams params_;
  std::vector<std::deque<double>> capacity_window_;
};

/// Wraps a callable, e.g. an external agent.
class CallbackAllocation final : public AllocationPolicy {
 public:
  using Fn = std::function<std::vector<double>(const Environment&)>;
  CallbackAllocation(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::vector<double> allocate(const Environment& env) override { return fn_(env); }

 private:
  std::string name_;
  Fn fn_;
};

class CallbackResolution final : public ResolutionPolicy {
 public:
  using Fn = std::function<std::vector<Level>(const Environment&)>;
  CallbackResolution(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  std::vector<Level> choose(const Environment& env) override { return fn_(env); }

 private:
  std::string name_;
  Fn fn_;
};

/// Optional CSV sinks for one episode. Headers are written by write_log_headers.
struct ScenarioSinks {
  std::ostream* slot_log = nullptr;
  std::ostream* frame_log = nullptr;
  std::ostream* channel_trace = nullptr;
  int episode = 0;
};

void write_log_headers(const ScenarioSinks& sinks);

struct ScenarioResult {
  EpisodeMetrics metrics;
  std::vector<std::vector<TransitionEvent>> events;
};

/// Runs one full episode. Invalid policy actions raise ScenarioAborted.
ScenarioResult run_scenario(const EnvConfig& config, AllocationPolicy& allocation, ResolutionPolicy& resolution,
                            std::uint64_t seed, const ScenarioSinks& sinks = {});

}  // namespace vrsim
