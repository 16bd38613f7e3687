#pragma once

#include <stdexcept>
#include <string>

namespace vrsim {

/// Invalid configuration or parameter set.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke an operation's precondition (e.g. transmitting on a closed frame).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Slot/frame steps issued out of the dual-timescale order.
class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A policy produced an action the environment cannot execute.
class ScenarioAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vrsim
