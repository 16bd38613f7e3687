#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vrsim/config.hpp"
#include "vrsim/env.hpp"
#include "vrsim/json.hpp"

namespace vrsim::proto {

inline constexpr int kVersion = 1;
inline constexpr unsigned short kDefaultPort = 4780;

enum class Phase { kAwaitingHello, kReady, kInEpisode, kClosed };

const char* to_string(Phase phase);

/// Error codes carried in the "code" field of error messages.
namespace code {
inline constexpr const char* kMalformed = "malformed";
inline constexpr const char* kUnknownType = "unknown_type";
inline constexpr const char* kSequencing = "sequencing";
inline constexpr const char* kInvalid = "invalid";
inline constexpr const char* kVersion = "version";
inline constexpr const char* kConfigMismatch = "config_mismatch";
}  // namespace code

/// Server side of one connection. Feed it one line at a time (without the LF);
/// it returns the reply lines in order. Any error reply closes the session.
class Session {
 public:
  explicit Session(SimConfig config);

  std::vector<std::string> handle_line(std::string_view line);
  /// Reports a line longer than the transport accepts and closes the session.
  std::vector<std::string> reject_oversized(std::size_t offset);

  Phase phase() const { return phase_; }
  bool closed() const { return phase_ == Phase::kClosed; }
  const std::string& config_hash() const { return hash_; }
  /// Bytes consumed so far, counting each line's LF.
  std::uint64_t bytes_consumed() const { return consumed_; }

 private:
  std::vector<std::string> dispatch(const Json& msg);
  std::string emit(Json msg);
  std::vector<std::string> fail(const char* code, const std::string& message,
                                std::optional<std::uint64_t> offset = std::nullopt);

  std::vector<std::string> on_hello(const Json& msg);
  std::vector<std::string> on_reset(const Json& msg);
  std::vector<std::string> on_act(const Json& msg);

  SimConfig config_;
  std::string hash_;
  Environment env_;
  Phase phase_ = Phase::kAwaitingHello;
  std::int64_t last_client_seq_ = -1;
  std::int64_t next_seq_ = 0;
  std::uint64_t consumed_ = 0;
};

/// The spec message body (without seq), shared by Session and external tools.
Json spec_message(const SimConfig& config);

/// Serves one session over a byte stream (e.g. stdio) until EOF or until an error
/// closes it. Returns false when the session was closed by an error.
bool serve_stream(const SimConfig& config, std::istream& in, std::ostream& out);

/// Line-delimited JSON over TCP. In single-session mode connections are served one
/// at a time; in multi-session mode each connection gets its own thread and environment.
class TcpServer {
 public:
  TcpServer(SimConfig config, unsigned short port, bool multi_session = false,
            const std::string& address = "127.0.0.1");
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  /// Bound port (useful when constructed with port 0).
  unsigned short port() const;
  /// Accepts connections until stop() or until `max_connections` (0 = unlimited) were accepted.
  void run(std::size_t max_connections = 0);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Small fixed configuration used by the reference transcript.
SimConfig reference_config_v1();
/// Client lines of reference script v1: hello, reset(seed 7), then a full episode of
/// scripted SU shares and RS levels.
std::vector<std::string> reference_script_v1(const SimConfig& config);

/// Runs `client_lines` through a fresh session. Client lines are prefixed "> ",
/// server lines "< ", each LF-terminated.
std::string golden_transcript(const SimConfig& config, const std::vector<std::string>& client_lines);

}  // namespace vrsim::proto
