#include "vrsim/proto.hpp"

#include <boost/asio.hpp>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "vrsim/error.hpp"

namespace vrsim::proto {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLineBytes = 16u << 20;

bool is_integer(const Json& v) { return v.is_number_integer() || v.is_number_unsigned(); }

}  // namespace

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kAwaitingHello: return "awaiting_hello";
    case Phase::kReady: return "ready";
    case Phase::kInEpisode: return "in_episode";
    case Phase::kClosed: return "closed";
  }
  return "?";
}

Json spec_message(const SimConfig& config) {
  const auto& e = config.env;
  return {{"type", "spec"},
          {"proto", kVersion},
          {"config_hash", config_hash(config)},
          {"n_users", e.n_users},
          {"action_dim_su", e.n_users},
          {"action_dim_rs", e.ladder.size()},
          {"slots_per_frame", e.slots_per_frame},
          {"episode_frames", e.episode_frames},
          {"slot_len", e.slot_len},
          {"ladder", to_json(e.ladder)},
          {"obs_su", to_json(su_layout(e))},
          {"obs_rs", to_json(rs_layout(e))}};
}

Session::Session(SimConfig config) : config_(std::move(config)), hash_(vrsim::config_hash(config_)), env_(config_.env) {}

std::string Session::emit(Json msg) {
  msg["seq"] = next_seq_++;
  return canonical_dump(msg);
}

std::vector<std::string> Session::fail(const char* code, const std::string& message,
                                       std::optional<std::uint64_t> offset) {
  Json msg = {{"type", "error"}, {"code", code}, {"message", message}};
  if (offset) msg["offset"] = *offset;
  phase_ = Phase::kClosed;
  return {emit(std::move(msg))};
}

std::vector<std::string> Session::reject_oversized(std::size_t offset) {
  if (closed()) return {};
  return fail(code::kMalformed, "line exceeds " + std::to_string(kMaxLineBytes) + " bytes", offset);
}

std::vector<std::string> Session::handle_line(std::string_view line) {
  if (closed()) return {};
  const std::uint64_t start = consumed_;
  consumed_ += line.size() + 1;

  Json msg;
  try {
    msg = Json::parse(line.begin(), line.end());
  } catch (const Json::parse_error& e) {
    const std::uint64_t at = e.byte > 0 ? e.byte - 1 : 0;
    return fail(code::kMalformed, "invalid JSON", start + std::min<std::uint64_t>(at, line.size()));
  }
  if (!msg.is_object()) return fail(code::kMalformed, "message must be a JSON object", start);
  const auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) return fail(code::kMalformed, "missing string field 'type'", start);
  const auto seq = msg.find("seq");
  if (seq == msg.end() || !is_integer(*seq)) return fail(code::kMalformed, "missing integer field 'seq'", start);
  const auto s = seq->get<std::int64_t>();
  if (s <= last_client_seq_)
    return fail(code::kSequencing, "seq " + std::to_string(s) + " does not increase past " +
                                       std::to_string(last_client_seq_));
  last_client_seq_ = s;
  return dispatch(msg);
}

std::vector<std::string> Session::dispatch(const Json& msg) {
  const auto& type = msg.at("type").get_ref<const std::string&>();
  if (type == "hello") return on_hello(msg);
  if (type == "reset") return on_reset(msg);
  if (type == "act") return on_act(msg);
  if (type == "spec" || type == "obs" || type == "reward" || type == "done" || type == "error")
    return fail(code::kSequencing, "'" + type + "' is sent by the server only");
  return fail(code::kUnknownType, "unknown message type '" + type + "'");
}

std::vector<std::string> Session::on_hello(const Json& msg) {
  if (phase_ != Phase::kAwaitingHello)
    return fail(code::kSequencing, std::string("hello not allowed in phase ") + to_string(phase_));
  const auto proto = msg.find("proto");
  if (proto == msg.end() || !is_integer(*proto) || proto->get<std::int64_t>() != kVersion)
    return fail(code::kVersion, "server speaks proto " + std::to_string(kVersion));
  const auto hash = msg.find("config_hash");
  if (hash != msg.end() && (!hash->is_string() || hash->get<std::string>() != hash_))
    return fail(code::kConfigMismatch, "server config hash is " + hash_);
  phase_ = Phase::kReady;
  return {emit(spec_message(config_))};
}

std::vector<std::string> Session::on_reset(const Json& msg) {
  if (phase_ != Phase::kReady)
    return fail(code::kSequencing, std::string("reset not allowed in phase ") + to_string(phase_));
  std::optional<std::uint64_t> seed;
  if (const auto it = msg.find("seed"); it != msg.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
      return fail(code::kInvalid, "seed must be a non-negative integer");
    seed = it->get<std::uint64_t>();
  }
  auto [su, rs] = env_.reset(seed);
  phase_ = Phase::kInEpisode;
  const Json frame = env_.frame_index();
  const Json slot = env_.now();
  return {emit({{"type", "obs"}, {"agent", "su"}, {"obs", su}, {"slot", slot}, {"frame", frame}}),
          emit({{"type", "obs"}, {"agent", "rs"}, {"obs", rs}, {"slot", slot}, {"frame", frame}})};
}

std::vector<std::string> Session::on_act(const Json& msg) {
  if (phase_ != Phase::kInEpisode)
    return fail(code::kSequencing, std::string("act not allowed in phase ") + to_string(phase_));
  const auto agent = msg.find("agent");
  if (agent == msg.end() || !agent->is_string() || (*agent != "su" && *agent != "rs"))
    return fail(code::kInvalid, "act needs agent \"su\" or \"rs\"");
  const std::string expected = env_.awaiting_frame_step() ? "rs" : "su";
  if (*agent != expected) return fail(code::kSequencing, "expected an " + expected + " act");
  const auto n = env_.n_users();

  if (expected == "su") {
    const auto shares = msg.find("shares");
    if (shares == msg.end() || !shares->is_array() || shares->size() != n)
      return fail(code::kInvalid, "su act needs 'shares', an array of " + std::to_string(n) + " numbers");
    std::vector<double> v;
    for (const auto& x : *shares) {
      if (!x.is_number()) return fail(code::kInvalid, "shares must be numbers");
      v.push_back(x.get<double>());
    }
    SlotResult r;
    try {
      r = env_.step_slot(v);
    } catch (const ContractViolation& e) {
      return fail(code::kInvalid, e.what());
    }
    return {emit({{"type", "obs"},
                  {"agent", "su"},
                  {"obs", r.obs},
                  {"slot", env_.now()},
                  {"frame", env_.frame_index()}}),
            emit({{"type", "reward"}, {"agent", "su"}, {"reward", to_json(r.reward)}, {"renormalized", r.events.renormalized}})};
  }

  const auto levels = msg.find("levels");
  if (levels == msg.end() || !levels->is_array() || levels->size() != n)
    return fail(code::kInvalid, "rs act needs 'levels', an array of " + std::to_string(n) + " integers");
  std::vector<Level> v;
  for (const auto& x : *levels) {
    if (!is_integer(x)) return fail(code::kInvalid, "levels must be integers");
    const auto l = x.get<std::int64_t>();
    if (l < 0 || l > env_.config().ladder.top())
      return fail(code::kInvalid, "level " + std::to_string(l) + " outside the ladder");
    v.push_back(static_cast<Level>(l));
  }
  FrameResult r;
  try {
    r = env_.step_frame(v);
  } catch (const ContractViolation& e) {
    return fail(code::kInvalid, e.what());
  }
  Json rewards = Json::array();
  for (const auto& w : r.rewards) rewards.push_back(to_json(w));
  const Json frame = env_.frame_index();
  const Json slot = env_.now();
  std::vector<std::string> out;
  out.push_back(emit({{"type", "obs"}, {"agent", "rs"}, {"obs", r.obs}, {"slot", slot}, {"frame", frame}}));
  out.push_back(
      emit({{"type", "obs"}, {"agent", "su"}, {"obs", env_.observe_su()}, {"slot", slot}, {"frame", frame}}));
  out.push_back(emit({{"type", "reward"}, {"agent", "rs"}, {"rewards", rewards}}));
  if (r.done) {
    out.push_back(emit({{"type", "done"}, {"frames", frame}, {"metrics", to_json(env_.metrics())}}));
    phase_ = Phase::kReady;
  }
  return out;
}

bool serve_stream(const SimConfig& config, std::istream& in, std::ostream& out) {
  Session session(config);
  std::string line;
  while (!session.closed() && std::getline(in, line)) {
    for (const auto& reply : session.handle_line(line)) out << reply << '\n';
    out.flush();
  }
  return !session.closed();
}

namespace {

void serve_socket(tcp::socket socket, const SimConfig& config) {
  Session session(config);
  asio::streambuf buf(kMaxLineBytes);
  boost::system::error_code ec;
  while (!session.closed()) {
    const std::size_t n = asio::read_until(socket, buf, '\n', ec);
    std::vector<std::string> replies;
    if (ec == asio::error::not_found) {
      replies = session.reject_oversized(session.bytes_consumed());
    } else if (ec) {
      break;
    } else {
      auto begin = asio::buffers_begin(buf.data());
      std::string line(begin, begin + static_cast<std::ptrdiff_t>(n - 1));
      buf.consume(n);
      replies = session.handle_line(line);
    }
    std::string payload;
    for (const auto& r : replies) payload += r + '\n';
    asio::write(socket, asio::buffer(payload), ec);
    if (ec) break;
  }
  socket.shutdown(tcp::socket::shutdown_both, ec);
  socket.close(ec);
}

}  // namespace

struct TcpServer::Impl {
  SimConfig config;
  bool multi;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::atomic<bool> stopping{false};
  std::mutex threads_mutex;
  std::vector<std::thread> threads;
};

TcpServer::TcpServer(SimConfig config, unsigned short port, bool multi_session, const std::string& address)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->multi = multi_session;
  const tcp::endpoint ep(asio::ip::make_address(address), port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
}

TcpServer::~TcpServer() {
  stop();
  std::lock_guard lock(impl_->threads_mutex);
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
}

unsigned short TcpServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TcpServer::run(std::size_t max_connections) {
  std::size_t accepted = 0;
  while (!impl_->stopping && (max_connections == 0 || accepted < max_connections)) {
    tcp::socket socket(impl_->io);
    boost::system::error_code ec;
    impl_->acceptor.accept(socket, ec);
    if (impl_->stopping) break;
    if (ec) continue;
    ++accepted;
    if (impl_->multi) {
      std::lock_guard lock(impl_->threads_mutex);
      impl_->threads.emplace_back(serve_socket, std::move(socket), std::cref(impl_->config));
    } else {
      serve_socket(std::move(socket), impl_->config);
    }
  }
  std::lock_guard lock(impl_->threads_mutex);
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
  impl_->threads.clear();
}

void TcpServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  // Wake a blocking accept() with a throwaway connection.
  boost::system::error_code ec;
  asio::io_context io;
  tcp::socket poke(io);
  auto ep = impl_->acceptor.local_endpoint(ec);
  if (!ec) poke.connect(ep, ec);
}

SimConfig reference_config_v1() {
  SimConfig c;
  c.env.n_users = 2;
  c.env.slots_per_frame = 4;
  c.env.episode_frames = 3;
  c.env.seed = 7;
  c.env.history_slots = 4;
  c.env.history_frames = 4;
  c.finalize();
  return c;
}

std::vector<std::string> reference_script_v1(const SimConfig& config) {
  const auto& e = config.env;
  const std::vector<std::vector<double>> patterns = {{0.5, 0.5}, {0.7, 0.3}, {1.0, 1.0}, {0.0, 0.25}};
  std::vector<std::string> lines;
  std::int64_t seq = 0;
  lines.push_back(canonical_dump({{"type", "hello"}, {"proto", kVersion}, {"seq", seq++}}));
  lines.push_back(canonical_dump({{"type", "reset"}, {"seed", 7}, {"seq", seq++}}));
  const Level top = e.ladder.top();
  for (std::int64_t f = 0; f < e.episode_frames; ++f) {
    for (int s = 0; s < e.slots_per_frame; ++s) {
      const auto& p = patterns[static_cast<std::size_t>(s) % patterns.size()];
      std::vector<double> shares(e.n_users);
      for (std::size_t u = 0; u < e.n_users; ++u) shares[u] = p[u % p.size()];
      lines.push_back(canonical_dump({{"type", "act"}, {"agent", "su"}, {"shares", shares}, {"seq", seq++}}));
    }
    std::vector<Level> levels(e.n_users);
    for (std::size_t u = 0; u < e.n_users; ++u)
      levels[u] = static_cast<Level>(u % 2 == 0 ? f % (top + 1) : top - f % (top + 1));
    lines.push_back(canonical_dump({{"type", "act"}, {"agent", "rs"}, {"levels", levels}, {"seq", seq++}}));
  }
  return lines;
}

std::string golden_transcript(const SimConfig& config, const std::vector<std::string>& client_lines) {
  Session session(config);
  std::string out;
  for (const auto& line : client_lines) {
    out += "> " + line + '\n';
    for (const auto& reply : session.handle_line(line)) out += "< " + reply + '\n';
  }
  return out;
}

}  // namespace vrsim::proto
