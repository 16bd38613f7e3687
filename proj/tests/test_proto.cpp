#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/asio.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "vrsim/proto.hpp"
#include "vrsim/rng.hpp"

using namespace vrsim;
using namespace vrsim::proto;
namespace fs = std::filesystem;

namespace {

Json parse(const std::string& s) { return Json::parse(s); }

std::string line(const Json& j) { return canonical_dump(j); }

Json hello(std::int64_t seq) { return {{"type", "hello"}, {"proto", 1}, {"seq", seq}}; }

// Reference transcript built by driving Environment directly and writing each
// message out by hand, independently of Session.
std::string reference_transcript(const SimConfig& cfg) {
  const auto& e = cfg.env;
  Environment env(e);
  std::string out;
  std::int64_t sseq = 0;
  auto server = [&](Json j) {
    j["seq"] = sseq++;
    out += "< " + canonical_dump(j) + "\n";
  };
  auto client = [&](const Json& j) { out += "> " + canonical_dump(j) + "\n"; };
  auto obs = [&](const char* agent, const Observation& o) {
    server({{"type", "obs"}, {"agent", agent}, {"obs", o}, {"slot", env.now()}, {"frame", env.frame_index()}});
  };

  std::int64_t cseq = 0;
  client(hello(cseq++));
  server({{"type", "spec"},
          {"proto", 1},
          {"config_hash", config_hash(cfg)},
          {"n_users", e.n_users},
          {"action_dim_su", e.n_users},
          {"action_dim_rs", 7},
          {"slots_per_frame", e.slots_per_frame},
          {"episode_frames", e.episode_frames},
          {"slot_len", e.slot_len},
          {"ladder", to_json(e.ladder)},
          {"obs_su", to_json(env.layout_su())},
          {"obs_rs", to_json(env.layout_rs())}});
  client({{"type", "reset"}, {"seed", 7}, {"seq", cseq++}});
  const auto [su0, rs0] = env.reset(7);
  obs("su", su0);
  obs("rs", rs0);

  const double patterns[4][2] = {{0.5, 0.5}, {0.7, 0.3}, {1.0, 1.0}, {0.0, 0.25}};
  for (int f = 0; f < 3; ++f) {
    for (int s = 0; s < 4; ++s) {
      const std::vector<double> shares = {patterns[s][0], patterns[s][1]};
      client({{"type", "act"}, {"agent", "su"}, {"shares", shares}, {"seq", cseq++}});
      const auto r = env.step_slot(shares);
      obs("su", r.obs);
      server({{"type", "reward"},
              {"agent", "su"},
              {"renormalized", r.events.renormalized},
              {"reward",
               {{"frames_delivered", r.reward.frames_delivered},
                {"waste_fraction", r.reward.waste_fraction},
                {"required_rate", r.reward.required_rate},
                {"success_term", r.reward.success_term},
                {"efficiency_term", r.reward.efficiency_term},
                {"required_rate_term", r.reward.required_rate_term},
                {"total", r.reward.total}}}});
    }
    const std::vector<Level> levels = {f % 7, 6 - f % 7};
    client({{"type", "act"}, {"agent", "rs"}, {"levels", levels}, {"seq", cseq++}});
    const auto r = env.step_frame(levels);
    obs("rs", r.obs);
    obs("su", env.observe_su());
    Json rewards = Json::array();
    for (const auto& w : r.rewards)
      rewards.push_back({{"level_term", w.level_term},
                         {"fail_term", w.fail_term},
                         {"transition_term", w.transition_term},
                         {"total", w.total}});
    server({{"type", "reward"}, {"agent", "rs"}, {"rewards", rewards}});
    if (r.done) server({{"type", "done"}, {"frames", env.frame_index()}, {"metrics", to_json(env.metrics())}});
  }
  return out;
}

Json random_json(Rng& rng, int depth) {
  const int kind = static_cast<int>(rng.uniform() * (depth > 2 ? 5 : 7));
  switch (kind) {
    case 0: return nullptr;
    case 1: return rng.uniform() < 0.5;
    case 2: return static_cast<std::int64_t>(rng.next_u64()) >> static_cast<int>(rng.uniform() * 63);
    case 3: {
      // Mix of ordinary, tiny, huge and integral-valued doubles.
      const double m = rng.normal() * std::pow(10.0, std::floor(rng.uniform() * 40 - 20));
      return rng.uniform() < 0.2 ? std::round(m) : m;
    }
    case 4: {
      std::string s;
      const int n = static_cast<int>(rng.uniform() * 8);
      for (int i = 0; i < n; ++i) s += static_cast<char>(1 + rng.uniform() * 126);
      return s;
    }
    case 5: {
      Json a = Json::array();
      const int n = static_cast<int>(rng.uniform() * 4);
      for (int i = 0; i < n; ++i) a.push_back(random_json(rng, depth + 1));
      return a;
    }
    default: {
      Json o = Json::object();
      const int n = static_cast<int>(rng.uniform() * 4);
      for (int i = 0; i < n; ++i) o["k" + std::to_string(static_cast<int>(rng.uniform() * 20))] = random_json(rng, depth + 1);
      return o;
    }
  }
}

Session ready_session() {
  Session s(reference_config_v1());
  s.handle_line(line(hello(0)));
  return s;
}

std::string read_line(boost::asio::ip::tcp::socket& sock, boost::asio::streambuf& buf) {
  boost::asio::read_until(sock, buf, '\n');
  std::istream is(&buf);
  std::string l;
  std::getline(is, l);
  return l;
}

}  // namespace

TEST_CASE("canonical dump") {
  CHECK(canonical_dump(parse(R"({"b":1,"a":[1.5,2,"x"],"c":{"z":null,"y":true}})")) ==
        R"({"a":[1.5,2,"x"],"b":1,"c":{"y":true,"z":null}})");
  CHECK(canonical_dump(Json(0.1)) == "0.1");
  CHECK(canonical_dump(Json(1.0)) == "1.0");
  CHECK(canonical_dump(Json(-0.0)) == "-0.0");
  CHECK(canonical_dump(Json(1e300)) == "1e+300");
  CHECK(canonical_dump(Json("a\"b\\c\n\x01")) == R"("a\"b\\c\n\u0001")");
  CHECK_THROWS_AS(canonical_dump(Json(std::numeric_limits<double>::quiet_NaN())), std::domain_error);
  CHECK_THROWS_AS(canonical_dump(Json(INFINITY)), std::domain_error);
}

TEST_CASE("canonical dump round-trips randomized documents") {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const Json doc = random_json(rng, 0);
    const auto text = canonical_dump(doc);
    const Json back = Json::parse(text);
    REQUIRE(back == doc);
    REQUIRE(canonical_dump(back) == text);
  }
}

TEST_CASE("golden transcript v1") {
  const auto cfg = reference_config_v1();
  const auto script = reference_script_v1(cfg);
  const auto got = golden_transcript(cfg, script);
  CHECK(got == reference_transcript(cfg));

  const fs::path golden = fs::path(VRSIM_SOURCE_DIR) / "tests" / "golden" / "transcript_v1.txt";
  if (std::getenv("VRSIM_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << got;
  }
  std::ifstream in(golden, std::ios::binary);
  REQUIRE(in);
  std::stringstream frozen;
  frozen << in.rdbuf();
  CHECK(got == frozen.str());

  // One client line per scripted step: hello, reset, 3 frames of 4 SU acts plus 1 RS act.
  CHECK(script.size() == 2 + 3 * 5);
}

TEST_CASE("spec message") {
  Session s(reference_config_v1());
  const auto out = s.handle_line(line(hello(0)));
  REQUIRE(out.size() == 1);
  const auto spec = parse(out[0]);
  CHECK(spec["type"] == "spec");
  CHECK(spec["seq"] == 0);
  CHECK(spec["action_dim_su"] == 2);
  CHECK(spec["action_dim_rs"] == 7);
  CHECK(spec["obs_su"]["size"] == 2 * (4 + 4));
  CHECK(spec["obs_rs"]["size"] == 2 * (4 + 1 + 4 + 4 + 4 + 1));
  CHECK(spec["config_hash"] == s.config_hash());
  CHECK(s.phase() == Phase::kReady);
}

TEST_CASE("hello checks version and config hash") {
  {
    Session s(reference_config_v1());
    const auto r = parse(s.handle_line(R"({"type":"hello","proto":2,"seq":0})")[0]);
    CHECK(r["code"] == "version");
    CHECK(s.closed());
  }
  {
    Session s(reference_config_v1());
    const auto r = parse(s.handle_line(R"({"type":"hello","proto":1,"config_hash":"nope","seq":0})")[0]);
    CHECK(r["code"] == "config_mismatch");
  }
  {
    Session s(reference_config_v1());
    const auto h = s.config_hash();
    const auto r = parse(s.handle_line(line({{"type", "hello"}, {"proto", 1}, {"config_hash", h}, {"seq", 0}}))[0]);
    CHECK(r["type"] == "spec");
  }
}

TEST_CASE("every sequencing violation is an error followed by close") {
  const std::vector<std::pair<std::vector<std::string>, const char*>> cases = {
      {{R"({"type":"reset","seq":0})"}, "sequencing"},
      {{R"({"type":"act","agent":"su","shares":[0,0],"seq":0})"}, "sequencing"},
      {{line(hello(0)), line(hello(1))}, "sequencing"},
      {{line(hello(0)), R"({"type":"act","agent":"su","shares":[0,0],"seq":1})"}, "sequencing"},
      {{line(hello(0)), R"({"type":"reset","seq":1})", R"({"type":"act","agent":"rs","levels":[0,0],"seq":2})"},
       "sequencing"},
      {{line(hello(0)), R"({"type":"reset","seq":1})", R"({"type":"reset","seq":2})"}, "sequencing"},
      {{line(hello(5)), R"({"type":"reset","seq":5})"}, "sequencing"},
      {{line(hello(5)), R"({"type":"reset","seq":4})"}, "sequencing"},
      {{line(hello(0)), R"({"type":"obs","seq":1})"}, "sequencing"},
      {{line(hello(0)), R"({"type":"spec","seq":1})"}, "sequencing"},
      {{line(hello(0)), R"({"type":"launch","seq":1})"}, "unknown_type"},
      {{line(hello(0)), R"({"type":"reset","seed":-1,"seq":1})"}, "invalid"},
      {{line(hello(0)), R"({"type":"reset","seq":1})", R"({"type":"act","agent":"su","shares":[0],"seq":2})"},
       "invalid"},
      {{line(hello(0)), R"({"type":"reset","seq":1})", R"({"type":"act","agent":"su","shares":[-1,0],"seq":2})"},
       "invalid"},
      {{line(hello(0)), R"({"type":"reset","seq":1})", R"({"type":"act","agent":"xx","seq":2})"}, "invalid"},
      {{R"({"type":"hello","proto":1})"}, "malformed"},
      {{R"({"proto":1,"seq":0})"}, "malformed"},
      {{R"([1,2])"}, "malformed"},
  };
  for (const auto& [lines, expected] : cases) {
    Session s(reference_config_v1());
    std::vector<std::string> last;
    for (const auto& l : lines) last = s.handle_line(l);
    CAPTURE(lines.back());
    REQUIRE(last.size() == 1);
    const auto err = parse(last[0]);
    CHECK(err["type"] == "error");
    CHECK(err["code"] == expected);
    CHECK(err["message"].is_string());
    CHECK(s.closed());
    CHECK(s.handle_line(line(hello(100))).empty());
    CHECK(s.handle_line(R"({"type":"reset","seq":101})").empty());
  }
}

TEST_CASE("server seq counts every server message from zero") {
  const auto cfg = reference_config_v1();
  Session s(cfg);
  std::int64_t expected = 0;
  for (const auto& l : reference_script_v1(cfg))
    for (const auto& reply : s.handle_line(l)) CHECK(parse(reply)["seq"] == expected++);
  CHECK(s.phase() == Phase::kReady);
  // A new episode may start after done.
  const auto again = s.handle_line(R"({"type":"reset","seq":1000})");
  CHECK(again.size() == 2);
  CHECK(parse(again[0])["seq"] == expected);
}

TEST_CASE("malformed lines report the absolute byte offset") {
  Session s(reference_config_v1());
  const auto h = line(hello(0));
  s.handle_line(h);
  const auto err = parse(s.handle_line("xyz")[0]);
  CHECK(err["code"] == "malformed");
  CHECK(err["offset"] == h.size() + 1);

  Session t(reference_config_v1());
  t.handle_line(h);
  const auto err2 = parse(t.handle_line(R"({"type": oops})")[0]);
  CHECK(err2["offset"] == h.size() + 1 + 9);

  Session u(reference_config_v1());
  CHECK(parse(u.reject_oversized(0)[0])["code"] == "malformed");
  CHECK(u.closed());
}

TEST_CASE("sessions with the same seed see the same observations") {
  const auto cfg = reference_config_v1();
  auto run = [&] {
    Session s(cfg);
    std::vector<std::string> out;
    for (const auto& l : reference_script_v1(cfg))
      for (auto& r : s.handle_line(l)) out.push_back(std::move(r));
    return out;
  };
  CHECK(run() == run());

  // Different seeds diverge.
  Session a(cfg), b(cfg);
  a.handle_line(line(hello(0)));
  b.handle_line(line(hello(0)));
  a.handle_line(R"({"type":"reset","seed":1,"seq":1})");
  b.handle_line(R"({"type":"reset","seed":2,"seq":1})");
  const auto sa = a.handle_line(R"({"type":"act","agent":"su","shares":[0.5,0.5],"seq":2})");
  const auto sb = b.handle_line(R"({"type":"act","agent":"su","shares":[0.5,0.5],"seq":2})");
  CHECK(sa[0] != sb[0]);
}

TEST_CASE("renormalized shares are flagged in the reward message") {
  Session s = ready_session();
  s.handle_line(R"({"type":"reset","seq":1})");
  const auto out = s.handle_line(R"({"type":"act","agent":"su","shares":[1,1],"seq":2})");
  REQUIRE(out.size() == 2);
  const auto rw = parse(out[1]);
  CHECK(rw["type"] == "reward");
  CHECK(rw["renormalized"] == true);
  const auto& r = rw["reward"];
  CHECK(std::abs(r["total"].get<double>() - (r["success_term"].get<double>() + r["efficiency_term"].get<double>() +
                                             r["required_rate_term"].get<double>())) <= 1e-9);
}

TEST_CASE("stdio transport") {
  const auto cfg = reference_config_v1();
  std::string input;
  for (const auto& l : reference_script_v1(cfg)) input += l + "\n";
  std::istringstream in(input);
  std::ostringstream out;
  CHECK(serve_stream(cfg, in, out));
  std::string expected;
  Session s(cfg);
  for (const auto& l : reference_script_v1(cfg))
    for (const auto& r : s.handle_line(l)) expected += r + "\n";
  CHECK(out.str() == expected);

  std::istringstream bad(line(hello(0)) + "\n{\n" + line(hello(1)) + "\n");
  std::ostringstream bad_out;
  CHECK_FALSE(serve_stream(cfg, bad, bad_out));
  std::istringstream lines(bad_out.str());
  std::string l1, l2, l3;
  std::getline(lines, l1);
  std::getline(lines, l2);
  CHECK(parse(l2)["code"] == "malformed");
  CHECK_FALSE(std::getline(lines, l3));
}

TEST_CASE("tcp single session") {
  namespace asio = boost::asio;
  using asio::ip::tcp;
  const auto cfg = reference_config_v1();
  TcpServer server(cfg, 0);
  const auto port = server.port();
  CHECK(port != 0);
  std::thread t([&] { server.run(1); });

  asio::io_context io;
  tcp::socket sock(io);
  sock.connect({asio::ip::make_address("127.0.0.1"), port});
  asio::streambuf buf;
  for (const auto& l : reference_script_v1(cfg)) asio::write(sock, asio::buffer(l + "\n"));
  // Replies equal those of an in-process session.
  Session s(cfg);
  for (const auto& l : reference_script_v1(cfg))
    for (const auto& r : s.handle_line(l)) CHECK(read_line(sock, buf) == r);
  sock.close();
  t.join();
}

TEST_CASE("tcp multi-session: concurrent clients with the same seed agree") {
  namespace asio = boost::asio;
  using asio::ip::tcp;
  const auto cfg = reference_config_v1();
  TcpServer server(cfg, 0, true);
  const auto port = server.port();
  std::thread t([&] { server.run(2); });

  auto client = [&] {
    asio::io_context io;
    tcp::socket sock(io);
    sock.connect({asio::ip::make_address("127.0.0.1"), port});
    asio::streambuf buf;
    std::vector<std::string> got;
    Session counter(cfg);
    for (const auto& l : reference_script_v1(cfg)) {
      asio::write(sock, asio::buffer(l + "\n"));
      for (std::size_t i = 0; i < counter.handle_line(l).size(); ++i) got.push_back(read_line(sock, buf));
    }
    return got;
  };
  std::vector<std::string> a, b;
  std::thread ta([&] { a = client(); });
  std::thread tb([&] { b = client(); });
  ta.join();
  tb.join();
  CHECK(!a.empty());
  CHECK(a == b);
  t.join();
}

TEST_CASE("tcp server stops on request") {
  TcpServer server(reference_config_v1(), 0);
  std::thread t([&] { server.run(); });
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  server.stop();
  t.join();
  CHECK(true);
}
