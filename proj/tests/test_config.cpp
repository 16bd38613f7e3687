#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vrsim/config.hpp"
#include "vrsim/error.hpp"

using namespace vrsim;
namespace fs = std::filesystem;

namespace {

SimConfig parse(const std::string& text, const fs::path& base = {}) {
  std::istringstream in(text);
  return parse_config(in, base);
}

fs::path scratch_dir(const char* name) {
  auto d = fs::path(VRSIM_BINARY_DIR) / "scratch" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("empty input gives the defaults") {
  const auto c = parse("");
  CHECK(c.env.n_users == 3);
  CHECK(c.env.slots_per_frame == 20);
  CHECK(c.env.ladder.size() == 7);
  CHECK(config_hash(c) == config_hash(SimConfig{}));
}

TEST_CASE("default hash is frozen") {
  SimConfig c;
  c.finalize();
  CHECK(config_hash(c) == "0f7ce6188195364d");
  CHECK(config_hash(c).size() == 16);
}

TEST_CASE("emit/parse round trip") {
  auto c = parse(R"(
# comment
[env]
n_users = 5          # trailing comment
seed = 99
deadline_fraction = 0.75

[channel]
mode = "piecewise"
piecewise_means_db = [3.0, 9.5, -1]

[media]
labels = ["a", "b#c", "c", "d", "e", "f", "g"]

[qoe]
theta_down = 8.0
)");
  CHECK(c.env.n_users == 5);
  CHECK(c.env.seed == 99);
  CHECK(c.env.channel.mode == ChannelMode::kPiecewise);
  CHECK(c.env.channel.piecewise_means_db == std::vector<double>{3.0, 9.5, -1.0});
  CHECK(c.env.ladder.at(1).label == "b#c");
  CHECK(c.env.qoe.theta_down == 8.0);

  const auto text = to_config_text(c);
  const auto again = parse(text);
  CHECK(to_config_text(again) == text);
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(again) != config_hash(SimConfig{}));
}

TEST_CASE("hash tracks every field change") {
  const auto base = config_hash(parse(""));
  CHECK(config_hash(parse("[env]\nseed = 8\n")) != base);
  CHECK(config_hash(parse("[reward]\nw_waste = 0.25\n")) != base);
  CHECK(config_hash(parse("[baselines]\ncc_beta = 0.6\n")) != base);
  // Formatting differences do not matter.
  CHECK(config_hash(parse("[env]\nseed    =   1   \n")) == base);
}

TEST_CASE("errors carry line numbers") {
  try {
    parse("[env]\nn_users = 3\nbogus = 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("env.bogus") != std::string::npos);
  }
  try {
    parse("[env]\nn_users = three\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("[env\n"), ParseError);
  CHECK_THROWS_AS(parse("[env]\nn_users\n"), ParseError);
  CHECK_THROWS_AS(parse("[nosuch]\nx = 1\n"), ParseError);
}

TEST_CASE("semantic validation") {
  CHECK_THROWS_AS(parse("[env]\nn_users = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[env]\ndeadline_fraction = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[baselines]\ncc_beta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[baselines]\npf_horizon = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[media]\nlabels = [\"a\"]\n"), ConfigError);
  CHECK_THROWS_AS(parse("[channel]\nmode = \"nope\"\n"), ParseError);
}

TEST_CASE("custom ladder from mean_frame_bits") {
  const auto c = parse("[media]\nmean_frame_bits = [1000, 2000, 4000]\nsize_cv = 0\n[env]\ninitial_level = 2\n");
  CHECK(c.env.ladder.size() == 3);
  CHECK(c.env.ladder.at(2).mean_frame_bits == 4000);
  CHECK(c.env.ladder.at(0).label == "L0");
  CHECK_THROWS_AS(parse("[media]\nmean_frame_bits = [1000, 2000]\n[env]\ninitial_level = 2\n"), ConfigError);
}

TEST_CASE("trace paths resolve against the config file") {
  const auto d = scratch_dir("trace_cfg");
  fs::create_directories(d / "traces");
  {
    std::ofstream t(d / "traces" / "t.csv");
    t << "l0,l1,l2,l3,l4,l5,l6\n1,2,3,4,5,6,7\n";
    std::ofstream c(d / "c.toml");
    c << "[media]\ntrace = \"traces/t.csv\"\n";
    std::ofstream bad(d / "bad.toml");
    bad << "[media]\ntrace = \"missing.csv\"\n";
  }
  const auto c = load_config(d / "c.toml");
  REQUIRE(c.env.trace);
  CHECK(c.env.trace->columns.size() == 7);
  CHECK(c.env.trace->columns[6][0] == 7);
  CHECK_THROWS(load_config(d / "bad.toml"));
  CHECK_THROWS_AS(load_config(d / "nope.toml"), ConfigError);
}

TEST_CASE("load_config reports the file path") {
  const auto d = scratch_dir("bad_cfg");
  {
    std::ofstream c(d / "x.toml");
    c << "\n\n[env]\nwhat = 1\n";
  }
  try {
    load_config(d / "x.toml");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("x.toml") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
  }
}

TEST_CASE("shipped configs load") {
  const fs::path dir = fs::path(VRSIM_SOURCE_DIR) / "configs";
  const auto def = load_config(dir / "default.toml");
  CHECK(config_hash(def) == "0f7ce6188195364d");
  const auto fig = load_config(dir / "repro-fig5.toml");
  CHECK(fig.env.n_users == 3);
  CHECK(fig.env.episode_frames == 3000);
  const auto pw = load_config(dir / "piecewise.toml");
  CHECK(pw.env.channel.mode == ChannelMode::kPiecewise);
  CHECK(pw.env.channel.piecewise_means_db.size() == 4);
}
