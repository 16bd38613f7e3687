#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "vrsim/channel.hpp"
#include "vrsim/error.hpp"

using namespace vrsim;

namespace {

// Values computed with an independent scalar calculator from the closed forms
// PL(d) = 20 log10(4 pi f / c) + 10 n log10(d), SNR = tx - PL - shadow - (N0 + 10 log10 B).
constexpr double kPl0 = 43.32914410888889;       // 1 m, 3.5 GHz
constexpr double kPl100 = 113.3291441088889;     // 100 m, n = 3.5
constexpr double kChainPl = 102.8120709332634;   // (30, 40), heights 4 / 1.5
constexpr double kChainSnrDb = 18.187929066736601;
constexpr double kChainRate = 6.0636315950691033;

ChannelParams quiet() {
  ChannelParams p;
  p.heading_std = 0.0;
  return p;
}

}  // namespace

TEST_CASE("zero speed keeps the position") {
  auto p = ChannelParams{};
  Rng rng(1);
  UserMobilityState s{12.5, -7.0, 0.0, 1.0};
  for (double dt : {1e-3, 0.5, 10.0}) {
    auto n = step_mobility(s, dt, p, rng);
    CHECK(n.x == s.x);
    CHECK(n.y == s.y);
  }
}

TEST_CASE("reflection at the east wall") {
  const auto p = quiet();
  Rng rng(1);
  auto n = step_mobility({49.9, 0.0, 1.0, 0.0}, 0.2, p, rng);
  CHECK(n.x == doctest::Approx(49.9).epsilon(1e-12));
  CHECK(n.y == 0.0);
  CHECK(n.heading == doctest::Approx(std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("reflection at the north wall mirrors the heading") {
  const auto p = quiet();
  Rng rng(1);
  auto n = step_mobility({0.0, 49.95, 1.0, std::numbers::pi / 2}, 0.1, p, rng);
  CHECK(n.y == doctest::Approx(49.95).epsilon(1e-12));
  CHECK(n.heading == doctest::Approx(-std::numbers::pi / 2).epsilon(1e-15));
}

TEST_CASE("random walk never leaves the cell and heading stays spread") {
  ChannelParams p;
  Rng rng(11);
  UserMobilityState s{0, 0, 1.0, 0.3};
  double c = 0, sn = 0;
  for (int i = 0; i < 100000; ++i) {
    s = step_mobility(s, 1.0, p, rng);
    REQUIRE(std::abs(s.x) <= 50.0);
    REQUIRE(std::abs(s.y) <= 50.0);
    REQUIRE(std::abs(s.heading) <= std::numbers::pi);
    c += std::cos(s.heading);
    sn += std::sin(s.heading);
  }
  // Mean resultant length well below 1: no collapse onto a single direction.
  CHECK(std::hypot(c, sn) / 100000 < 0.5);
}

TEST_CASE("path loss closed form") {
  ChannelParams p;
  CHECK(reference_loss_db(p) == doctest::Approx(kPl0).epsilon(1e-12));
  CHECK(path_loss(100.0, p) == doctest::Approx(kPl100).epsilon(1e-12));
}

TEST_CASE("path loss is monotone and clamped") {
  ChannelParams p;
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> d(0.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    double a = d(g), b = d(g);
    if (a > b) std::swap(a, b);
    REQUIRE(path_loss(a, p) <= path_loss(b, p));
  }
  CHECK(path_loss(0.25, p) == path_loss(1.0, p));
  CHECK(path_loss(0.0, p) == path_loss(p.min_distance, p));
}

TEST_CASE("shadow step") {
  ChannelParams p;
  Rng rng(5);
  CHECK(shadow_step(3.7, 0.0, p, rng) == 3.7);
  p.shadow_std = 0.0;
  CHECK(shadow_step(1.0, 50.0, p, rng) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
}

TEST_CASE("rate per hz") {
  CHECK(rate_per_hz(0.0) == 0.0);
  CHECK(rate_per_hz(3.0) == 2.0);
}

TEST_CASE("link budget chain") {
  ChannelParams p;
  const UserMobilityState u{30.0, 40.0, 1.0, 0.0};
  const auto s = make_sample(path_loss(distance_3d(u, p), p), 3.0, p);
  CHECK(s.pathloss == doctest::Approx(kChainPl).epsilon(1e-12));
  CHECK(s.snr_db() == doctest::Approx(kChainSnrDb).epsilon(1e-12));
  CHECK(s.rate_per_hz == doctest::Approx(kChainRate).epsilon(1e-12));
}

TEST_CASE("snr is non-increasing in distance with shadow fixed") {
  ChannelParams p;
  double last = INFINITY;
  for (double x = 0; x <= 50; x += 0.5) {
    const auto s = make_sample(path_loss(distance_3d({x, 0, 0, 0}, p), p), 2.0, p);
    REQUIRE(s.snr <= last);
    last = s.snr;
  }
}

TEST_CASE("capacity bits") {
  ChannelParams p;
  ChannelSample s;
  s.rate_per_hz = 2.0;
  CHECK(capacity_bits(s, 0.0, 1e-3, p) == 0.0);
  CHECK(capacity_bits(s, 1.0, 1e-3, p) == doctest::Approx(2e5).epsilon(1e-15));
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> d(0.0, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double a = d(g), b = d(g);
    s.rate_per_hz = 1.0 + 5 * d(g);
    REQUIRE(capacity_bits(s, a, 1e-3, p) + capacity_bits(s, b, 1e-3, p) ==
            doctest::Approx(capacity_bits(s, a + b, 1e-3, p)).epsilon(1e-12));
  }
}

namespace {

// Straight-line re-derivation of UserChannel from the engine up, sharing only
// the documented seed derivation and draw transforms.
std::uint64_t mix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
std::uint64_t seed_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t st = seed;
  std::uint64_t out = mix(st);
  st ^= stream * 0xd1b54a32d192ed03ULL;
  out ^= mix(st);
  st ^= index * 0x8cb92ba72f3d8dd7ULL;
  return out ^ mix(st);
}
double unif(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
double gauss(std::mt19937_64& g, double sd) {
  const double u1 = 1.0 - unif(g);
  const double u2 = unif(g);
  return sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

TEST_CASE("UserChannel matches a straight-line reimplementation") {
  ChannelParams p;
  const std::uint64_t seed = 42;
  const std::size_t user = 1;
  UserChannel ch(p, seed, user);

  std::mt19937_64 place(seed_for(seed, 4, user)), mob(seed_for(seed, 1, user)), sh(seed_for(seed, 2, user));
  double x = (2 * unif(place) - 1) * 50, y = (2 * unif(place) - 1) * 50;
  double h = std::remainder((2 * unif(place) - 1) * std::numbers::pi, 2 * std::numbers::pi);
  double shadow = gauss(sh, 8.0);
  const double rho = std::exp(-1e-3 / 50.0);
  const double n0 = -174.0 + 80.0;
  auto snr_db = [&] {
    const double d = std::sqrt(x * x + y * y + 2.5 * 2.5);
    return 30.0 - (kPl0 + 35.0 * std::log10(d)) - shadow - n0;
  };
  REQUIRE(ch.sample().snr_db() == doctest::Approx(snr_db()).epsilon(1e-12));
  for (int i = 0; i < 5000; ++i) {
    x += 1e-3 * std::cos(h);
    y += 1e-3 * std::sin(h);
    h = std::remainder(h + gauss(mob, 0.1), 2 * std::numbers::pi);
    if (h <= -std::numbers::pi) h += 2 * std::numbers::pi;
    shadow = rho * shadow + std::sqrt(1 - rho * rho) * gauss(sh, 8.0);
    const auto& s = ch.advance(1e-3);
    REQUIRE(s.shadow == doctest::Approx(shadow).epsilon(1e-12));
    REQUIRE(s.snr_db() == doctest::Approx(snr_db()).epsilon(1e-12));
  }
}

TEST_CASE("UserChannel is deterministic per seed and differs across seeds") {
  ChannelParams p;
  UserChannel a(p, 9, 0), b(p, 9, 0), c(p, 10, 0);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto sa = a.advance(1e-3), sb = b.advance(1e-3), sc = c.advance(1e-3);
    REQUIRE(sa.snr == sb.snr);
    REQUIRE(sa.pathloss == sb.pathloss);
    differs |= sa.snr != sc.snr;
  }
  CHECK(differs);
}

TEST_CASE("rayleigh fading has unit mean gain") {
  ChannelParams p;
  p.rayleigh_fading = true;
  p.shadow_std = 0.0;
  p.speed = 0.0;
  UserChannel ch(p, 3, 0);
  const double base = make_sample(ch.sample().pathloss, 0.0, p).snr;
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += ch.advance(1e-3).snr / base;
  CHECK(sum / 100000 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("piecewise mode follows the segment means") {
  ChannelParams p;
  p.mode = ChannelMode::kPiecewise;
  p.piecewise_means_db = {10.0, 20.0};
  p.piecewise_user_offsets_db = {0.0, -3.0};
  p.piecewise_segment_slots = 5;
  UserChannel u0(p, 1, 0), u1(p, 1, 1);
  CHECK(u0.sample().snr_db() == doctest::Approx(10.0));
  CHECK(u1.sample().snr_db() == doctest::Approx(7.0));
  for (int i = 1; i <= 12; ++i) {
    u0.advance(1e-3);
    const double expect = (i / 5) % 2 == 0 ? 10.0 : 20.0;
    REQUIRE(u0.segment_mean_db() == expect);
    REQUIRE(u0.sample().snr_db() == doctest::Approx(expect));
  }
  ChannelParams m;
  CHECK(std::isnan(UserChannel(m, 1, 0).segment_mean_db()));
}

TEST_CASE("parameter validation") {
  ChannelParams p;
  CHECK_NOTHROW(p.validate());
  p.total_bandwidth = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.shadow_std = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.shadow_corr_dist = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.cell_side = -5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.mode = ChannelMode::kPiecewise;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("channel trace CSV") {
  std::ostringstream os;
  write_channel_trace_header(os);
  ChannelSample s = make_sample(100.0, 2.0, ChannelParams{});
  write_channel_trace_row(os, 5, 2, s);
  CHECK(os.str().rfind("slot,user_id,pathloss_db,shadow_db,snr_db\n5,2,100.0,2.0,", 0) == 0);
}
