#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "vrsim/format.hpp"
#include "vrsim/rng.hpp"

using namespace vrsim;

TEST_CASE("engine is the standard mt19937_64") {
  // The standard fixes the 10000th output of a default-constructed engine.
  Rng r(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = r.next_u64();
  CHECK(v == 9981545732273789042ULL);
}

TEST_CASE("uniform draws stay in range") {
  Rng r(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = r.uniform_open0();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("normal moments") {
  Rng r(7);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal(2.0, 3.0);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(std::sqrt(var) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("exponential mean") {
  Rng r(9);
  double sum = 0;
  for (int i = 0; i < 200000; ++i) sum += r.exponential(1.5);
  CHECK(sum / 200000 == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("derived seeds separate streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t st = 1; st <= 5; ++st)
      for (std::uint64_t i = 0; i < 8; ++i) seen.insert(derive_seed(s, st, i));
  CHECK(seen.size() == 4 * 5 * 8);
  CHECK(derive_seed(3, 2, 1) == derive_seed(3, 2, 1));
}

TEST_CASE("same seed, same sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.normal() == b.normal());
}

TEST_CASE("format_double round-trips and marks floats") {
  CHECK(format_double(1.0) == "1.0");
  CHECK(format_double(-0.5) == "-0.5");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(100000.0) == "1e+05");
  CHECK(format_double(12345.0) == "12345.0");
  CHECK_THROWS_AS(format_double(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(format_double(INFINITY), std::domain_error);
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(r.uniform() - 0.5, static_cast<int>(r.next_u64() % 200) - 100);
    REQUIRE(std::stod(format_double(v)) == v);
  }
}
