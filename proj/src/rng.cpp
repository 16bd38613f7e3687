#include "vrsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace vrsim {

double Rng::normal(double mean, double stddev) {
  const double u1 = uniform_open0();
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

double Rng::exponential(double mean) { return -mean * std::log(uniform_open0()); }

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t state = seed;
  std::uint64_t out = splitmix64(state);
  state ^= stream * 0xd1b54a32d192ed03ULL;
  out ^= splitmix64(state);
  state ^= index * 0x8cb92ba72f3d8dd7ULL;
  out ^= splitmix64(state);
  return out;
}

}  // namespace vrsim
