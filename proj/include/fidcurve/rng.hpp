#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fidcurve {

// All randomness flows through one named, seedable, portable generator.
// std::mt19937_64 has a bit-exact sequence mandated by the standard, so
// seeded runs reproduce across platforms.
using Rng = std::mt19937_64;

// Uniform double strictly inside (0, 1); 52-bit resolution. Both extremes
// are exactly representable, so the result never rounds onto 0 or 1.
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

inline double uniform01(Rng& rng) { return uniform01(rng()); }

// SplitMix64 step; used to derive independent stream seeds from a master
// seed without correlating the streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct NormalPair {
  double z0;
  double z1;
};

// Box-Muller transform, written out so the sampled stream does not depend
// on a library's std::normal_distribution implementation.
inline NormalPair standard_normal_pair(Rng& rng) {
  const double u1 = uniform01(rng);  // in (0,1), so log(u1) is finite
  const double u2 = uniform01(rng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace fidcurve
