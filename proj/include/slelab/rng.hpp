#pragma once
// Per-sample RNG streams keyed by (master seed, sample index).

#include <cstdint>
#include <random>

namespace slelab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream for one sample; independent of how samples are scheduled.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  const std::uint64_t k = splitmix64(splitmix64(seed ^ splitmix64(salt)) + index);
  std::seed_seq seq{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

inline double uniform01(std::mt19937_64& g) { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }
inline bool coin(std::mt19937_64& g) { return (g() >> 63) != 0; }

}  // namespace slelab
