#pragma once

#include <cstdint>
#include <random>

namespace pipescan {

// splitmix64 step; used to derive independent sub-seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sub-seed for a named stream. mix_seed(s, 0) == s so a single-stream
// consumer sees the master seed unchanged.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return stream == 0 ? seed : splitmix64(seed ^ (stream * 0x9E3779B97F4A7C15ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace pipescan
