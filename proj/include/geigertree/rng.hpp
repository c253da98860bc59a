#pragma once

#include <cstdint>
#include <random>

namespace geigertree {

using Rng = std::mt19937_64;

// SplitMix64 finalizer, used as the seed hash.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-replicate stream derivation. This mapping is the reproducibility
// contract: replicate r always uses mt19937_64 seeded with
// splitmix64(master ^ 0x9E3779B97F4A7C15 * (r + 1)).
inline std::uint64_t replicate_seed(std::uint64_t master_seed, std::uint64_t replicate) {
  return splitmix64(master_seed ^ (0x9E3779B97F4A7C15ULL * (replicate + 1)));
}

inline Rng make_replicate_rng(std::uint64_t master_seed, std::uint64_t replicate) {
  return Rng(replicate_seed(master_seed, replicate));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace geigertree
