#pragma once

#include <cstdint>
#include <random>

namespace alirector {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds from a
// (global seed, index) pair so generation order never matters.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x5851f42d4c957f2dULL));
}

// Uniform double in [0, 1) built from the raw engine output so the value is
// identical across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [lo, hi]. Modulo bias is negligible for the small
// ranges used here.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto range = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % range);
}

}  // namespace alirector
