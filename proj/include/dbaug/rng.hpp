#pragma once

#include <cstdint>
#include <random>

namespace dbaug {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits; identical on every
/// standard library, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for unit `unit_id` under `global_seed`. Used so that
/// per-sentence and per-seed work is independent of execution order.
inline Rng derive_rng(std::uint64_t global_seed, std::uint64_t unit_id) {
  return Rng(splitmix64(splitmix64(global_seed) ^ splitmix64(unit_id + 0x51ed27f1ULL)));
}

}  // namespace dbaug
