#pragma once

#include <cstdint>
#include <random>

namespace replica {

using Rng = std::mt19937_64;

/// splitmix64 step; used to derive independent per-trial streams from a
/// master seed so trials can run concurrently and merge deterministically.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t master_seed, std::uint64_t stream) {
  return Rng(splitmix64(master_seed ^ splitmix64(stream)));
}

}  // namespace replica
