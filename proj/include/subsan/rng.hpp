#pragma once

#include <cstdint>
#include <random>

namespace subsan {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to decorrelate seeds derived from
// (master_seed, grid_index, trial_index) tuples.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t grid = 0, std::uint64_t trial = 0) {
  std::uint64_t s = mix_seed(master);
  s = mix_seed(s ^ (grid + 0x632be59bd9b4e019ULL));
  s = mix_seed(s ^ (trial + 0xd6e8feb86659fd93ULL));
  return Rng(s);
}

}  // namespace subsan
