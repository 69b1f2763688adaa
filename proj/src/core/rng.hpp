#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lvggm {

// SplitMix64 step. Used to expand a base seed into well-separated streams
// and to hash experiment cell coordinates into per-cell seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic seed for one experiment cell: base_seed xor a mixed hash of
// the cell coordinates. Order-sensitive, collision-resistant enough for
// Monte-Carlo cell separation.
inline std::uint64_t mix_seed(std::uint64_t base,
                              std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x243F6A8885A308D3ull;  // arbitrary fixed stream id
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t v : parts) {
    state ^= v;
    h = splitmix64(state);
  }
  return base ^ h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace lvggm
