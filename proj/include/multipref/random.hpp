#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace multipref {

using Rng = std::mt19937_64;

// Counter-based seed derivation: the stream for (seed, a, b, ...) does not
// depend on how many other streams were drawn before it.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = mix_seed(seed);
  for (std::uint64_t c : counters) h = mix_seed(h ^ mix_seed(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
  return Rng(derive_seed(seed, counters));
}

}  // namespace multipref
