#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace weu {

// Every random draw in a run comes from one seed; each purpose (shuffle,
// negative sampling, logit noise, evaluation negatives) gets its own stream so
// that changing one component does not perturb the others.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_stream(std::uint64_t seed, std::string_view purpose,
                          std::uint64_t sub = 0) {
  std::uint64_t s = splitmix64(seed ^ fnv1a(purpose));
  s = splitmix64(s ^ splitmix64(sub + 0x632be59bd9b4e019ULL));
  return Engine(s);
}

}  // namespace weu
