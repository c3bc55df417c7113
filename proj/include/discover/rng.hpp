#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace discover {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for a key tuple such as (seed, iteration, candidate,
// row, purpose). Streams depend only on the key, never on the order in which
// they are created, so parallel and sequential callers draw the same numbers.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t part : key) {
    h = splitmix64(h ^ splitmix64(part + 0x632be59bd9b4e019ULL));
  }
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

// Draw purposes keep streams for different decisions on the same row apart.
enum class Purpose : std::uint64_t {
  kFeatureSubset = 1,
  kNumeric = 2,
  kCategorical = 3,
  kParents = 4,
  kCrossover = 5,
  kMutation = 6,
};

inline std::uint64_t tag(Purpose p) { return static_cast<std::uint64_t>(p); }

}  // namespace discover
