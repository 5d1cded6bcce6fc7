#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace infertest {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seeds depend only on the parent seed and the path, never on the order
// in which siblings are derived, so parallel executions reproduce sequential
// ones.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(parent);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named seed streams for the hierarchical split of a campaign seed.
enum class SeedStream : std::uint64_t {
  generator = 1,
  sampler = 2,
  execution = 3,
  clustering = 4,
  noise = 5,
};

inline std::uint64_t stream_seed(std::uint64_t campaign_seed, SeedStream s) {
  return derive_seed(campaign_seed, {static_cast<std::uint64_t>(s)});
}

}  // namespace infertest
