#pragma once

#include <cstdint>
#include <random>

namespace epirisk {

// splitmix64 finalizer; good avalanche, used only for seed derivation
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based stream derivation: every independent consumer (network
// generation, world dynamics, schedules, observation sampling, ensemble
// initialization, inflation noise) gets its own generator seeded from
// (master, tag, index). Replicas derive through the index so they are
// reproducible and independent.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return mix64(mix64(mix64(master) ^ tag) ^ index);
}

namespace stream {
inline constexpr std::uint64_t network = 0x01;
inline constexpr std::uint64_t world = 0x02;
inline constexpr std::uint64_t schedule = 0x03;
inline constexpr std::uint64_t observe = 0x04;
inline constexpr std::uint64_t ensemble = 0x05;
inline constexpr std::uint64_t inflate = 0x06;
inline constexpr std::uint64_t userbase = 0x07;
}  // namespace stream

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
  return Rng(derive_seed(master, tag, index));
}

}  // namespace epirisk
