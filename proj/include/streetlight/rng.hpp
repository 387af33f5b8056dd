#pragma once

#include <cstdint>
#include <initializer_list>

namespace streetlight {

// Stateless, counter-based randomness: every draw is a pure function of
// (seed, key...), so the order in which lamps or nodes are sampled cannot
// change any result. Only integer ops, hence identical on every platform.

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k));
  return h;
}

// Uniform in [0, 1) with 53 random bits.
constexpr double counter_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return static_cast<double>(counter_hash(seed, keys) >> 11) * 0x1.0p-53;
}

}  // namespace streetlight
