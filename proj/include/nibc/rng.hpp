#pragma once

#include <cstdint>

namespace nibc {

// Counter-based generator: draw(seed, counter) is a pure function, so the
// k-th draw of a stream never depends on how many draws came before it.
// Mixing follows SplitMix64 (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stable_hash(std::uint64_t seed, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(seed) ^ (counter * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform01(std::uint64_t seed, std::uint64_t counter) noexcept {
  return static_cast<double>(stable_hash(seed, counter) >> 11) * 0x1.0p-53;
}

/// Uniform double in [-1, 1].
constexpr double uniform_pm1(std::uint64_t seed, std::uint64_t counter) noexcept {
  return 2.0 * uniform01(seed, counter) - 1.0;
}

/// Child seed for an independent sub-stream (e.g. one sweep row).
constexpr std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return stable_hash(seed ^ 0xa0761d6478bd642fULL, index);
}

}  // namespace nibc
