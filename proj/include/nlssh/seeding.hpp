#pragma once

#include <bit>
#include <cstdint>

namespace nlssh {

/// splitmix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Folds one more word into a running seed hash.
constexpr std::uint64_t mix_seed(std::uint64_t state, std::uint64_t word) noexcept {
  return splitmix64(state ^ splitmix64(word));
}

inline std::uint64_t double_bits(double x) noexcept {
  if (x == 0.0) x = 0.0;  // -0.0 and +0.0 hash alike
  return std::bit_cast<std::uint64_t>(x);
}

/// Maps a 64-bit word to [0, 1) using its top 53 bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace nlssh
