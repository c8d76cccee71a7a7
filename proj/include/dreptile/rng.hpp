#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dreptile {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed derivation: mix(parent, i) = splitmix64(parent ^ splitmix64(i + 1)).
/// Every derived stream in the library goes through this function.
constexpr std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent ^ splitmix64(index + 1));
}

/// FNV-1a, used to turn stream labels into mix indices.
constexpr std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t parent, std::string_view label) {
  return mix_seed(parent, fnv1a(label));
}

}  // namespace dreptile
