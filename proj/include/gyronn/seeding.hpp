#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace gyronn {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed: seed_i = mix64(mix64(master ^ fnv1a(label)) + index).
/// Streams with different labels or indices are independent and every child
/// seed can be recomputed from (master, label, index) alone.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(master ^ fnv1a(label)) + index);
}

/// Uniform in (0, 1) from a counter hash; never returns exactly 0.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
  const std::uint64_t bits = mix64(seed ^ mix64(counter)) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate at a counter position (Box-Muller, cosine branch).
inline double counter_normal(std::uint64_t seed, std::uint64_t counter) noexcept {
  const double u1 = counter_uniform(seed, 2 * counter);
  const double u2 = counter_uniform(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gyronn
