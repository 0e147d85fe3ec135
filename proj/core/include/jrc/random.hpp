#pragma once

#include <cstdint>
#include <random>

namespace jrc {

// std::mt19937_64 has a fully specified output sequence; the helpers below
// only use integer arithmetic and exact double operations on it, so sampled
// values are identical across platforms and standard libraries (unlike the
// std:: distributions, whose algorithms are implementation-defined).
using Rng = std::mt19937_64;

// SplitMix64 finalizer, used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in [-scale, scale).
inline double uniform_symmetric(Rng& rng, double scale) {
  return (2.0 * uniform01(rng) - 1.0) * scale;
}

// Irwin-Hall(12) - 6: mean 0, variance 1, support [-6, 6]. Arithmetic only.
inline double approx_standard_normal(Rng& rng) {
  double sum = 0.0;
  for (int i = 0; i < 12; ++i) sum += uniform01(rng);
  return sum - 6.0;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Uniform integer in [0, n) without modulo bias.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace jrc
