#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace emodiff {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
inline std::uint64_t mix_u64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a base seed and a label, so that
// per-unit streams (one per article, per topic count, ...) never depend on
// generation order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  return mix_u64(base ^ fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return mix_u64(base ^ mix_u64(salt));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Samplers below consume generator words directly instead of going through
// std:: distributions, whose layouts vary across standard libraries; the
// streams are reproducible everywhere.

inline double rng_uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double rng_normal(Rng& rng) {
  // Box-Muller without state; u1 is shifted into (0, 1].
  double u1 = 1.0 - rng_uniform01(rng);
  double u2 = rng_uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline double rng_exponential(Rng& rng, double mean) {
  return -mean * std::log(1.0 - rng_uniform01(rng));
}

inline std::int64_t rng_poisson(Rng& rng, double mean) {
  std::int64_t total = 0;
  // Multiplication method underflows for large means; split additively.
  while (mean > 500.0) {
    std::int64_t part = rng_poisson(rng, 500.0);
    total += part;
    mean -= 500.0;
  }
  if (mean <= 0.0) return total;
  double limit = std::exp(-mean);
  double prod = 1.0;
  std::int64_t k = 0;
  do {
    ++k;
    prod *= rng_uniform01(rng);
  } while (prod > limit);
  return total + k - 1;
}

inline bool rng_bernoulli(Rng& rng, double p) { return rng_uniform01(rng) < p; }

}  // namespace emodiff
