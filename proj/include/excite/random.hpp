#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace excite {

using Rng = std::mt19937_64;

/// Deterministically derives an independent seed for sub-stream `stream`
/// of a run seeded with `seed` (splitmix64 finalizer over both inputs).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Index drawn proportionally to nonnegative, not necessarily normalized
// weights. `total` must equal their sum and be positive.
inline std::size_t sample_categorical(std::span<const double> weights, double total, Rng& rng) {
  double u = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // Rounding can leave u marginally nonnegative; fall back to the last
  // positive entry.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

// shape/rate parameterization.
inline double sample_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng) {
  std::vector<double> out(concentration.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::gamma_distribution<double>(concentration[i], 1.0)(rng);
    total += out[i];
  }
  if (total <= 0.0) {
    // Every draw underflowed; only reachable with tiny concentrations.
    for (auto& x : out) x = 1.0 / static_cast<double>(out.size());
    return out;
  }
  for (auto& x : out) x /= total;
  return out;
}

}  // namespace excite
