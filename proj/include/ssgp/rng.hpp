#pragma once

#include <cstdint>
#include <random>

namespace ssgp {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used only for seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of `master`.
///
/// Rule: derive_seed(m, i) = splitmix64(m ^ splitmix64(i)). Replicate r of a
/// benchmark uses derive_seed(master, r); within a replicate, the design, the
/// chain and the test points use derive_seed(replicate_seed, k) with k = 0, 1, 2.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(master ^ splitmix64(stream));
}

/// Deterministic generator: std::mt19937_64 seeded with a single 64-bit value.
///
/// The engine sequence is fixed by the standard. Variates go through the
/// standard library distributions, whose algorithms are implementation
/// defined, so bit-reproducibility holds per toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma(shape, scale = 1).
  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ssgp
