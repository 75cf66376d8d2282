#pragma once

#include <cstdint>
#include <random>

namespace vep {

/// Seeded 64-bit generator with independent streams.
///
/// Each (seed, stream) pair is hashed with SplitMix64 into the state of a
/// mt19937_64; normals come from Boost's ziggurat sampler, whose output is
/// specified by the library rather than by the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// A generator for a different stream of the same seed.
  [[nodiscard]] Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal(double mean = 0.0, double sd = 1.0);
  bool bernoulli(double p);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace vep
