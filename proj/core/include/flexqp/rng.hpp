#pragma once

#include <cstdint>

namespace flexqp {

/// Counter-based SplitMix64 stream. Draw i (0-based) is
///   mix(seed + (i + 1) * 0x9E3779B97F4A7C15)
/// with the standard SplitMix64 finalizer, so any implementation that
/// follows this definition reproduces the same datasets.
///
/// uniform():  (bits >> 11) * 2^-53, in [0, 1).
/// normal():   Box-Muller on two consecutive uniforms u1, u2, returning
///             sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sine branch is unused.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

}  // namespace flexqp
