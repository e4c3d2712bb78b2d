#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rdmdp {

/// Explicit random source. Every stochastic operation in the library takes one of
/// these by reference; there is no global generator.
///
/// The conversions to uniform and normal variates are written out here instead of
/// going through <random> distributions so that streams are bit-reproducible across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

  /// Draws an index from an unnormalized-but-nonnegative weight vector.
  std::size_t categorical(std::span<const double> weights);

  /// Derives an independent child stream; advances this stream by one draw.
  Rng split() { return Rng(engine_() ^ 0x9E3779B97F4A7C15ULL); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rdmdp
