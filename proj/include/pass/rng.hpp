#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

namespace pass {

/// Counter-based generator: output i of stream (seed, stream) is a fixed
/// bijective mix of (key, i), so any draw is reproducible without replaying
/// the sequence and substreams never overlap.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  std::uint64_t counter() const { return counter_; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two outputs per call.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Circularly-symmetric complex Gaussian with unit variance.
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * 0.70710678118654752440, im * 0.70710678118654752440};
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pass
