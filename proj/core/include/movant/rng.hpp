// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace movant {

/// Derives the seed of one Monte Carlo trial from the master seed and the
/// trial index (splitmix64 mixing), so trials are independent streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Seedable generator with explicitly spelled-out double transforms.
///
/// mt19937_64 output is pinned by the standard, but std::*_distribution is
/// implementation-defined, so uniform and normal variates are produced here
/// by fixed formulas (53-bit mantissa scaling, Box-Muller). Two runs with the
/// same seed produce the same stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached, so draws come in a fixed order.
  double normal();

  /// Circularly symmetric complex Gaussian with the given total variance.
  /// Always consumes two normal draws, even when variance == 0.
  std::complex<double> complex_normal(double variance);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace movant
