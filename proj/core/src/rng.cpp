// SPDX-License-Identifier: Apache-2.0
#include "movant/rng.hpp"

#include <cmath>
#include <numbers>

namespace movant {

namespace {

std::uint64_t splitmix64_step(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  return splitmix64_step(splitmix64_step(z));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::complex<double> Rng::complex_normal(double variance) {
  const double re = normal();
  const double im = normal();
  const double scale = std::sqrt(variance / 2.0);
  return {scale * re, scale * im};
}

}  // namespace movant
