// SPDX-License-Identifier: Apache-2.0
#include "movant/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "movant/errors.hpp"

namespace movant::channel {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

// Triangular pulse on [-1, 1].
double pulse(double t) {
  const double a = std::abs(t);
  return a >= 1.0 ? 0.0 : 1.0 - a;
}

}  // namespace

double PathSet::min_delay() const {
  return *std::min_element(delays.begin(), delays.end());
}

double PathSet::max_delay() const {
  return *std::max_element(delays.begin(), delays.end());
}

void PathSet::validate() const {
  const size_t n = gains.size();
  if (n == 0) {
    throw ContractViolation("PathSet: needs at least one path");
  }
  if (aod.size() != n || aoa.size() != n || delays.size() != n) {
    throw ContractViolation("PathSet: field lengths disagree");
  }
  for (size_t i = 0; i < n; ++i) {
    if (!(delays[i] >= 0.0)) {
      throw ContractViolation("PathSet: negative or NaN delay");
    }
    if (!std::isfinite(gains[i].real()) || !std::isfinite(gains[i].imag()) ||
        !std::isfinite(aod[i]) || !std::isfinite(aoa[i])) {
      throw ContractViolation("PathSet: non-finite entry");
    }
  }
}

OfdmGrid OfdmGrid::for_paths(int num_subcarriers, double spacing_hz,
                             const PathSet& paths) {
  if (num_subcarriers < 1 || spacing_hz <= 0.0) {
    throw ContractViolation("OfdmGrid: need S >= 1 and positive spacing");
  }
  paths.validate();
  const double spread = paths.max_delay() - paths.min_delay();
  OfdmGrid grid;
  grid.num_subcarriers = num_subcarriers;
  grid.spacing_hz = spacing_hz;
  grid.max_tap = std::max(
      0, static_cast<int>(std::ceil(num_subcarriers * spacing_hz * spread)));
  grid.cp_len = grid.max_tap;
  return grid;
}

SideFactors make_side_factors(const antenna::ArrayGeometry& geom,
                              std::span<const double> angles,
                              const antenna::Wavenumber& k,
                              bool coupling_aware) {
  Eigen::MatrixXcd frm = antenna::field_response_matrix(geom, angles, k);
  if (!coupling_aware) {
    return SideFactors{geom, std::move(frm),
                       matfun::SpdMatrix::identity(geom.size()),
                       Eigen::MatrixXd::Identity(geom.size(), geom.size())};
  }
  matfun::SpdMatrix coupling = antenna::mc_matrix(geom, k);
  Eigen::MatrixXd inv_sqrt = matfun::spd_inv_sqrt(coupling).m();
  return SideFactors{geom, std::move(frm), std::move(coupling),
                     std::move(inv_sqrt)};
}

Eigen::MatrixXcd assemble_from_factors(const SideFactors& rx,
                                       const Eigen::VectorXcd& prm,
                                       const SideFactors& tx) {
  return rx.coupling_inv_sqrt *
         (rx.frm.adjoint() * prm.asDiagonal() * tx.frm) *
         tx.coupling_inv_sqrt;
}

EffectiveChannel assemble_narrowband(const antenna::ArrayGeometry& t,
                                     const antenna::ArrayGeometry& r,
                                     const PathSet& paths,
                                     const antenna::Wavenumber& k,
                                     bool coupling_aware) {
  paths.validate();
  SideFactors tx = make_side_factors(t, paths.aod, k, coupling_aware);
  SideFactors rx = make_side_factors(r, paths.aoa, k, coupling_aware);
  Eigen::VectorXcd prm = Eigen::Map<const Eigen::VectorXcd>(
      paths.gains.data(), static_cast<Eigen::Index>(paths.gains.size()));
  Eigen::MatrixXcd h = assemble_from_factors(rx, prm, tx);
  return EffectiveChannel{std::move(tx), std::move(rx), std::move(prm),
                          std::move(h)};
}

std::complex<double> time_domain_gain(const PathSet& paths, int path, int tap,
                                      const OfdmGrid& grid,
                                      const antenna::Wavenumber& k) {
  if (path < 0 || path >= paths.size() || tap < 0 || tap > grid.max_tap) {
    throw ContractViolation("time_domain_gain: index out of range");
  }
  const double excess = paths.delays[static_cast<size_t>(path)] -
                        paths.min_delay();
  // k * c * excess = 2*pi*f_c*excess: the carrier phase of the excess delay.
  const std::complex<double> rot =
      std::exp(-kImag * (k.k() * excess * antenna::kSpeedOfLight));
  const double offset =
      static_cast<double>(tap) -
      grid.num_subcarriers * grid.spacing_hz * excess;
  return paths.gains[static_cast<size_t>(path)] * rot * pulse(offset);
}

std::vector<Eigen::VectorXcd> freq_domain_prm(const PathSet& paths,
                                              const OfdmGrid& grid,
                                              const antenna::Wavenumber& k) {
  const int num_paths = paths.size();
  const int s = grid.num_subcarriers;

  // Tap gains first; T is small so the DFT over taps is evaluated directly.
  Eigen::MatrixXcd taps(num_paths, grid.max_tap + 1);
  for (int l = 0; l < num_paths; ++l) {
    for (int tap = 0; tap <= grid.max_tap; ++tap) {
      taps(l, tap) = time_domain_gain(paths, l, tap, grid, k);
    }
  }

  std::vector<Eigen::VectorXcd> prm(static_cast<size_t>(s));
  for (int nu = 0; nu < s; ++nu) {
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(num_paths);
    for (int tap = 0; tap <= grid.max_tap; ++tap) {
      const std::complex<double> twiddle = std::exp(
          -kImag * (2.0 * std::numbers::pi * nu * tap / static_cast<double>(s)));
      b += taps.col(tap) * twiddle;
    }
    prm[static_cast<size_t>(nu)] = std::move(b);
  }
  return prm;
}

WidebandChannel assemble_wideband(const antenna::ArrayGeometry& t,
                                  const antenna::ArrayGeometry& r,
                                  const PathSet& paths, const OfdmGrid& grid,
                                  const antenna::Wavenumber& k,
                                  bool coupling_aware) {
  paths.validate();
  WidebandChannel ch{make_side_factors(t, paths.aod, k, coupling_aware),
                     make_side_factors(r, paths.aoa, k, coupling_aware),
                     grid,
                     freq_domain_prm(paths, grid, k),
                     {}};
  ch.h.reserve(ch.prm.size());
  for (const auto& b : ch.prm) {
    ch.h.push_back(assemble_from_factors(ch.rx, b, ch.tx));
  }
  return ch;
}

}  // namespace movant::channel
