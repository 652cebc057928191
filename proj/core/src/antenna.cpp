// SPDX-License-Identifier: Apache-2.0
#include "movant/antenna.hpp"

#include <cassert>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>

#include "movant/errors.hpp"

namespace movant::antenna {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

void validate_geometry(std::span<const double> pos, double aperture,
                       double min_spacing) {
  if (pos.empty()) {
    throw ContractViolation("ArrayGeometry: needs at least one element");
  }
  if (min_spacing <= 0.0) {
    throw ContractViolation("ArrayGeometry: min_spacing must be positive");
  }
  if (aperture < 0.0) {
    throw ContractViolation("ArrayGeometry: negative aperture");
  }
  if (pos.front() < -kGeometryTol) {
    throw ContractViolation("ArrayGeometry: first element below 0");
  }
  if (pos.back() > aperture + kGeometryTol) {
    throw ContractViolation("ArrayGeometry: last element beyond aperture");
  }
  for (size_t i = 1; i < pos.size(); ++i) {
    const double gap = pos[i] - pos[i - 1];
    if (gap < min_spacing - kGeometryTol) {
      throw ContractViolation("ArrayGeometry: spacing " + std::to_string(gap) +
                              " below minimum " + std::to_string(min_spacing) +
                              " between elements " + std::to_string(i - 1) +
                              " and " + std::to_string(i));
    }
  }
}

// d/dx sinc(k x) at separation x; only evaluated at |x| >= min spacing.
double sinc_d1(double k, double x) {
  return std::cos(k * x) / x - std::sin(k * x) / (k * x * x);
}

// d2/dx2 sinc(k x).
double sinc_d2(double k, double x) {
  return -k * std::sin(k * x) / x - 2.0 * std::cos(k * x) / (x * x) +
         2.0 * std::sin(k * x) / (k * x * x * x);
}

}  // namespace

Wavenumber Wavenumber::from_frequency(double f_c_hz) {
  if (f_c_hz <= 0.0) {
    throw ContractViolation("Wavenumber: carrier frequency must be positive");
  }
  const double lambda = kSpeedOfLight / f_c_hz;
  return Wavenumber(2.0 * std::numbers::pi / lambda, lambda, f_c_hz);
}

Wavenumber Wavenumber::from_wavelength(double lambda_m) {
  if (lambda_m <= 0.0) {
    throw ContractViolation("Wavenumber: wavelength must be positive");
  }
  return Wavenumber(2.0 * std::numbers::pi / lambda_m, lambda_m,
                    kSpeedOfLight / lambda_m);
}

ArrayGeometry::ArrayGeometry(std::vector<double> positions, double aperture,
                             double min_spacing)
    : positions_(std::move(positions)),
      aperture_(aperture),
      min_spacing_(min_spacing) {
  validate_geometry(positions_, aperture_, min_spacing_);
}

ArrayGeometry ArrayGeometry::with_position(int index, double value) const {
  std::vector<double> pos = positions_;
  pos.at(static_cast<size_t>(index)) = value;
  return ArrayGeometry(std::move(pos), aperture_, min_spacing_);
}

double sinc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta,
                                 const Wavenumber& k) {
  const double phase_per_meter = k.k() * std::sin(theta);
  Eigen::VectorXcd a(geom.size());
  for (int i = 0; i < geom.size(); ++i) {
    a(i) = std::exp(kImag * (phase_per_meter * geom.position(i)));
  }
  return a;
}

Eigen::MatrixXcd field_response_matrix(const ArrayGeometry& geom,
                                       std::span<const double> angles,
                                       const Wavenumber& k) {
  if (angles.empty()) {
    throw ContractViolation("field_response_matrix: empty angle list");
  }
  Eigen::MatrixXcd frm(static_cast<Eigen::Index>(angles.size()), geom.size());
  for (Eigen::Index l = 0; l < frm.rows(); ++l) {
    frm.row(l) = steering_vector(geom, angles[static_cast<size_t>(l)], k)
                     .transpose();
  }
  return frm;
}

matfun::SpdMatrix mc_matrix(const ArrayGeometry& geom, const Wavenumber& k) {
  const int n = geom.size();
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    c(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      const double v = sinc(k.k() * (geom.position(i) - geom.position(j)));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return matfun::SpdMatrix(std::move(c));
}

matfun::SymMatrix mc_matrix_d1(const ArrayGeometry& geom, const Wavenumber& k,
                               int m) {
  const int n = geom.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i == m) continue;
    // Entry (i, m) is sinc(k*(x_i - x_m)); its derivative in x_m equals the
    // sinc slope at (x_m - x_i) because sinc is even. Separations are bounded
    // away from zero by the geometry invariant.
    const double sep = geom.position(m) - geom.position(i);
    assert(std::abs(sep) >= geom.min_spacing() - kGeometryTol);
    const double v = sinc_d1(k.k(), sep);
    d(i, m) = v;
    d(m, i) = v;
  }
  return matfun::SymMatrix(std::move(d));
}

matfun::SymMatrix mc_matrix_d2(const ArrayGeometry& geom, const Wavenumber& k,
                               int m) {
  const int n = geom.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i == m) continue;
    const double sep = geom.position(m) - geom.position(i);
    assert(std::abs(sep) >= geom.min_spacing() - kGeometryTol);
    const double v = sinc_d2(k.k(), sep);
    d(i, m) = v;
    d(m, i) = v;
  }
  return matfun::SymMatrix(std::move(d));
}

SteeringDerivs steering_derivs(const ArrayGeometry& geom,
                               std::span<const double> angles,
                               const Wavenumber& k, int m) {
  const auto rows = static_cast<Eigen::Index>(angles.size());
  SteeringDerivs out{Eigen::MatrixXcd::Zero(rows, geom.size()),
                     Eigen::MatrixXcd::Zero(rows, geom.size())};
  const double x = geom.position(m);
  for (Eigen::Index l = 0; l < rows; ++l) {
    const double s = std::sin(angles[static_cast<size_t>(l)]);
    const std::complex<double> e = std::exp(kImag * (k.k() * x * s));
    out.d1(l, m) = kImag * k.k() * s * e;
    out.d2(l, m) = -k.k() * k.k() * s * s * e;
  }
  return out;
}

}  // namespace movant::antenna
