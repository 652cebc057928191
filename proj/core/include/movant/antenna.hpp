// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "movant/matfun.hpp"

namespace movant::antenna {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Absolute slack (meters) used by the geometry feasibility checks to absorb
/// floating-point residue from interval projections. Far below any physical
/// placement precision.
inline constexpr double kGeometryTol = 1e-12;

/// Plane-wave phase constant k = 2*pi/lambda with its wavelength and carrier.
class Wavenumber {
 public:
  static Wavenumber from_frequency(double f_c_hz);
  static Wavenumber from_wavelength(double lambda_m);

  double k() const noexcept { return k_; }
  double wavelength() const noexcept { return lambda_; }
  double frequency() const noexcept { return f_c_; }

 private:
  Wavenumber(double k, double lambda, double f_c)
      : k_(k), lambda_(lambda), f_c_(f_c) {}
  double k_, lambda_, f_c_;
};

/// Ordered element coordinates along one axis. Invariants (validated at
/// construction and after every move): strictly increasing, inside [0, D],
/// adjacent gaps >= min_spacing.
class ArrayGeometry {
 public:
  ArrayGeometry(std::vector<double> positions, double aperture,
                double min_spacing);

  int size() const noexcept { return static_cast<int>(positions_.size()); }
  double position(int i) const { return positions_[static_cast<size_t>(i)]; }
  std::span<const double> positions() const noexcept { return positions_; }
  double aperture() const noexcept { return aperture_; }
  double min_spacing() const noexcept { return min_spacing_; }

  /// Copy with one coordinate moved; revalidates all invariants.
  ArrayGeometry with_position(int index, double value) const;

 private:
  std::vector<double> positions_;
  double aperture_;
  double min_spacing_;
};

/// sin(x)/x with sinc(0) = 1; series branch below |x| = 1e-4 to avoid
/// cancellation.
double sinc(double x);

/// Far-field steering vector: entry i is exp(j*k*x_i*sin(theta)).
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta,
                                 const Wavenumber& k);

/// Stacks steering vectors over the given angles: row l is the transpose of
/// steering_vector(geom, angles[l]). Produces G(t) from AoDs and F(r) from
/// AoAs.
Eigen::MatrixXcd field_response_matrix(const ArrayGeometry& geom,
                                       std::span<const double> angles,
                                       const Wavenumber& k);

/// Mutual-coupling matrix for isotropic elements: entry (i, j) is
/// sinc(k*(x_i - x_j)). Unit diagonal, symmetric, positive definite for
/// distinct positions.
matfun::SpdMatrix mc_matrix(const ArrayGeometry& geom, const Wavenumber& k);

/// Element-wise derivative of the coupling matrix with respect to coordinate
/// m. Nonzero only in row m and column m, zero diagonal.
matfun::SymMatrix mc_matrix_d1(const ArrayGeometry& geom, const Wavenumber& k,
                               int m);

/// Element-wise second derivative with respect to coordinate m; same sparsity
/// pattern as mc_matrix_d1.
matfun::SymMatrix mc_matrix_d2(const ArrayGeometry& geom, const Wavenumber& k,
                               int m);

struct SteeringDerivs {
  Eigen::MatrixXcd d1;  // dFRM/dx_m  (nonzero only in column m)
  Eigen::MatrixXcd d2;  // d2FRM/dx_m^2
};

/// First and second derivatives of the field response matrix with respect to
/// coordinate m: column m picks up factors j*k*sin(theta_l) and
/// -k^2*sin^2(theta_l); every other column is zero.
SteeringDerivs steering_derivs(const ArrayGeometry& geom,
                               std::span<const double> angles,
                               const Wavenumber& k, int m);

}  // namespace movant::antenna
