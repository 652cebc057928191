// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace movant::matfun {

/// Coupling matrices whose smallest eigenvalue is at or below this floor are
/// rejected by spd_sqrt / spd_inv_sqrt. A 0.2-wavelength compact array has
/// lambda_min around 1e-6, so the floor sits far below anything a feasible
/// geometry produces.
inline constexpr double kConditioningFloor = 1e-12;

/// Relative Frobenius tolerance for the symmetry checks at construction.
inline constexpr double kSymmetryTol = 1e-12;

/// Real symmetric matrix, possibly indefinite. Symmetry is validated at
/// construction (relative Frobenius tolerance kSymmetryTol).
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& m() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }

 private:
  Eigen::MatrixXd entries_;
};

/// Real symmetric positive definite matrix. Construction validates symmetry,
/// runs the symmetric eigendecomposition, and requires every eigenvalue to be
/// strictly positive. The decomposition is kept: square roots and the
/// Sylvester solves below all reuse it.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd entries);

  static SpdMatrix identity(Eigen::Index dim);

  const Eigen::MatrixXd& m() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double min_eigenvalue() const noexcept { return eigenvalues_(0); }

 private:
  Eigen::MatrixXd entries_;
  Eigen::VectorXd eigenvalues_;   // ascending
  Eigen::MatrixXd eigenvectors_;
};

/// Symmetric positive definite square root S with S*S = C.
SpdMatrix spd_sqrt(const SpdMatrix& c);

/// Inverse square root W with W*C*W = I.
SpdMatrix spd_inv_sqrt(const SpdMatrix& c);

/// Solves A*X + X*B = Q for X, with A and B positive definite (their spectra
/// are disjoint from each other's negatives, so the solution is unique).
/// Solved entrywise in the eigenbases of A and B.
Eigen::MatrixXd solve_sylvester(const SpdMatrix& a, const SpdMatrix& b,
                                const Eigen::MatrixXd& q);

/// Directional derivative of C^{1/2}: solves D*C^{1/2} + C^{1/2}*D = dC.
SymMatrix d_sqrt(const SpdMatrix& c, const SymMatrix& dc);

/// Directional derivative of C^{-1/2}:
/// solves D*C^{1/2} + C^{1/2}*D = -C^{-1/2}*dC*C^{-1/2}.
SymMatrix d_inv_sqrt(const SpdMatrix& c, const SymMatrix& dc);

/// Second directional derivative of C^{-1/2} along a path with first
/// derivative dC and second derivative d2C. Materializes d_sqrt and
/// d_inv_sqrt, assembles the five right-hand-side terms, then runs one
/// Sylvester solve.
SymMatrix d2_inv_sqrt(const SpdMatrix& c, const SymMatrix& dc,
                      const SymMatrix& d2c);

}  // namespace movant::matfun
