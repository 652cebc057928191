// SPDX-License-Identifier: Apache-2.0
#include "movant/matfun.hpp"

#include <string>
#include <utility>

#include "movant/errors.hpp"

namespace movant::matfun {

namespace {

void check_symmetric(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw ContractViolation(std::string(who) + ": matrix is not square");
  }
  const double asym = (m - m.transpose()).norm();
  if (asym > kSymmetryTol * m.norm()) {
    throw ContractViolation(std::string(who) + ": matrix is not symmetric");
  }
}

// Solves X*C^{1/2} + C^{1/2}*X = Q for symmetric Q in the eigenbasis of C,
// reusing the decomposition stored in C itself. The exact solution is
// symmetric; the assembled product is symmetrized to strip rounding noise,
// which matters when C is close to the conditioning floor.
Eigen::MatrixXd solve_sylvester_sqrt(const SpdMatrix& c,
                                     const Eigen::MatrixXd& q) {
  const Eigen::MatrixXd& u = c.eigenvectors();
  const Eigen::VectorXd roots = c.eigenvalues().cwiseSqrt();
  Eigen::MatrixXd qt = u.transpose() * q * u;
  for (Eigen::Index j = 0; j < qt.cols(); ++j) {
    for (Eigen::Index i = 0; i < qt.rows(); ++i) {
      qt(i, j) /= roots(i) + roots(j);
    }
  }
  Eigen::MatrixXd x = u * qt * u.transpose();
  x = 0.5 * (x + x.transpose().eval());
  return x;
}

void check_floor(const SpdMatrix& c, const char* who) {
  if (c.min_eigenvalue() <= kConditioningFloor) {
    throw IllConditionedCoupling(
        std::string(who) + ": smallest eigenvalue " +
            std::to_string(c.min_eigenvalue()) + " at or below floor",
        c.min_eigenvalue());
  }
}

}  // namespace

SymMatrix::SymMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  check_symmetric(entries_, "SymMatrix");
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  check_symmetric(entries_, "SpdMatrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_);
  if (eig.info() != Eigen::Success) {
    throw ContractViolation("SpdMatrix: eigendecomposition failed");
  }
  eigenvalues_ = eig.eigenvalues();
  eigenvectors_ = eig.eigenvectors();
  if (eigenvalues_(0) <= 0.0) {
    throw IllConditionedCoupling(
        "SpdMatrix: matrix is not positive definite (min eigenvalue " +
            std::to_string(eigenvalues_(0)) + ")",
        eigenvalues_(0));
  }
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) {
  return SpdMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

SpdMatrix spd_sqrt(const SpdMatrix& c) {
  check_floor(c, "spd_sqrt");
  const Eigen::MatrixXd& u = c.eigenvectors();
  return SpdMatrix(u * c.eigenvalues().cwiseSqrt().asDiagonal() *
                   u.transpose());
}

SpdMatrix spd_inv_sqrt(const SpdMatrix& c) {
  check_floor(c, "spd_inv_sqrt");
  const Eigen::MatrixXd& u = c.eigenvectors();
  return SpdMatrix(u * c.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   u.transpose());
}

Eigen::MatrixXd solve_sylvester(const SpdMatrix& a, const SpdMatrix& b,
                                const Eigen::MatrixXd& q) {
  if (q.rows() != a.dim() || q.cols() != b.dim()) {
    throw ContractViolation("solve_sylvester: dimension mismatch");
  }
  Eigen::MatrixXd qt = a.eigenvectors().transpose() * q * b.eigenvectors();
  for (Eigen::Index j = 0; j < qt.cols(); ++j) {
    for (Eigen::Index i = 0; i < qt.rows(); ++i) {
      qt(i, j) /= a.eigenvalues()(i) + b.eigenvalues()(j);
    }
  }
  return a.eigenvectors() * qt * b.eigenvectors().transpose();
}

SymMatrix d_sqrt(const SpdMatrix& c, const SymMatrix& dc) {
  if (dc.dim() != c.dim()) {
    throw ContractViolation("d_sqrt: dimension mismatch");
  }
  check_floor(c, "d_sqrt");
  return SymMatrix(solve_sylvester_sqrt(c, dc.m()));
}

SymMatrix d_inv_sqrt(const SpdMatrix& c, const SymMatrix& dc) {
  if (dc.dim() != c.dim()) {
    throw ContractViolation("d_inv_sqrt: dimension mismatch");
  }
  check_floor(c, "d_inv_sqrt");
  const Eigen::MatrixXd w = spd_inv_sqrt(c).m();
  return SymMatrix(solve_sylvester_sqrt(c, -w * dc.m() * w));
}

SymMatrix d2_inv_sqrt(const SpdMatrix& c, const SymMatrix& dc,
                      const SymMatrix& d2c) {
  if (dc.dim() != c.dim() || d2c.dim() != c.dim()) {
    throw ContractViolation("d2_inv_sqrt: dimension mismatch");
  }
  check_floor(c, "d2_inv_sqrt");
  const Eigen::MatrixXd w = spd_inv_sqrt(c).m();
  const Eigen::MatrixXd d1w = d_inv_sqrt(c, dc).m();
  const Eigen::MatrixXd d1s = d_sqrt(c, dc).m();
  Eigen::MatrixXd rhs = -w * d2c.m() * w;
  rhs.noalias() -= w * dc.m() * d1w;
  rhs.noalias() -= d1w * dc.m() * w;
  rhs.noalias() -= d1s * d1w;
  rhs.noalias() -= d1w * d1s;
  return SymMatrix(solve_sylvester_sqrt(c, rhs));
}

}  // namespace movant::matfun
