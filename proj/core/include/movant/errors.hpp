// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace movant {

/// Raised when a coupling matrix is singular or too close to singular for
/// C^{-1/2} to be meaningful. Carries the offending eigenvalue.
class IllConditionedCoupling : public std::runtime_error {
 public:
  IllConditionedCoupling(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}

  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Raised when a caller breaks a documented precondition (bad dimensions,
/// infeasible geometry, invalid configuration, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace movant
