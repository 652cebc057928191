// SPDX-License-Identifier: Apache-2.0
#include "movant/rate.hpp"

#include <cmath>
#include <numbers>

namespace movant::rate {

namespace {

// Retained singular values after the relative rank cutoff.
Eigen::VectorXd retained(const Eigen::VectorXd& singulars) {
  if (singulars.size() == 0) return singulars;
  const double cutoff = kRankTol * singulars.maxCoeff();
  int count = 0;
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    if (singulars(i) > cutoff) ++count;
  }
  Eigen::VectorXd out(count);
  int j = 0;
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    if (singulars(i) > cutoff) out(j++) = singulars(i);
  }
  return out;
}

// Finds mu with sum_i max(0, mu - inv_gain_i) = p_max by bisection on
// [min(inv_gain), min(inv_gain) + p_max]; the bracket width is exactly p_max,
// so the resolution scales with the budget. The bisection runs down to the
// rounding floor, far below kPowerTol, so algebraically equal allocations
// (e.g. S identical carriers vs one carrier at budget/S) agree to machine
// precision.
double water_level_bisect(const std::vector<double>& inv_gains, double p_max) {
  double lo = inv_gains[0];
  for (double g : inv_gains) lo = std::min(lo, g);
  double hi = lo + p_max;
  const auto allocated = [&](double mu) {
    double total = 0.0;
    for (double g : inv_gains) total += std::max(0.0, mu - g);
    return total;
  };
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted
    if (allocated(mid) < p_max) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_power(double p_max) {
  if (!(p_max > 0.0)) {
    throw ContractViolation("water_fill: power budget must be positive");
  }
}

}  // namespace

double capacity_bits(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& q,
                     double noise_power) {
  if (!(noise_power > 0.0)) {
    throw ContractViolation("capacity_bits: noise power must be positive");
  }
  if (q.rows() != q.cols() || q.rows() != h.cols()) {
    throw ContractViolation("capacity_bits: dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> qe(q,
                                                     Eigen::EigenvaluesOnly);
  const double trace = q.real().trace();
  if (qe.eigenvalues()(0) < -1e-10 * trace) {
    throw ContractViolation("capacity_bits: covariance is not PSD");
  }

  Eigen::MatrixXcd a =
      Eigen::MatrixXcd::Identity(h.rows(), h.rows()) +
      (h * q * h.adjoint()) / noise_power;
  a = 0.5 * (a + a.adjoint().eval());
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() == Eigen::Success) {
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      logdet += std::log(std::real(llt.matrixLLT()(i, i)));
    }
    return 2.0 * logdet / std::numbers::ln2;
  }
  // I + PSD can only trip the Cholesky through rounding; fall back on the
  // eigenvalues.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a,
                                                      Eigen::EigenvaluesOnly);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    logdet += std::log(std::max(eig.eigenvalues()(i), 1e-300));
  }
  return logdet / std::numbers::ln2;
}

PowerAllocation water_fill(const Eigen::VectorXd& singulars,
                           double noise_power, double p_max) {
  check_power(p_max);
  if (singulars.size() == 0 || singulars.minCoeff() <= 0.0) {
    throw ContractViolation("water_fill: singular values must be positive");
  }
  std::vector<double> inv_gains(static_cast<size_t>(singulars.size()));
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    inv_gains[static_cast<size_t>(i)] =
        noise_power / (singulars(i) * singulars(i));
  }
  PowerAllocation alloc;
  alloc.water_level = water_level_bisect(inv_gains, p_max);
  alloc.powers.resize(singulars.size());
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    alloc.powers(i) =
        std::max(0.0, alloc.water_level - inv_gains[static_cast<size_t>(i)]);
  }
  return alloc;
}

PowerAllocation optimal_Q(const Eigen::MatrixXcd& h, double noise_power,
                          double p_max) {
  check_power(p_max);
  if (h.size() == 0 || h.norm() == 0.0) {
    throw ContractViolation("optimal_Q: channel is zero");
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = retained(svd.singularValues());
  const Eigen::Index rank = sv.size();

  PowerAllocation alloc = water_fill(sv, noise_power, p_max);
  const Eigen::MatrixXcd u = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXcd v = svd.matrixV().leftCols(rank);
  alloc.tx_cov = v * alloc.powers.asDiagonal() * v.adjoint();
  alloc.rx_cov = u * alloc.powers.asDiagonal() * u.adjoint();
  return alloc;
}

double MulticarrierAllocation::total_power() const {
  double total = 0.0;
  for (const auto& a : per_carrier) total += a.total_power();
  return total;
}

MulticarrierAllocation water_fill_multicarrier(
    std::span<const Eigen::VectorXd> per_carrier_singulars, double noise_power,
    double p_max) {
  check_power(p_max);
  std::vector<double> inv_gains;
  for (const auto& sv : per_carrier_singulars) {
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) <= 0.0) {
        throw ContractViolation(
            "water_fill_multicarrier: singular values must be positive");
      }
      inv_gains.push_back(noise_power / (sv(i) * sv(i)));
    }
  }
  if (inv_gains.empty()) {
    throw ContractViolation("water_fill_multicarrier: no eigenchannels");
  }

  MulticarrierAllocation alloc;
  alloc.water_level = water_level_bisect(inv_gains, p_max);
  alloc.per_carrier.reserve(per_carrier_singulars.size());
  for (const auto& sv : per_carrier_singulars) {
    PowerAllocation pa;
    pa.water_level = alloc.water_level;
    pa.powers.resize(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      pa.powers(i) = std::max(
          0.0, alloc.water_level - noise_power / (sv(i) * sv(i)));
    }
    alloc.per_carrier.push_back(std::move(pa));
  }
  return alloc;
}

MulticarrierAllocation optimal_Q_multicarrier(
    std::span<const Eigen::MatrixXcd> channels, double noise_power,
    double p_max) {
  check_power(p_max);
  std::vector<Eigen::MatrixXcd> u(channels.size()), v(channels.size());
  std::vector<Eigen::VectorXd> sv(channels.size());
  for (size_t nu = 0; nu < channels.size(); ++nu) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
        channels[nu], Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd kept = retained(svd.singularValues());
    sv[nu] = kept;
    u[nu] = svd.matrixU().leftCols(kept.size());
    v[nu] = svd.matrixV().leftCols(kept.size());
  }
  MulticarrierAllocation alloc =
      water_fill_multicarrier(sv, noise_power, p_max);
  for (size_t nu = 0; nu < channels.size(); ++nu) {
    auto& pa = alloc.per_carrier[nu];
    pa.tx_cov = v[nu] * pa.powers.asDiagonal() * v[nu].adjoint();
    pa.rx_cov = u[nu] * pa.powers.asDiagonal() * u[nu].adjoint();
  }
  return alloc;
}

double sum_rate(std::span<const Eigen::MatrixXcd> channels,
                const MulticarrierAllocation& allocation, double noise_power,
                int s, int s_cp) {
  if (channels.size() != allocation.per_carrier.size() ||
      static_cast<size_t>(s) != channels.size() || s_cp < 0) {
    throw ContractViolation("sum_rate: dimension mismatch");
  }
  double total = 0.0;
  for (size_t nu = 0; nu < channels.size(); ++nu) {
    const auto& q = allocation.per_carrier[nu].tx_cov;
    if (q.size() == 0) continue;  // carrier without an assembled covariance
    total += capacity_bits(channels[nu], q, noise_power);
  }
  return total * static_cast<double>(s) / static_cast<double>(s + s_cp);
}

}  // namespace movant::rate
