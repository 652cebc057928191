// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "movant/errors.hpp"

namespace movant::rate {

/// Singular values below kRankTol times the largest are treated as zero when
/// the channel rank is determined.
inline constexpr double kRankTol = 1e-10;

/// The water-level bisection stops once the allocated total is within
/// kPowerTol * p_max of the budget.
inline constexpr double kPowerTol = 1e-9;

/// Water-filled powers over the eigenchannels of one carrier, with the
/// transmit covariance Q = V diag(P) V^H and its receive-side mirror
/// S = U diag(P) U^H used by the receive-position objective. water_fill()
/// fills only powers and the water level; optimal_Q() also fills the
/// covariances.
struct PowerAllocation {
  Eigen::VectorXd powers;     // per retained eigenchannel
  double water_level = 0.0;
  Eigen::MatrixXcd tx_cov;    // M x M (empty unless built from an SVD)
  Eigen::MatrixXcd rx_cov;    // N x N

  double total_power() const { return powers.sum(); }
};

/// log2 det(I + H Q H^H / noise). Q must be Hermitian positive semidefinite.
double capacity_bits(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& q,
                     double noise_power);

/// Water-filling over the given singular values (all positive): allocates
/// P_i = max(0, mu - noise/lambda_i^2) with mu found by bisection so the
/// powers sum to p_max.
PowerAllocation water_fill(const Eigen::VectorXd& singulars,
                           double noise_power, double p_max);

/// Capacity-optimal covariance for one carrier: SVD, water-filling over the
/// retained modes, Q from the right singular vectors. Also assembles the
/// receive-side mirror.
PowerAllocation optimal_Q(const Eigen::MatrixXcd& h, double noise_power,
                          double p_max);

/// Joint allocation across subcarriers under one total power budget: a single
/// water level spans all (carrier, eigenchannel) pairs.
struct MulticarrierAllocation {
  std::vector<PowerAllocation> per_carrier;
  double water_level = 0.0;

  double total_power() const;
};

MulticarrierAllocation water_fill_multicarrier(
    std::span<const Eigen::VectorXd> per_carrier_singulars, double noise_power,
    double p_max);

/// Per-carrier SVDs plus a joint water-filling; covariances filled in.
MulticarrierAllocation optimal_Q_multicarrier(
    std::span<const Eigen::MatrixXcd> channels, double noise_power,
    double p_max);

/// CP-discounted sum of per-subcarrier capacities:
/// (S / (S + s_cp)) * sum_nu capacity(h[nu], Q[nu]).
double sum_rate(std::span<const Eigen::MatrixXcd> channels,
                const MulticarrierAllocation& allocation, double noise_power,
                int s, int s_cp);

}  // namespace movant::rate
