// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include <Eigen/Dense>

#include "movant/channel.hpp"

namespace movant::deriv {

enum class Side { transmit, receive };

/// Selects one scalar optimization variable: coordinate `index` of the
/// transmit or receive array.
struct CoordinateSide {
  Side side = Side::transmit;
  int index = 0;
};

/// First and second derivative of the rate objective with respect to one
/// coordinate, in bits (per meter, per meter^2).
struct DerivPair {
  double first = 0.0;
  double second = 0.0;
};

/// Everything the derivative chain reads. The side being moved supplies live
/// factors; the opposite side's factors are the cached values from the last
/// update of that side and are never recomputed here. With coupling_aware
/// false the coupling matrices are constants (identity), so their derivative
/// terms vanish.
struct LinkView {
  const channel::SideFactors* tx = nullptr;
  const channel::SideFactors* rx = nullptr;
  std::span<const double> aod;
  std::span<const double> aoa;
  antenna::Wavenumber k = antenna::Wavenumber::from_wavelength(1.0);
  bool coupling_aware = true;
};

/// Channel matrix and the covariance the objective holds fixed: Q for a
/// transmit update, the receive-side mirror S for a receive update.
struct CarrierState {
  const Eigen::MatrixXcd* h = nullptr;
  const Eigen::MatrixXcd* w = nullptr;
};

/// First and second derivatives of the effective channel H with respect to
/// the selected coordinate (same shape as H).
struct ChannelDerivs {
  Eigen::MatrixXcd d1;
  Eigen::MatrixXcd d2;
};

ChannelDerivs channel_derivs(const LinkView& link, const Eigen::VectorXcd& prm,
                             CoordinateSide coord);

/// Derivatives of the log-det objective with respect to one coordinate,
/// summed over the given carriers (one carrier = flat fading). The geometry
/// factor derivatives are computed once; only the path response varies per
/// carrier.
DerivPair objective_derivs(const LinkView& link,
                           std::span<const CarrierState> carriers,
                           std::span<const Eigen::VectorXcd> prm,
                           double noise_power, CoordinateSide coord);

/// Single-carrier convenience wrapper.
DerivPair objective_derivs_nb(const LinkView& link, const Eigen::MatrixXcd& h,
                              const Eigen::MatrixXcd& w,
                              const Eigen::VectorXcd& prm, double noise_power,
                              CoordinateSide coord);

}  // namespace movant::deriv
