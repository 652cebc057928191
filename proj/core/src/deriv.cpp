// SPDX-License-Identifier: Apache-2.0
#include "movant/deriv.hpp"

#include <cmath>
#include <numbers>

#include "movant/errors.hpp"
#include "movant/matfun.hpp"

namespace movant::deriv {

namespace {

// Shared pieces of the derivative chain for one coordinate: the frozen-side
// left product and the varying-side brackets. For a transmit update these
// satisfy  dH = A diag(b) K1  and  d2H = A diag(b) K2; a receive update works
// on H^H, which has the same structure with the roles of the two sides
// swapped and the path response conjugated.
struct EffFactors {
  Eigen::MatrixXcd frozen_left;  // n_frozen x L
  Eigen::MatrixXcd k1;           // L x n_varying
  Eigen::MatrixXcd k2;
};

EffFactors eff_factors(const LinkView& link, CoordinateSide coord) {
  const bool tx_side = coord.side == Side::transmit;
  const channel::SideFactors& varying = tx_side ? *link.tx : *link.rx;
  const channel::SideFactors& frozen = tx_side ? *link.rx : *link.tx;
  const std::span<const double> angles = tx_side ? link.aod : link.aoa;
  if (coord.index < 0 || coord.index >= varying.geom.size()) {
    throw ContractViolation("objective_derivs: coordinate out of range");
  }

  const auto [d_frm, d2_frm] =
      antenna::steering_derivs(varying.geom, angles, link.k, coord.index);
  const Eigen::MatrixXcd w = varying.coupling_inv_sqrt.cast<std::complex<double>>();

  EffFactors out;
  out.frozen_left = frozen.coupling_inv_sqrt.cast<std::complex<double>>() *
                    frozen.frm.adjoint();
  if (link.coupling_aware) {
    const matfun::SymMatrix dc =
        antenna::mc_matrix_d1(varying.geom, link.k, coord.index);
    const matfun::SymMatrix d2c =
        antenna::mc_matrix_d2(varying.geom, link.k, coord.index);
    const Eigen::MatrixXcd dw =
        matfun::d_inv_sqrt(varying.coupling, dc).m().cast<std::complex<double>>();
    const Eigen::MatrixXcd d2w =
        matfun::d2_inv_sqrt(varying.coupling, dc, d2c)
            .m()
            .cast<std::complex<double>>();
    out.k1 = d_frm * w + varying.frm * dw;
    out.k2 = d2_frm * w + 2.0 * d_frm * dw + varying.frm * d2w;
  } else {
    out.k1 = d_frm * w;
    out.k2 = d2_frm * w;
  }
  return out;
}

// Derivatives of log2 det(I + H W H^H / noise) given the channel derivatives,
// with W held fixed. Phi is applied through its Cholesky factor rather than
// being formed explicitly.
DerivPair logdet_derivs(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                        const Eigen::MatrixXcd& d2h, const Eigen::MatrixXcd& w,
                        double noise) {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(h.rows(), h.rows()) +
                       (h * w * h.adjoint()) / noise;
  a = 0.5 * (a + a.adjoint().eval());
  Eigen::LLT<Eigen::MatrixXcd> llt(a);

  const Eigen::MatrixXcd wh = w * h.adjoint();      // M x N
  const Eigen::MatrixXcd x = dh * wh;               // N x N
  const Eigen::MatrixXcd phi_x = llt.solve(x);

  const double g_nats = 2.0 / noise * phi_x.trace().real();

  const Eigen::MatrixXcd curv = d2h * wh + dh * w * dh.adjoint();
  const std::complex<double> t1 = llt.solve(curv).trace();
  const std::complex<double> t2 = (phi_x * phi_x).trace();
  const std::complex<double> t3 = (phi_x * llt.solve(x.adjoint())).trace();
  const double h_nats =
      2.0 / noise * (t1 - (t2 + t3) / noise).real();

  return DerivPair{g_nats / std::numbers::ln2, h_nats / std::numbers::ln2};
}

}  // namespace

ChannelDerivs channel_derivs(const LinkView& link, const Eigen::VectorXcd& prm,
                             CoordinateSide coord) {
  const EffFactors f = eff_factors(link, coord);
  if (coord.side == Side::transmit) {
    return ChannelDerivs{f.frozen_left * prm.asDiagonal() * f.k1,
                         f.frozen_left * prm.asDiagonal() * f.k2};
  }
  // The receive chain differentiates H^H; transpose back to H.
  const Eigen::VectorXcd prm_conj = prm.conjugate();
  return ChannelDerivs{
      (f.frozen_left * prm_conj.asDiagonal() * f.k1).adjoint(),
      (f.frozen_left * prm_conj.asDiagonal() * f.k2).adjoint()};
}

DerivPair objective_derivs(const LinkView& link,
                           std::span<const CarrierState> carriers,
                           std::span<const Eigen::VectorXcd> prm,
                           double noise_power, CoordinateSide coord) {
  if (carriers.size() != prm.size() || carriers.empty()) {
    throw ContractViolation("objective_derivs: carrier list mismatch");
  }
  const EffFactors f = eff_factors(link, coord);
  const bool tx_side = coord.side == Side::transmit;

  DerivPair total;
  for (size_t nu = 0; nu < carriers.size(); ++nu) {
    const Eigen::VectorXcd b = tx_side ? prm[nu] : prm[nu].conjugate();
    const Eigen::MatrixXcd dh = f.frozen_left * b.asDiagonal() * f.k1;
    const Eigen::MatrixXcd d2h = f.frozen_left * b.asDiagonal() * f.k2;
    const Eigen::MatrixXcd heff =
        tx_side ? *carriers[nu].h : carriers[nu].h->adjoint();
    const DerivPair p =
        logdet_derivs(heff, dh, d2h, *carriers[nu].w, noise_power);
    total.first += p.first;
    total.second += p.second;
  }
  return total;
}

DerivPair objective_derivs_nb(const LinkView& link, const Eigen::MatrixXcd& h,
                              const Eigen::MatrixXcd& w,
                              const Eigen::VectorXcd& prm, double noise_power,
                              CoordinateSide coord) {
  const CarrierState carrier{&h, &w};
  return objective_derivs(link, {&carrier, 1}, {&prm, 1}, noise_power, coord);
}

}  // namespace movant::deriv
