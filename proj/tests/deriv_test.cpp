// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "movant/deriv.hpp"
#include "movant/rate.hpp"
#include "support/oracles.hpp"

using movant::Rng;
using namespace movant::antenna;
using namespace movant::channel;
using namespace movant::deriv;
namespace oracle = movant::testing;

namespace {

const Wavenumber k28 = Wavenumber::from_frequency(28e9);

struct NbState {
  PathSet paths;
  EffectiveChannel ch;
  movant::rate::PowerAllocation alloc;
  double noise = 0.0;
  bool coupled = true;

  LinkView view() const {
    return LinkView{&ch.tx, &ch.rx, paths.aod, paths.aoa, k28, coupled};
  }
};

NbState make_state(Rng& rng, int m, int n, int l, bool coupled = true) {
  const PathSet paths = oracle::random_paths(rng, l);
  const ArrayGeometry t = oracle::random_geometry(rng, m, k28, 0.25, 0.9);
  const ArrayGeometry r = oracle::random_geometry(rng, n, k28, 0.25, 0.9);
  EffectiveChannel ch = assemble_narrowband(t, r, paths, k28, coupled);
  const double noise = 0.5;
  auto alloc = movant::rate::optimal_Q(ch.h, noise, 2.0);
  return NbState{paths, std::move(ch), std::move(alloc), noise, coupled};
}

Eigen::MatrixXcd channel_at(const NbState& s, CoordinateSide coord, double x) {
  const ArrayGeometry t = coord.side == Side::transmit
                              ? s.ch.tx.geom.with_position(coord.index, x)
                              : s.ch.tx.geom;
  const ArrayGeometry r = coord.side == Side::receive
                              ? s.ch.rx.geom.with_position(coord.index, x)
                              : s.ch.rx.geom;
  return assemble_narrowband(t, r, s.paths, k28, s.coupled).h;
}

double objective_at(const NbState& s, CoordinateSide coord, double x) {
  const Eigen::MatrixXcd h = channel_at(s, coord, x);
  return coord.side == Side::transmit
             ? movant::rate::capacity_bits(h, s.alloc.tx_cov, s.noise)
             : movant::rate::capacity_bits(h.adjoint(), s.alloc.rx_cov,
                                           s.noise);
}

double coordinate_value(const NbState& s, CoordinateSide coord) {
  return coord.side == Side::transmit ? s.ch.tx.geom.position(coord.index)
                                      : s.ch.rx.geom.position(coord.index);
}

}  // namespace

TEST_CASE("channel_derivs matches finite differences on both sides") {
  Rng rng(61);
  const double h1 = 1e-6 * k28.wavelength();
  const double h2 = 1e-4 * k28.wavelength();
  for (int trial = 0; trial < 25; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 4.0));
    const int l = 1 + static_cast<int>(rng.uniform(0.0, 8.0));
    const NbState s = make_state(rng, m, n, l);
    const Side side =
        rng.uniform() < 0.5 ? Side::transmit : Side::receive;
    const int count = side == Side::transmit ? m : n;
    const CoordinateSide coord{side,
                               static_cast<int>(rng.uniform(0.0, count))};

    const ChannelDerivs an = channel_derivs(s.view(), s.ch.prm, coord);
    const double x0 = coordinate_value(s, coord);
    const auto f = [&](double x) { return channel_at(s, coord, x); };
    const Eigen::MatrixXcd fd1 = oracle::central_d1(f, x0, h1);
    const Eigen::MatrixXcd fd2 = oracle::central_d2(f, x0, h2);
    CHECK((fd1 - an.d1).norm() < 1e-5 * an.d1.norm());
    CHECK((fd2 - an.d2).norm() < 1e-3 * an.d2.norm());
  }
}

TEST_CASE("single transmit element: derivative reduces to the steering term") {
  Rng rng(62);
  const NbState s = make_state(rng, 1, 3, 4);
  const CoordinateSide coord{Side::transmit, 0};
  const ChannelDerivs an = channel_derivs(s.view(), s.ch.prm, coord);

  // With one element the coupling matrix is the scalar 1 for every position,
  // so only the steering phase moves.
  const auto sd = steering_derivs(s.ch.tx.geom, s.paths.aod, k28, 0);
  const Eigen::MatrixXcd left =
      s.ch.rx.coupling_inv_sqrt.cast<std::complex<double>>() *
      s.ch.rx.frm.adjoint();
  const Eigen::MatrixXcd expected = left * s.ch.prm.asDiagonal() * sd.d1;
  CHECK((an.d1 - expected).norm() < 1e-13 * expected.norm());
}

TEST_CASE("coupling-blind broadside paths have zero derivatives") {
  Rng rng(63);
  PathSet paths = oracle::random_paths(rng, 5);
  for (auto& a : paths.aod) a = 0.0;
  for (auto& a : paths.aoa) a = 0.0;
  const ArrayGeometry t = oracle::random_geometry(rng, 4, k28, 0.3, 0.8);
  const ArrayGeometry r = oracle::random_geometry(rng, 4, k28, 0.3, 0.8);
  EffectiveChannel ch = assemble_narrowband(t, r, paths, k28, false);
  const auto alloc = movant::rate::optimal_Q(ch.h, 0.5, 2.0);
  const LinkView view{&ch.tx, &ch.rx, paths.aod, paths.aoa, k28, false};
  for (int m = 0; m < 4; ++m) {
    const DerivPair pair = objective_derivs_nb(
        view, ch.h, alloc.tx_cov, ch.prm, 0.5, {Side::transmit, m});
    CHECK(pair.first == 0.0);
    CHECK(pair.second == 0.0);
  }
}

TEST_CASE("objective derivatives match finite differences (narrowband)") {
  Rng rng(64);
  const double h1 = 1e-6 * k28.wavelength();
  const double h2 = 1e-4 * k28.wavelength();
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform(0.0, 7.0));
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 7.0));
    const int l = 1 + static_cast<int>(rng.uniform(0.0, 24.0));
    const NbState s = make_state(rng, m, n, l);
    const Side side = rng.uniform() < 0.5 ? Side::transmit : Side::receive;
    const int count = side == Side::transmit ? m : n;
    const CoordinateSide coord{side,
                               static_cast<int>(rng.uniform(0.0, count))};

    const Eigen::MatrixXcd& w =
        side == Side::transmit ? s.alloc.tx_cov : s.alloc.rx_cov;
    const DerivPair an =
        objective_derivs_nb(s.view(), s.ch.h, w, s.ch.prm, s.noise, coord);

    const double x0 = coordinate_value(s, coord);
    const auto f = [&](double x) { return objective_at(s, coord, x); };
    const double fd1 = oracle::central_d1_scalar(f, x0, h1);
    const double fd2 = oracle::central_d2_scalar(f, x0, h2);
    CHECK(std::abs(fd1 - an.first) <
          1e-5 * std::max(std::abs(an.first), 1e-12));
    CHECK(std::abs(fd2 - an.second) <
          1e-3 * std::max(std::abs(an.second), 1e-12));
  }
}

TEST_CASE("receive-side derivative equals the transposed transmit problem") {
  Rng rng(65);
  for (int trial = 0; trial < 15; ++trial) {
    const NbState s = make_state(rng, 3, 4, 6);
    const int n = static_cast<int>(rng.uniform(0.0, 4.0));
    const DerivPair rx_pair = objective_derivs_nb(
        s.view(), s.ch.h, s.alloc.rx_cov, s.ch.prm, s.noise,
        {Side::receive, n});

    // Swapped problem: transmit from the receive geometry with conjugated
    // path response; its channel is exactly H^H.
    PathSet swapped = s.paths;
    std::swap(swapped.aod, swapped.aoa);
    for (auto& g : swapped.gains) g = std::conj(g);
    EffectiveChannel ch_swap = assemble_narrowband(
        s.ch.rx.geom, s.ch.tx.geom, swapped, k28, s.coupled);
    REQUIRE((ch_swap.h - s.ch.h.adjoint()).norm() < 1e-12 * s.ch.h.norm());
    const LinkView view_swap{&ch_swap.tx, &ch_swap.rx, swapped.aod,
                             swapped.aoa, k28, s.coupled};
    const DerivPair tx_pair = objective_derivs_nb(
        view_swap, ch_swap.h, s.alloc.rx_cov, ch_swap.prm, s.noise,
        {Side::transmit, n});

    CHECK(rx_pair.first ==
          doctest::Approx(tx_pair.first).epsilon(1e-10));
    CHECK(rx_pair.second ==
          doctest::Approx(tx_pair.second).epsilon(1e-10));
  }
}

TEST_CASE("second derivative trace expression is real") {
  Rng rng(66);
  for (int trial = 0; trial < 10; ++trial) {
    const NbState s = make_state(rng, 4, 4, 8);
    const CoordinateSide coord{Side::transmit,
                               static_cast<int>(rng.uniform(0.0, 4.0))};
    const ChannelDerivs d = channel_derivs(s.view(), s.ch.prm, coord);

    // Full complex bracket, conjugate halves included: its imaginary part
    // must vanish before the real part is taken.
    const Eigen::MatrixXcd& h = s.ch.h;
    const Eigen::MatrixXcd& q = s.alloc.tx_cov;
    const double sigma2 = s.noise;
    const Eigen::MatrixXcd phi =
        (Eigen::MatrixXcd::Identity(h.rows(), h.rows()) +
         h * q * h.adjoint() / sigma2)
            .inverse();
    const Eigen::MatrixXcd x = d.d1 * q * h.adjoint();
    const std::complex<double> full =
        (phi * (d.d2 * q * h.adjoint() + h * q * d.d2.adjoint() +
                2.0 * d.d1 * q * d.d1.adjoint()))
            .trace() -
        (phi * (x + x.adjoint()) * phi * (x + x.adjoint())).trace() / sigma2;
    CHECK(std::abs(full.imag()) < 1e-10 * std::max(1.0, std::abs(full.real())));
  }
}

TEST_CASE("wideband derivatives: one carrier reduces to narrowband") {
  Rng rng(67);
  PathSet paths = oracle::random_paths(rng, 6);
  for (auto& d : paths.delays) d = 2e-6;
  const ArrayGeometry t = oracle::random_geometry(rng, 4, k28, 0.25, 0.8);
  const ArrayGeometry r = oracle::random_geometry(rng, 3, k28, 0.25, 0.8);
  const OfdmGrid grid = OfdmGrid::for_paths(1, 15e3, paths);
  const WidebandChannel wb = assemble_wideband(t, r, paths, grid, k28);
  const EffectiveChannel nb = assemble_narrowband(t, r, paths, k28);
  const double noise = 0.5;
  const auto alloc = movant::rate::optimal_Q(nb.h, noise, 2.0);

  const LinkView view_nb{&nb.tx, &nb.rx, paths.aod, paths.aoa, k28, true};
  const LinkView view_wb{&wb.tx, &wb.rx, paths.aod, paths.aoa, k28, true};
  for (int m = 0; m < 4; ++m) {
    const CoordinateSide coord{Side::transmit, m};
    const DerivPair a =
        objective_derivs_nb(view_nb, nb.h, alloc.tx_cov, nb.prm, noise, coord);
    const CarrierState carrier{&wb.h[0], &alloc.tx_cov};
    const DerivPair b = objective_derivs(view_wb, {&carrier, 1},
                                         {&wb.prm[0], 1}, noise, coord);
    CHECK(a.first == doctest::Approx(b.first).epsilon(1e-14));
    CHECK(a.second == doctest::Approx(b.second).epsilon(1e-14));
  }
}

TEST_CASE("wideband derivatives: flat channel with equal covariances scales by S") {
  Rng rng(68);
  PathSet paths = oracle::random_paths(rng, 5);
  for (auto& d : paths.delays) d = 1e-6;
  const ArrayGeometry t = oracle::random_geometry(rng, 3, k28, 0.25, 0.8);
  const ArrayGeometry r = oracle::random_geometry(rng, 3, k28, 0.25, 0.8);
  const int s = 8;
  const OfdmGrid grid = OfdmGrid::for_paths(s, 15e3, paths);
  const WidebandChannel wb = assemble_wideband(t, r, paths, grid, k28);
  const double noise = 0.5;
  const auto alloc = movant::rate::optimal_Q(wb.h[0], noise, 1.0);

  const LinkView view{&wb.tx, &wb.rx, paths.aod, paths.aoa, k28, true};
  std::vector<CarrierState> carriers(static_cast<size_t>(s));
  for (int nu = 0; nu < s; ++nu) {
    carriers[static_cast<size_t>(nu)] = {&wb.h[static_cast<size_t>(nu)],
                                         &alloc.tx_cov};
  }
  const CoordinateSide coord{Side::transmit, 1};
  const DerivPair total =
      objective_derivs(view, carriers, wb.prm, noise, coord);
  const DerivPair single = objective_derivs(
      view, {carriers.data(), 1}, {wb.prm.data(), 1}, noise, coord);
  CHECK(total.first == doctest::Approx(s * single.first).epsilon(1e-12));
  CHECK(total.second == doctest::Approx(s * single.second).epsilon(1e-12));
}

TEST_CASE("wideband sum objective matches finite differences") {
  Rng rng(69);
  const double h1 = 1e-6 * k28.wavelength();
  for (int trial = 0; trial < 10; ++trial) {
    PathSet paths = oracle::random_paths(rng, 8, 1.0, 5e-6);
    const ArrayGeometry t = oracle::random_geometry(rng, 3, k28, 0.25, 0.8);
    const ArrayGeometry r = oracle::random_geometry(rng, 3, k28, 0.25, 0.8);
    const int s = 8;
    const OfdmGrid grid = OfdmGrid::for_paths(s, 15e3, paths);
    const WidebandChannel wb = assemble_wideband(t, r, paths, grid, k28);
    const double noise = 0.4;
    const auto alloc = movant::rate::optimal_Q_multicarrier(wb.h, noise, 2.0);

    const LinkView view{&wb.tx, &wb.rx, paths.aod, paths.aoa, k28, true};
    std::vector<CarrierState> carriers(static_cast<size_t>(s));
    for (int nu = 0; nu < s; ++nu) {
      carriers[static_cast<size_t>(nu)] = {
          &wb.h[static_cast<size_t>(nu)],
          &alloc.per_carrier[static_cast<size_t>(nu)].tx_cov};
    }
    const int m = static_cast<int>(rng.uniform(0.0, 3.0));
    const DerivPair an = objective_derivs(view, carriers, wb.prm, noise,
                                          {Side::transmit, m});

    const auto f = [&](double x) {
      const WidebandChannel moved = assemble_wideband(
          t.with_position(m, x), r, paths, grid, k28);
      double total = 0.0;
      for (int nu = 0; nu < s; ++nu) {
        total += movant::rate::capacity_bits(
            moved.h[static_cast<size_t>(nu)],
            alloc.per_carrier[static_cast<size_t>(nu)].tx_cov, noise);
      }
      return total;
    };
    const double fd1 = oracle::central_d1_scalar(f, t.position(m), h1);
    CHECK(std::abs(fd1 - an.first) <
          1e-5 * std::max(std::abs(an.first), 1e-12));
  }
}
