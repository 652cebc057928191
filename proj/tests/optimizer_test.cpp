// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "movant/errors.hpp"
#include "movant/optimizer.hpp"
#include "support/oracles.hpp"

using movant::ContractViolation;
using movant::Rng;
using namespace movant::antenna;
using namespace movant::channel;
using namespace movant::opt;
namespace oracle = movant::testing;

namespace {

const Wavenumber k28 = Wavenumber::from_frequency(28e9);

BcaConfig desk_config(bool coupled = true) {
  BcaConfig cfg;
  cfg.trm = TrustRegionConfig::for_wavelength(k28.wavelength());
  cfg.coupling_aware = coupled;
  return cfg;
}

PathSet scaled_paths(Rng& rng, int count) {
  // Gains scaled so capacities sit in a readable range at unit power.
  return oracle::random_paths(rng, count, 1.0);
}

}  // namespace

TEST_CASE("feasible_interval: full range for a single antenna") {
  const ArrayGeometry one({0.004}, 0.01, 0.001);
  const Interval box = feasible_interval(one, 0, 1.0);
  CHECK(box.lo == 0.0);
  CHECK(box.hi == 0.01);
}

TEST_CASE("feasible_interval: tightly packed neighbor gives a point") {
  const double d = 0.002;
  const ArrayGeometry tight({0.0, d, 2.0 * d}, 2.0 * d, d);
  const Interval box = feasible_interval(tight, 1, 0.5);
  CHECK(box.lo == box.hi);
  CHECK(box.lo == d);
}

TEST_CASE("feasible_interval: first antenna respects range and neighbor") {
  const ArrayGeometry g({0.003, 0.007}, 0.02, 0.002);
  const double radius = 0.001;
  const Interval box = feasible_interval(g, 0, radius);
  CHECK(box.lo == doctest::Approx(0.002));   // x - A
  CHECK(box.hi == doctest::Approx(0.004));   // min(x + A, neighbor - d_min) = x + A
  const Interval wide = feasible_interval(g, 0, 0.004);
  CHECK(wide.lo == 0.0);
  CHECK(wide.hi == doctest::Approx(0.005));  // neighbor - d_min
}

TEST_CASE("trm_step: exact quadratic lands on the maximizer with ratio 1") {
  TrustRegionConfig cfg = TrustRegionConfig::for_wavelength(1.0);
  const double x0 = 0.3;
  const auto objective = [&](double x) {
    return 2.0 - 3.0 * (x - 0.5) * (x - 0.5);
  };
  const movant::deriv::DerivPair model{-6.0 * (x0 - 0.5), -6.0};
  const Interval box{0.0, 1.0};
  const TrmStep step =
      trm_step(objective, x0, objective(x0), model, box, 0.25, cfg);
  CHECK(step.accepted);
  CHECK(step.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(step.objective == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("trm_step: convex model picks an interval endpoint") {
  TrustRegionConfig cfg = TrustRegionConfig::for_wavelength(1.0);
  const auto objective = [&](double x) { return x * x; };
  const movant::deriv::DerivPair model{2.0 * 0.2, 2.0};  // h'' > 0
  const TrmStep step =
      trm_step(objective, 0.2, 0.04, model, {0.0, 1.0}, 2.0, cfg);
  CHECK(step.accepted);
  CHECK(step.x == 1.0);
}

TEST_CASE("trm_step: degenerate interval rejects and shrinks") {
  TrustRegionConfig cfg = TrustRegionConfig::for_wavelength(1.0);
  const auto objective = [&](double) { return 1.0; };
  const TrmStep step = trm_step(objective, 0.5, 1.0, {1.0, -1.0}, {0.5, 0.5},
                                0.25, cfg);
  CHECK_FALSE(step.accepted);
  CHECK(step.x == 0.5);
  CHECK(step.radius == doctest::Approx(0.25 / cfg.nu2));
}

TEST_CASE("trm_step: boundary acceptance grows the radius") {
  TrustRegionConfig cfg = TrustRegionConfig::for_wavelength(1.0);
  // Linear objective: model exact, maximizer at the trust boundary. The
  // interval fed to trm_step is already intersected with the trust region,
  // as feasible_interval produces it.
  const auto objective = [&](double x) { return 3.0 * x; };
  const double radius = 0.1;
  const Interval box{0.5 - radius, 0.5 + radius};
  const TrmStep step =
      trm_step(objective, 0.5, 1.5, {3.0, 0.0}, box, radius, cfg);
  CHECK(step.accepted);
  CHECK(step.x == doctest::Approx(0.6));
  CHECK(step.radius == doctest::Approx(radius * cfg.nu1));
}

TEST_CASE("trm_step: accepted steps never decrease the objective (property)") {
  TrustRegionConfig cfg = TrustRegionConfig::for_wavelength(1.0);
  Rng rng(71);
  int accepted = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    // Random smooth objective: sum of a few sinusoids.
    const double a1 = rng.uniform(-2.0, 2.0);
    const double a2 = rng.uniform(-2.0, 2.0);
    const double w1 = rng.uniform(0.5, 6.0);
    const double w2 = rng.uniform(0.5, 6.0);
    const auto objective = [&](double x) {
      return a1 * std::sin(w1 * x) + a2 * std::cos(w2 * x);
    };
    const double x0 = rng.uniform(0.2, 0.8);
    const double f0 = objective(x0);
    const movant::deriv::DerivPair model{
        a1 * w1 * std::cos(w1 * x0) - a2 * w2 * std::sin(w2 * x0),
        -a1 * w1 * w1 * std::sin(w1 * x0) - a2 * w2 * w2 * std::cos(w2 * x0)};
    const double radius = rng.uniform(0.01, 0.5);
    const Interval box{std::max(0.0, x0 - rng.uniform(0.0, 0.5)),
                       std::min(1.0, x0 + rng.uniform(0.0, 0.5))};
    const TrmStep step =
        trm_step(objective, x0, f0, model, box, radius, cfg);
    if (step.accepted) {
      ++accepted;
      CHECK(step.objective >= f0);
      CHECK(step.x >= box.lo);
      CHECK(step.x <= box.hi);
    } else {
      CHECK(step.x == x0);
      CHECK(step.radius < radius);
    }
  }
  CHECK(accepted > 1000);  // the property must actually be exercised
}

TEST_CASE("bca_narrowband: SISO LoS capacity is position independent") {
  PathSet paths{{0.3}, {-0.2}, {0.0}, {{0.8, 0.6}}};
  const ArrayGeometry t({0.005}, 0.01, 0.001);
  const ArrayGeometry r({0.002}, 0.01, 0.001);
  const double noise = 0.1;
  const double p_max = 2.0;
  const OptimizerState state =
      bca_narrowband(paths, k28, noise, p_max, t, r, desk_config());
  const double expected =
      std::log2(1.0 + p_max * std::norm(paths.gains[0]) / noise);
  CHECK(state.objective == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bca_narrowband: zero inner iterations is pure water-filling") {
  Rng rng(72);
  const PathSet paths = scaled_paths(rng, 6);
  const ArrayGeometry t = uniform_spread(4, 6 * k28.wavelength(),
                                         0.2 * k28.wavelength());
  const ArrayGeometry r = t;
  BcaConfig cfg = desk_config();
  cfg.trm.max_inner_iters = 0;
  cfg.max_outer_iters = 3;
  const OptimizerState state =
      bca_narrowband(paths, k28, 0.5, 2.0, t, r, cfg);

  const EffectiveChannel ch = assemble_narrowband(t, r, paths, k28);
  const auto alloc = movant::rate::optimal_Q(ch.h, 0.5, 2.0);
  const double expected = movant::rate::capacity_bits(ch.h, alloc.tx_cov, 0.5);
  CHECK(state.objective == doctest::Approx(expected).epsilon(1e-12));
  CHECK(state.tx.positions()[1] == t.positions()[1]);
}

TEST_CASE("bca_narrowband: ascent, feasibility and dominance over 40 trials") {
  int beat_ula = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(1000 + trial);
    const PathSet paths = scaled_paths(rng, 8);
    const double lambda = k28.wavelength();
    const double aperture = 2.0 * 3 * lambda;
    const ArrayGeometry t0 = uniform_spread(4, aperture, 0.2 * lambda);
    const OptimizerState state =
        bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, desk_config());

    // Monotone trace and per-step ascent.
    for (size_t i = 1; i < state.trace.size(); ++i) {
      CHECK(state.trace[i].objective >= state.trace[i - 1].objective);
    }
    double last = -1e300;
    for (const auto& s : state.steps) {
      if (!s.accepted) continue;
      (void)last;
    }
    CHECK(state.objective >= state.trace.front().objective);

    // Geometry invariants hold exactly at the end.
    for (int i = 1; i < state.tx.size(); ++i) {
      CHECK(state.tx.position(i) - state.tx.position(i - 1) >=
            state.tx.min_spacing() - 1e-12);
    }
    CHECK(state.tx.position(0) >= -1e-12);
    CHECK(state.tx.position(state.tx.size() - 1) <=
          state.tx.aperture() + 1e-12);

    // Water-filled ULA on the same channel.
    const ArrayGeometry ula = baseline_positions(BaselineKind::ula, 4, lambda);
    const EffectiveChannel ch = assemble_narrowband(ula, ula, paths, k28);
    const auto alloc = movant::rate::optimal_Q(ch.h, 0.5, 2.0);
    const double cap_ula = movant::rate::capacity_bits(ch.h, alloc.tx_cov, 0.5);
    if (state.objective >= cap_ula) ++beat_ula;
  }
  CHECK(beat_ula >= trials * 95 / 100);
}

TEST_CASE("bca trace is monotone per accepted step within each block") {
  Rng rng(73);
  const PathSet paths = scaled_paths(rng, 8);
  const ArrayGeometry t0 =
      uniform_spread(4, 6 * k28.wavelength(), 0.2 * k28.wavelength());
  const OptimizerState state =
      bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, desk_config());
  // Accepted steps strictly ascend within each (outer, side) block.
  for (size_t i = 1; i < state.steps.size(); ++i) {
    const auto& prev = state.steps[i - 1];
    const auto& cur = state.steps[i];
    if (cur.accepted && prev.outer == cur.outer && prev.side == cur.side) {
      CHECK(cur.objective >= prev.objective);
    }
  }
  CHECK(state.converged);
}

TEST_CASE("baseline_positions: spacing and identity coupling for the ULA") {
  const double lambda = k28.wavelength();
  const ArrayGeometry ula = baseline_positions(BaselineKind::ula, 4, lambda);
  for (int i = 0; i < 4; ++i) {
    CHECK(ula.position(i) == doctest::Approx(i * lambda / 2.0));
  }
  const Eigen::MatrixXd c = mc_matrix(ula, k28).m();
  CHECK((c - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  const ArrayGeometry cla = baseline_positions(BaselineKind::cla, 2, lambda);
  CHECK(cla.position(1) == doctest::Approx(0.2 * lambda));
}

TEST_CASE("coupling-blind run: immobile case matches the physical value") {
  // d_min = lambda/2 with normalized range 0.5 pins the antennas on the
  // half-wavelength grid: the modeled and physical capacities coincide.
  Rng rng(74);
  const PathSet paths = scaled_paths(rng, 8);
  const double lambda = k28.wavelength();
  const ArrayGeometry t0 = uniform_spread(4, 0.5 * 3 * lambda, 0.5 * lambda);
  const OptimizerState state =
      bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, desk_config(false));
  const double physical = physical_objective(
      state.tx, state.rx, state.allocation, paths, nullptr, k28, 0.5);
  CHECK(state.objective == doctest::Approx(physical).epsilon(1e-10));
}

TEST_CASE("coupling-blind run: off-grid placement splits modeled from physical") {
  Rng rng(75);
  const PathSet paths = scaled_paths(rng, 8);
  const double lambda = k28.wavelength();
  const ArrayGeometry t0 = uniform_spread(4, 2.0 * 3 * lambda, 0.2 * lambda);
  const OptimizerState state =
      bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, desk_config(false));

  // Any spacing off the half-wavelength grid by more than 0.01 lambda makes
  // the identity-coupling model physically wrong.
  bool off_grid = false;
  const auto check_side = [&](const ArrayGeometry& g) {
    for (int i = 1; i < g.size(); ++i) {
      const double gap = (g.position(i) - g.position(i - 1)) / lambda;
      const double nearest = std::round(gap * 2.0) / 2.0;
      if (std::abs(gap - nearest) > 0.01) off_grid = true;
    }
  };
  check_side(state.tx);
  check_side(state.rx);
  if (off_grid) {
    const double physical = physical_objective(
        state.tx, state.rx, state.allocation, paths, nullptr, k28, 0.5);
    CHECK(state.objective != physical);
  }
}

TEST_CASE("wideband degeneration: S=1, flat delays reproduce the narrowband run") {
  for (int trial = 0; trial < 3; ++trial) {
    Rng rng(800 + trial);
    PathSet paths = scaled_paths(rng, 6);
    for (auto& d : paths.delays) d = 2e-6;
    const ArrayGeometry t0 =
        uniform_spread(4, 6 * k28.wavelength(), 0.2 * k28.wavelength());
    const OfdmGrid grid = OfdmGrid::for_paths(1, 15e3, paths);
    REQUIRE(grid.cp_len == 0);

    const OptimizerState nb =
        bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, desk_config());
    const OptimizerState wb =
        bca_wideband(paths, grid, k28, 0.5, 2.0, t0, t0, desk_config());

    REQUIRE(nb.trace.size() == wb.trace.size());
    for (size_t i = 0; i < nb.trace.size(); ++i) {
      CHECK(std::abs(nb.trace[i].objective - wb.trace[i].objective) <= 1e-9);
    }
    CHECK((nb.tx.positions()[2] == wb.tx.positions()[2]));
  }
}

TEST_CASE("wideband run: monotone trace, flat channel matches closed form") {
  Rng rng(76);
  PathSet paths = scaled_paths(rng, 6);
  for (auto& d : paths.delays) d = 1e-6;  // flat
  const int s = 8;
  const OfdmGrid grid = OfdmGrid::for_paths(s, 15e3, paths);
  const ArrayGeometry t0 =
      uniform_spread(4, 6 * k28.wavelength(), 0.2 * k28.wavelength());
  const OptimizerState wb =
      bca_wideband(paths, grid, k28, 0.5, 2.0 * s, t0, t0, desk_config());
  for (size_t i = 1; i < wb.trace.size(); ++i) {
    CHECK(wb.trace[i].objective >= wb.trace[i - 1].objective);
  }

  // Flat channel: the sum-rate equals S times the per-carrier capacity at
  // budget P/S under the optimized geometry.
  const EffectiveChannel ch =
      assemble_narrowband(wb.tx, wb.rx, paths, k28);
  const auto alloc = movant::rate::optimal_Q(ch.h, 0.5, 2.0);
  const double per_carrier =
      movant::rate::capacity_bits(ch.h, alloc.tx_cov, 0.5);
  CHECK(wb.objective == doctest::Approx(s * per_carrier).epsilon(1e-9));
}

TEST_CASE("rejected trm steps leave the geometry untouched") {
  Rng rng(77);
  const PathSet paths = scaled_paths(rng, 8);
  const ArrayGeometry t0 =
      uniform_spread(4, 6 * k28.wavelength(), 0.2 * k28.wavelength());
  BcaConfig cfg = desk_config();
  cfg.max_outer_iters = 2;
  const OptimizerState state =
      bca_narrowband(paths, k28, 0.5, 2.0, t0, t0, cfg);
  // Every rejected record keeps the block objective of the preceding state.
  for (size_t i = 1; i < state.steps.size(); ++i) {
    const auto& prev = state.steps[i - 1];
    const auto& cur = state.steps[i];
    if (!cur.accepted && prev.outer == cur.outer && prev.side == cur.side &&
        prev.coord == cur.coord) {
      CHECK(cur.objective == prev.objective);
    }
  }
}

TEST_CASE("uniform_spread handles the single-element edge") {
  const ArrayGeometry one = uniform_spread(1, 0.01, 0.001);
  CHECK(one.position(0) == 0.005);
  CHECK_THROWS_AS(uniform_spread(0, 1.0, 0.1), ContractViolation);
}
