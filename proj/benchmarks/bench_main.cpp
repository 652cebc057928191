// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "movant/deriv.hpp"
#include "movant/experiment.hpp"
#include "movant/optimizer.hpp"
#include "movant/rng.hpp"
#include "movant/scenario.hpp"

namespace {

using namespace movant;

const antenna::Wavenumber kWave = antenna::Wavenumber::from_frequency(28e9);

antenna::ArrayGeometry geometry(Rng& rng, int n) {
  std::vector<double> pos(static_cast<size_t>(n));
  double x = 0.05 * kWave.wavelength();
  for (int i = 0; i < n; ++i) {
    pos[static_cast<size_t>(i)] = x;
    x += kWave.wavelength() * rng.uniform(0.25, 0.9);
  }
  return antenna::ArrayGeometry(pos, x, 0.2 * kWave.wavelength());
}

void bench_spd_inv_sqrt(benchmark::State& state) {
  Rng rng(1);
  const auto geom = geometry(rng, static_cast<int>(state.range(0)));
  const auto c = antenna::mc_matrix(geom, kWave);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matfun::spd_inv_sqrt(c));
  }
}
BENCHMARK(bench_spd_inv_sqrt)->Arg(8)->Arg(16)->Arg(32);

void bench_coupling_second_derivative(benchmark::State& state) {
  Rng rng(2);
  const auto geom = geometry(rng, static_cast<int>(state.range(0)));
  const auto c = antenna::mc_matrix(geom, kWave);
  const auto dc = antenna::mc_matrix_d1(geom, kWave, 1);
  const auto d2c = antenna::mc_matrix_d2(geom, kWave, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matfun::d2_inv_sqrt(c, dc, d2c));
  }
}
BENCHMARK(bench_coupling_second_derivative)->Arg(8)->Arg(16);

void bench_objective_derivs(benchmark::State& state) {
  Rng rng(3);
  const int m = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  auto params = scenario::ScenarioParams::defaults();
  const auto paths = scenario::draw_scenario(params, 42);
  const auto tg = geometry(rng, m);
  const auto rg = geometry(rng, m);
  const auto grid = channel::OfdmGrid::for_paths(s, 15e3, paths);
  const auto ch = channel::assemble_wideband(tg, rg, paths, grid, kWave);
  const double noise = 1e-11;
  const auto alloc = rate::optimal_Q_multicarrier(ch.h, noise, 1.0);
  const deriv::LinkView view{&ch.tx, &ch.rx, paths.aod, paths.aoa, kWave,
                             true};
  std::vector<deriv::CarrierState> carriers(static_cast<size_t>(s));
  for (int nu = 0; nu < s; ++nu) {
    carriers[static_cast<size_t>(nu)] = {
        &ch.h[static_cast<size_t>(nu)],
        &alloc.per_carrier[static_cast<size_t>(nu)].tx_cov};
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(deriv::objective_derivs(
        view, carriers, ch.prm, noise, {deriv::Side::transmit, 1}));
  }
}
BENCHMARK(bench_objective_derivs)
    ->Args({4, 1})
    ->Args({8, 1})
    ->Args({4, 16})
    ->Args({8, 16});

void bench_bca_narrowband_trial(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  auto params = scenario::ScenarioParams::defaults();
  const auto paths = scenario::draw_scenario(params, 7);
  const double lambda = kWave.wavelength();
  const auto t0 = opt::centered_spread(m, 2.0 * (m - 1) * lambda,
                                       0.2 * lambda, 1.25 * lambda);
  opt::BcaConfig cfg;
  cfg.trm = opt::TrustRegionConfig::for_wavelength(lambda);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        opt::bca_narrowband(paths, kWave, 1e-11, 1.0, t0, t0, cfg));
  }
}
BENCHMARK(bench_bca_narrowband_trial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void bench_wideband_assembly(benchmark::State& state) {
  Rng rng(5);
  auto params = scenario::ScenarioParams::defaults();
  const auto paths = scenario::draw_scenario(params, 11);
  const auto tg = geometry(rng, 8);
  const auto rg = geometry(rng, 8);
  const auto grid =
      channel::OfdmGrid::for_paths(static_cast<int>(state.range(0)), 15e3,
                                   paths);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        channel::assemble_wideband(tg, rg, paths, grid, kWave));
  }
}
BENCHMARK(bench_wideband_assembly)->Arg(16)->Arg(64)->Arg(300);

}  // namespace

BENCHMARK_MAIN();
