// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "movant/optimizer.hpp"
#include "movant/scenario.hpp"

namespace movant::experiment {

enum class Mode { narrowband, wideband };

enum class Scheme { cma, ncma, ula, cla };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

enum class SweepVariable { antennas, power, kappa_db, range, subcarriers };

std::string sweep_name(SweepVariable v);
SweepVariable sweep_from_name(const std::string& name);

struct SchemeSpec {
  Scheme scheme = Scheme::cma;
  double d_min_lambda = 0.2;  // minimum spacing (movable schemes) in lambda
};

/// Full experiment description. Loaded from JSON (versioned, unknown keys
/// rejected); dB quantities are converted to linear watts here and nowhere
/// else.
struct ExperimentConfig {
  int schema_version = 1;
  Mode mode = Mode::narrowband;
  SweepVariable sweep_variable = SweepVariable::antennas;
  std::vector<double> sweep_values{4.0};
  int num_trials = 50;
  std::uint64_t master_seed = 1;
  std::string output_dir;
  int threads = 0;                 // 0: hardware concurrency
  bool record_wall_time = false;   // off keeps outputs byte-reproducible
  std::string rng = "mt19937_64";  // pinned generator name

  std::vector<SchemeSpec> schemes{{Scheme::cma, 0.2},
                                  {Scheme::ncma, 0.5},
                                  {Scheme::ula, 0.5},
                                  {Scheme::cla, 0.2}};

  int tx_antennas = 8;
  int rx_antennas = 8;
  double normalized_range = 2.0;  // movable range in (count-1) wavelengths

  scenario::ScenarioParams scenario = scenario::ScenarioParams::defaults();

  // Narrowband link budget.
  double p_max_dbm = 30.0;
  double noise_dbm = -80.0;

  // Wideband link budget and grid.
  double rho_dbm_per_mhz = 0.0;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  int subcarriers = 300;
  double subcarrier_spacing_hz = 15e3;

  opt::BcaConfig bca;  // trm radii are in wavelengths until resolved
  double trm_initial_radius_lambda = 0.25;
  double trm_min_radius_lambda = 1e-6;

  /// Reduced scale for fast runs: 4x4 antennas, 50 trials, 16 subcarriers.
  static ExperimentConfig desk_profile();
  /// Full simulation scale: 8x8 antennas, 1000 trials, 300 subcarriers.
  static ExperimentConfig paper_profile();

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

/// One (scheme, sweep point, trial) outcome.
struct ResultRow {
  std::string scheme;
  std::string sweep_var;
  double sweep_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double objective_bits = 0.0;          // physically consistent value
  double modeled_objective_bits = 0.0;  // what the scheme itself optimized
  int outer_iters = 0;
  double qf_tx = 0.0;  // quality factor of the final transmit geometry
  double qf_rx = 0.0;
  double p_trans = 0.0;  // transmitted power density, W/rad
  double wall_s = 0.0;
  std::string error;  // empty on success

  std::vector<double> objective_trace;  // per outer iteration
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (scheme, sweep value, trial)
};

/// Runs the full sweep x scheme x trial grid on a worker pool. Per-trial
/// failures land in the error column; the run continues. When output_dir is
/// set, writes results.csv, summary.json and one trace file per
/// (scheme, sweep point).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string result_csv(const ExperimentResult& result);
std::string summary_json(const ExperimentConfig& cfg,
                         const ExperimentResult& result);
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Runs a single trial of one scheme on a fixed PathSet (regression /
/// debugging entry point). sweep_value must be consistent with cfg.
ResultRow run_single_trial(const ExperimentConfig& cfg, Scheme scheme,
                           double d_min_lambda,
                           const channel::PathSet& paths, int trial_index,
                           std::uint64_t seed, double sweep_value);

/// Power density radiated toward the departure directions:
/// tr(G C^{-1/2} Q C^{-1/2} G^H) with the true coupling of the geometry.
double transmitted_power_density(const antenna::ArrayGeometry& tx,
                                 const Eigen::MatrixXcd& q,
                                 const channel::PathSet& paths,
                                 const antenna::Wavenumber& k);

/// Reciprocal of the smallest coupling eigenvalue; 1 on half-wavelength
/// grids, large for superdirective layouts.
double quality_factor(const antenna::ArrayGeometry& geom,
                      const antenna::Wavenumber& k);

double dbm_to_watts(double dbm);
double db_to_linear(double db);

}  // namespace movant::experiment
