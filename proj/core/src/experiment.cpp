// SPDX-License-Identifier: Apache-2.0
#include "movant/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "movant/errors.hpp"
#include "movant/rng.hpp"

namespace movant::experiment {

namespace {

using nlohmann::json;

void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                 const char* where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ContractViolation(std::string("config: unknown key '") +
                              item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string sanitize_error(std::string msg) {
  for (char& c : msg) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return msg;
}

struct LinkBudget {
  double noise = 0.0;
  double p_max = 0.0;
};

LinkBudget make_budget(const ExperimentConfig& cfg,
                       const channel::OfdmGrid* grid) {
  if (grid == nullptr) {
    return {dbm_to_watts(cfg.noise_dbm), dbm_to_watts(cfg.p_max_dbm)};
  }
  const double bandwidth_mhz =
      grid->num_subcarriers * grid->spacing_hz / 1e6;
  return {dbm_to_watts(cfg.noise_psd_dbm_hz) * grid->spacing_hz *
              db_to_linear(cfg.noise_figure_db),
          dbm_to_watts(cfg.rho_dbm_per_mhz) * bandwidth_mhz};
}

ExperimentConfig apply_sweep(const ExperimentConfig& base, double value) {
  ExperimentConfig cfg = base;
  switch (cfg.sweep_variable) {
    case SweepVariable::antennas:
      cfg.tx_antennas = static_cast<int>(value);
      cfg.rx_antennas = static_cast<int>(value);
      break;
    case SweepVariable::power:
      if (cfg.mode == Mode::narrowband) {
        cfg.p_max_dbm = value;
      } else {
        cfg.rho_dbm_per_mhz = value;
      }
      break;
    case SweepVariable::kappa_db:
      cfg.scenario.kappa = db_to_linear(value);
      break;
    case SweepVariable::range:
      cfg.normalized_range = value;
      break;
    case SweepVariable::subcarriers:
      cfg.subcarriers = static_cast<int>(value);
      break;
  }
  return cfg;
}

opt::BcaConfig resolve_bca(const ExperimentConfig& cfg, double lambda,
                           bool coupling_aware) {
  opt::BcaConfig bca = cfg.bca;
  bca.trm.initial_radius = cfg.trm_initial_radius_lambda * lambda;
  bca.trm.min_radius = cfg.trm_min_radius_lambda * lambda;
  bca.coupling_aware = coupling_aware;
  return bca;
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::cma: return "C-MA";
    case Scheme::ncma: return "NC-MA";
    case Scheme::ula: return "ULA";
    case Scheme::cla: return "CLA";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "C-MA") return Scheme::cma;
  if (name == "NC-MA") return Scheme::ncma;
  if (name == "ULA") return Scheme::ula;
  if (name == "CLA") return Scheme::cla;
  throw ContractViolation("unknown scheme name: " + name);
}

std::string sweep_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::antennas: return "antennas";
    case SweepVariable::power: return "power";
    case SweepVariable::kappa_db: return "kappa_db";
    case SweepVariable::range: return "range";
    case SweepVariable::subcarriers: return "subcarriers";
  }
  return "?";
}

SweepVariable sweep_from_name(const std::string& name) {
  if (name == "antennas") return SweepVariable::antennas;
  if (name == "power") return SweepVariable::power;
  if (name == "kappa_db") return SweepVariable::kappa_db;
  if (name == "range") return SweepVariable::range;
  if (name == "subcarriers") return SweepVariable::subcarriers;
  throw ContractViolation("unknown sweep variable: " + name);
}

ExperimentConfig ExperimentConfig::desk_profile() {
  ExperimentConfig cfg;
  cfg.tx_antennas = 4;
  cfg.rx_antennas = 4;
  cfg.num_trials = 50;
  cfg.subcarriers = 16;
  cfg.sweep_values = {4.0};
  return cfg;
}

ExperimentConfig ExperimentConfig::paper_profile() {
  ExperimentConfig cfg;
  cfg.tx_antennas = 8;
  cfg.rx_antennas = 8;
  cfg.num_trials = 1000;
  cfg.subcarriers = 300;
  cfg.sweep_values = {8.0};
  return cfg;
}

void ExperimentConfig::validate() const {
  if (schema_version != 1) {
    throw ContractViolation("config: unsupported schema_version");
  }
  if (sweep_values.empty() || num_trials < 1 || schemes.empty()) {
    throw ContractViolation("config: empty sweep, trials or scheme list");
  }
  for (const auto& s : schemes) {
    if (!(s.d_min_lambda > 0.0)) {
      throw ContractViolation("config: scheme d_min must be positive");
    }
  }
  if (tx_antennas < 1 || rx_antennas < 1 || normalized_range <= 0.0) {
    throw ContractViolation("config: invalid array geometry");
  }
  if (subcarriers < 1 || subcarrier_spacing_hz <= 0.0) {
    throw ContractViolation("config: invalid OFDM grid");
  }
  if (sweep_variable == SweepVariable::subcarriers && mode != Mode::wideband) {
    throw ContractViolation("config: subcarrier sweep needs wideband mode");
  }
  if (threads < 0) {
    throw ContractViolation("config: negative thread count");
  }
  if (rng != "mt19937_64") {
    throw ContractViolation("config: unsupported rng '" + rng + "'");
  }
  scenario.validate();
}

namespace {

ExperimentConfig config_from_parsed(const json& j) {
  expect_keys(j,
              {"schema_version", "mode", "sweep", "trials", "master_seed",
               "output_dir", "threads", "record_wall_time", "rng", "schemes",
               "array", "scenario", "narrowband", "wideband", "trm"},
              "top level");

  ExperimentConfig cfg;
  cfg.schema_version = j.at("schema_version").get<int>();
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "narrowband") {
    cfg.mode = Mode::narrowband;
  } else if (mode == "wideband") {
    cfg.mode = Mode::wideband;
  } else {
    throw ContractViolation("config: mode must be narrowband or wideband");
  }

  if (j.contains("sweep")) {
    const json& sw = j.at("sweep");
    expect_keys(sw, {"variable", "values"}, "sweep");
    cfg.sweep_variable = sweep_from_name(sw.at("variable").get<std::string>());
    cfg.sweep_values = sw.at("values").get<std::vector<double>>();
  }
  read_if(j, "trials", cfg.num_trials);
  read_if(j, "master_seed", cfg.master_seed);
  read_if(j, "output_dir", cfg.output_dir);
  read_if(j, "threads", cfg.threads);
  read_if(j, "record_wall_time", cfg.record_wall_time);
  read_if(j, "rng", cfg.rng);

  if (j.contains("schemes")) {
    cfg.schemes.clear();
    for (const json& s : j.at("schemes")) {
      expect_keys(s, {"name", "d_min_lambda"}, "schemes[]");
      SchemeSpec spec;
      spec.scheme = scheme_from_name(s.at("name").get<std::string>());
      spec.d_min_lambda = spec.scheme == Scheme::ncma || spec.scheme == Scheme::ula
                              ? 0.5
                              : 0.2;
      read_if(s, "d_min_lambda", spec.d_min_lambda);
      cfg.schemes.push_back(spec);
    }
  }

  if (j.contains("array")) {
    const json& a = j.at("array");
    expect_keys(a, {"tx_antennas", "rx_antennas", "normalized_range"},
                "array");
    read_if(a, "tx_antennas", cfg.tx_antennas);
    read_if(a, "rx_antennas", cfg.rx_antennas);
    read_if(a, "normalized_range", cfg.normalized_range);
  }

  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    expect_keys(s,
                {"carrier_ghz", "kappa_db", "clusters", "subpaths_per_cluster",
                 "r_min_m", "r_max_m", "los_angle_deg", "cluster_angle_deg",
                 "subpath_angle_deg", "shadowing_sigma_db",
                 "cluster_delay_min_factor", "cluster_delay_max_factor",
                 "pdp_sigma_db", "pdp_reference_us", "use_pdp_weights"},
                "scenario");
    auto& sc = cfg.scenario;
    if (s.contains("carrier_ghz")) {
      sc.carrier_hz = s.at("carrier_ghz").get<double>() * 1e9;
    }
    if (s.contains("kappa_db")) {
      sc.kappa = db_to_linear(s.at("kappa_db").get<double>());
    }
    read_if(s, "clusters", sc.num_clusters);
    read_if(s, "subpaths_per_cluster", sc.subpaths_per_cluster);
    read_if(s, "r_min_m", sc.r_min_m);
    read_if(s, "r_max_m", sc.r_max_m);
    const auto read_angle = [&](const char* key, double& out) {
      if (s.contains(key)) {
        out = s.at(key).get<double>() * std::numbers::pi / 180.0;
      }
    };
    read_angle("los_angle_deg", sc.los_angle_spread_rad);
    read_angle("cluster_angle_deg", sc.cluster_angle_spread_rad);
    read_angle("subpath_angle_deg", sc.subpath_angle_spread_rad);
    read_if(s, "shadowing_sigma_db", sc.shadowing_sigma_db);
    read_if(s, "cluster_delay_min_factor", sc.cluster_delay_min_factor);
    read_if(s, "cluster_delay_max_factor", sc.cluster_delay_max_factor);
    read_if(s, "pdp_sigma_db", sc.pdp_sigma_db);
    if (s.contains("pdp_reference_us")) {
      sc.pdp_reference_s = s.at("pdp_reference_us").get<double>() * 1e-6;
    }
    read_if(s, "use_pdp_weights", sc.use_pdp_weights);
  }

  if (j.contains("narrowband")) {
    const json& n = j.at("narrowband");
    expect_keys(n, {"p_max_dbm", "noise_dbm"}, "narrowband");
    read_if(n, "p_max_dbm", cfg.p_max_dbm);
    read_if(n, "noise_dbm", cfg.noise_dbm);
  }

  if (j.contains("wideband")) {
    const json& w = j.at("wideband");
    expect_keys(w,
                {"rho_dbm_per_mhz", "noise_psd_dbm_hz", "noise_figure_db",
                 "subcarriers", "subcarrier_spacing_khz"},
                "wideband");
    read_if(w, "rho_dbm_per_mhz", cfg.rho_dbm_per_mhz);
    read_if(w, "noise_psd_dbm_hz", cfg.noise_psd_dbm_hz);
    read_if(w, "noise_figure_db", cfg.noise_figure_db);
    read_if(w, "subcarriers", cfg.subcarriers);
    if (w.contains("subcarrier_spacing_khz")) {
      cfg.subcarrier_spacing_hz =
          w.at("subcarrier_spacing_khz").get<double>() * 1e3;
    }
  }

  if (j.contains("trm")) {
    const json& t = j.at("trm");
    expect_keys(t,
                {"rho1", "rho2", "nu1", "nu2", "initial_radius_lambda",
                 "min_radius_lambda", "max_inner_iters", "inner_tol_bits",
                 "outer_rel_tol", "max_outer_iters"},
                "trm");
    read_if(t, "rho1", cfg.bca.trm.rho1);
    read_if(t, "rho2", cfg.bca.trm.rho2);
    read_if(t, "nu1", cfg.bca.trm.nu1);
    read_if(t, "nu2", cfg.bca.trm.nu2);
    read_if(t, "initial_radius_lambda", cfg.trm_initial_radius_lambda);
    read_if(t, "min_radius_lambda", cfg.trm_min_radius_lambda);
    read_if(t, "max_inner_iters", cfg.bca.trm.max_inner_iters);
    read_if(t, "inner_tol_bits", cfg.bca.trm.inner_tol_bits);
    read_if(t, "outer_rel_tol", cfg.bca.outer_rel_tol);
    read_if(t, "max_outer_iters", cfg.bca.max_outer_iters);
  }

  cfg.validate();
  return cfg;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: parse error: ") + e.what());
  }
  try {
    return config_from_parsed(j);
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json schemes = json::array();
  for (const auto& s : cfg.schemes) {
    schemes.push_back(
        {{"name", scheme_name(s.scheme)}, {"d_min_lambda", s.d_min_lambda}});
  }
  const auto rad2deg = [](double r) { return r * 180.0 / std::numbers::pi; };
  json j{
      {"schema_version", cfg.schema_version},
      {"mode", cfg.mode == Mode::narrowband ? "narrowband" : "wideband"},
      {"sweep",
       {{"variable", sweep_name(cfg.sweep_variable)},
        {"values", cfg.sweep_values}}},
      {"trials", cfg.num_trials},
      {"master_seed", cfg.master_seed},
      {"output_dir", cfg.output_dir},
      {"threads", cfg.threads},
      {"record_wall_time", cfg.record_wall_time},
      {"rng", cfg.rng},
      {"schemes", schemes},
      {"array",
       {{"tx_antennas", cfg.tx_antennas},
        {"rx_antennas", cfg.rx_antennas},
        {"normalized_range", cfg.normalized_range}}},
      {"scenario",
       {{"carrier_ghz", cfg.scenario.carrier_hz / 1e9},
        {"kappa_db", 10.0 * std::log10(std::max(cfg.scenario.kappa, 1e-300))},
        {"clusters", cfg.scenario.num_clusters},
        {"subpaths_per_cluster", cfg.scenario.subpaths_per_cluster},
        {"r_min_m", cfg.scenario.r_min_m},
        {"r_max_m", cfg.scenario.r_max_m},
        {"los_angle_deg", rad2deg(cfg.scenario.los_angle_spread_rad)},
        {"cluster_angle_deg", rad2deg(cfg.scenario.cluster_angle_spread_rad)},
        {"subpath_angle_deg", rad2deg(cfg.scenario.subpath_angle_spread_rad)},
        {"shadowing_sigma_db", cfg.scenario.shadowing_sigma_db},
        {"cluster_delay_min_factor", cfg.scenario.cluster_delay_min_factor},
        {"cluster_delay_max_factor", cfg.scenario.cluster_delay_max_factor},
        {"pdp_sigma_db", cfg.scenario.pdp_sigma_db},
        {"pdp_reference_us", cfg.scenario.pdp_reference_s * 1e6},
        {"use_pdp_weights", cfg.scenario.use_pdp_weights}}},
      {"narrowband",
       {{"p_max_dbm", cfg.p_max_dbm}, {"noise_dbm", cfg.noise_dbm}}},
      {"wideband",
       {{"rho_dbm_per_mhz", cfg.rho_dbm_per_mhz},
        {"noise_psd_dbm_hz", cfg.noise_psd_dbm_hz},
        {"noise_figure_db", cfg.noise_figure_db},
        {"subcarriers", cfg.subcarriers},
        {"subcarrier_spacing_khz", cfg.subcarrier_spacing_hz / 1e3}}},
      {"trm",
       {{"rho1", cfg.bca.trm.rho1},
        {"rho2", cfg.bca.trm.rho2},
        {"nu1", cfg.bca.trm.nu1},
        {"nu2", cfg.bca.trm.nu2},
        {"initial_radius_lambda", cfg.trm_initial_radius_lambda},
        {"min_radius_lambda", cfg.trm_min_radius_lambda},
        {"max_inner_iters", cfg.bca.trm.max_inner_iters},
        {"inner_tol_bits", cfg.bca.trm.inner_tol_bits},
        {"outer_rel_tol", cfg.bca.outer_rel_tol},
        {"max_outer_iters", cfg.bca.max_outer_iters}}},
  };
  return j.dump(2);
}

double transmitted_power_density(const antenna::ArrayGeometry& tx,
                                 const Eigen::MatrixXcd& q,
                                 const channel::PathSet& paths,
                                 const antenna::Wavenumber& k) {
  const Eigen::MatrixXcd g = antenna::field_response_matrix(tx, paths.aod, k);
  const Eigen::MatrixXcd w =
      matfun::spd_inv_sqrt(antenna::mc_matrix(tx, k))
          .m()
          .cast<std::complex<double>>();
  const Eigen::MatrixXcd gw = g * w;
  return (gw * q * gw.adjoint()).trace().real();
}

double quality_factor(const antenna::ArrayGeometry& geom,
                      const antenna::Wavenumber& k) {
  return 1.0 / antenna::mc_matrix(geom, k).min_eigenvalue();
}

ResultRow run_single_trial(const ExperimentConfig& cfg, Scheme scheme,
                           double d_min_lambda,
                           const channel::PathSet& paths, int trial_index,
                           std::uint64_t seed, double sweep_value) {
  const antenna::Wavenumber k =
      antenna::Wavenumber::from_frequency(cfg.scenario.carrier_hz);
  const double lambda = k.wavelength();
  const double d_min = d_min_lambda * lambda;

  ResultRow row;
  row.scheme = scheme_name(scheme);
  row.sweep_var = sweep_name(cfg.sweep_variable);
  row.sweep_value = sweep_value;
  row.trial = trial_index;
  row.seed = seed;

  std::optional<channel::OfdmGrid> grid;
  if (cfg.mode == Mode::wideband) {
    grid = channel::OfdmGrid::for_paths(cfg.subcarriers,
                                        cfg.subcarrier_spacing_hz, paths);
  }
  const channel::OfdmGrid* grid_ptr = grid ? &*grid : nullptr;
  const LinkBudget budget = make_budget(cfg, grid_ptr);

  const auto fixed_scheme_result =
      [&](const antenna::ArrayGeometry& geom_tx,
          const antenna::ArrayGeometry& geom_rx) {
        std::vector<Eigen::MatrixXcd> h;
        double scale = 1.0;
        if (grid_ptr == nullptr) {
          h.push_back(
              channel::assemble_narrowband(geom_tx, geom_rx, paths, k).h);
        } else {
          auto ch = channel::assemble_wideband(geom_tx, geom_rx, paths,
                                               *grid_ptr, k);
          h = std::move(ch.h);
          scale = static_cast<double>(grid_ptr->num_subcarriers) /
                  (grid_ptr->num_subcarriers + grid_ptr->cp_len);
        }
        rate::MulticarrierAllocation alloc =
            rate::optimal_Q_multicarrier(h, budget.noise, budget.p_max);
        double objective = 0.0;
        for (size_t nu = 0; nu < h.size(); ++nu) {
          objective += rate::capacity_bits(
              h[nu], alloc.per_carrier[nu].tx_cov, budget.noise);
        }
        objective *= scale;
        return std::pair{objective, std::move(alloc)};
      };

  antenna::ArrayGeometry tx_final = opt::baseline_positions(
      opt::BaselineKind::ula, cfg.tx_antennas, lambda);
  antenna::ArrayGeometry rx_final = tx_final;
  rate::MulticarrierAllocation alloc;
  int outer_iters = 1;

  switch (scheme) {
    case Scheme::ula:
    case Scheme::cla: {
      const auto kind = scheme == Scheme::ula ? opt::BaselineKind::ula
                                              : opt::BaselineKind::cla;
      tx_final = opt::baseline_positions(kind, cfg.tx_antennas, lambda);
      rx_final = opt::baseline_positions(kind, cfg.rx_antennas, lambda);
      auto [objective, a] = fixed_scheme_result(tx_final, rx_final);
      alloc = std::move(a);
      row.objective_bits = objective;
      row.modeled_objective_bits = objective;
      row.objective_trace = {objective};
      break;
    }
    case Scheme::cma:
    case Scheme::ncma: {
      const bool coupled = scheme == Scheme::cma;
      const double tx_aperture =
          cfg.normalized_range * (cfg.tx_antennas - 1) * lambda;
      const double rx_aperture =
          cfg.normalized_range * (cfg.rx_antennas - 1) * lambda;
      // The coupling-aware search starts from a centered cluster (it can
      // expand or contract from there); the coupling-blind search has
      // nothing to gain from compactness and starts from the full spread.
      const double init_cap = 1.25 * lambda;
      const antenna::ArrayGeometry tx0 =
          coupled
              ? opt::centered_spread(cfg.tx_antennas, tx_aperture, d_min,
                                     init_cap)
              : opt::uniform_spread(cfg.tx_antennas, tx_aperture, d_min);
      const antenna::ArrayGeometry rx0 =
          coupled
              ? opt::centered_spread(cfg.rx_antennas, rx_aperture, d_min,
                                     init_cap)
              : opt::uniform_spread(cfg.rx_antennas, rx_aperture, d_min);
      const opt::BcaConfig bca = resolve_bca(cfg, lambda, coupled);
      opt::OptimizerState state =
          grid_ptr == nullptr
              ? opt::bca_narrowband(paths, k, budget.noise, budget.p_max, tx0,
                                    rx0, bca)
              : opt::bca_wideband(paths, *grid_ptr, k, budget.noise,
                                  budget.p_max, tx0, rx0, bca);
      tx_final = state.tx;
      rx_final = state.rx;
      alloc = std::move(state.allocation);
      outer_iters = state.outer_iters;
      row.modeled_objective_bits = state.objective;
      row.objective_bits =
          coupled ? state.objective
                  : opt::physical_objective(tx_final, rx_final, alloc, paths,
                                            grid_ptr, k, budget.noise);
      row.objective_trace.reserve(state.trace.size());
      for (const auto& e : state.trace) {
        row.objective_trace.push_back(e.objective);
      }
      break;
    }
  }

  row.outer_iters = outer_iters;
  row.qf_tx = quality_factor(tx_final, k);
  row.qf_rx = quality_factor(rx_final, k);

  Eigen::MatrixXcd total_q = Eigen::MatrixXcd::Zero(cfg.tx_antennas,
                                                    cfg.tx_antennas);
  for (const auto& pa : alloc.per_carrier) {
    if (pa.tx_cov.size() != 0) total_q += pa.tx_cov;
  }
  row.p_trans = transmitted_power_density(tx_final, total_q, paths, k);
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();

  struct Task {
    size_t sweep_idx;
    size_t scheme_idx;
    int trial;
  };
  std::vector<Task> tasks;
  std::vector<ExperimentConfig> applied;
  applied.reserve(cfg.sweep_values.size());
  for (size_t si = 0; si < cfg.sweep_values.size(); ++si) {
    applied.push_back(apply_sweep(cfg, cfg.sweep_values[si]));
    for (size_t ci = 0; ci < cfg.schemes.size(); ++ci) {
      for (int t = 0; t < cfg.num_trials; ++t) {
        tasks.push_back({si, ci, t});
      }
    }
  }

  ExperimentResult result;
  result.rows.resize(tasks.size());

  const auto execute = [&](const Task& task, ResultRow& row) {
    const ExperimentConfig& acfg = applied[task.sweep_idx];
    const SchemeSpec& spec = cfg.schemes[task.scheme_idx];
    const std::uint64_t seed =
        derive_seed(cfg.master_seed, static_cast<std::uint64_t>(task.trial));
    const auto start = std::chrono::steady_clock::now();
    try {
      const channel::PathSet paths = scenario::draw_scenario(acfg.scenario,
                                                             seed);
      row = run_single_trial(acfg, spec.scheme, spec.d_min_lambda, paths,
                             task.trial, seed,
                             cfg.sweep_values[task.sweep_idx]);
    } catch (const std::exception& e) {
      row.scheme = scheme_name(spec.scheme);
      row.sweep_var = sweep_name(cfg.sweep_variable);
      row.sweep_value = cfg.sweep_values[task.sweep_idx];
      row.trial = task.trial;
      row.seed = seed;
      row.objective_bits = std::numeric_limits<double>::quiet_NaN();
      row.modeled_objective_bits = std::numeric_limits<double>::quiet_NaN();
      row.error = sanitize_error(e.what());
    }
    if (cfg.record_wall_time) {
      row.wall_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    }
  };

  unsigned workers = cfg.threads > 0
                         ? static_cast<unsigned>(cfg.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) {
      execute(tasks[i], result.rows[i]);
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size();
             i = next.fetch_add(1)) {
          execute(tasks[i], result.rows[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              if (a.scheme != b.scheme) return a.scheme < b.scheme;
              if (a.sweep_value != b.sweep_value) {
                return a.sweep_value < b.sweep_value;
              }
              return a.trial < b.trial;
            });

  if (!cfg.output_dir.empty()) {
    write_outputs(cfg, result);
  }
  return result;
}

std::string result_csv(const ExperimentResult& result) {
  std::string out =
      "scheme,sweep_var,sweep_value,trial,seed,objective_bits,"
      "modeled_objective_bits,outer_iters,qf_tx,qf_rx,p_trans,wall_s,error\n";
  for (const auto& r : result.rows) {
    out += r.scheme;
    out += ',';
    out += r.sweep_var;
    out += ',';
    out += format_double(r.sweep_value);
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += format_double(r.objective_bits);
    out += ',';
    out += format_double(r.modeled_objective_bits);
    out += ',';
    out += std::to_string(r.outer_iters);
    out += ',';
    out += format_double(r.qf_tx);
    out += ',';
    out += format_double(r.qf_rx);
    out += ',';
    out += format_double(r.p_trans);
    out += ',';
    out += format_double(r.wall_s);
    out += ',';
    out += r.error;
    out += '\n';
  }
  return out;
}

std::string summary_json(const ExperimentConfig& cfg,
                         const ExperimentResult& result) {
  struct Key {
    std::string scheme;
    double value;
  };
  std::vector<Key> keys;
  const auto find = [&](const ResultRow& r) -> int {
    for (size_t i = 0; i < keys.size(); ++i) {
      if (keys[i].scheme == r.scheme && keys[i].value == r.sweep_value) {
        return static_cast<int>(i);
      }
    }
    keys.push_back({r.scheme, r.sweep_value});
    return static_cast<int>(keys.size() - 1);
  };

  std::vector<double> sum_obj, sum_modeled, sum_ptrans;
  std::vector<int> ok, failed;
  for (const auto& r : result.rows) {
    const auto idx = static_cast<size_t>(find(r));
    if (idx >= ok.size()) {
      ok.resize(keys.size(), 0);
      failed.resize(keys.size(), 0);
      sum_obj.resize(keys.size(), 0.0);
      sum_modeled.resize(keys.size(), 0.0);
      sum_ptrans.resize(keys.size(), 0.0);
    }
    if (r.error.empty()) {
      ++ok[idx];
      sum_obj[idx] += r.objective_bits;
      sum_modeled[idx] += r.modeled_objective_bits;
      sum_ptrans[idx] += r.p_trans;
    } else {
      ++failed[idx];
    }
  }

  json rows = json::array();
  for (size_t i = 0; i < keys.size(); ++i) {
    const double n = std::max(ok[i], 1);
    rows.push_back({{"scheme", keys[i].scheme},
                    {"sweep_value", keys[i].value},
                    {"trials_ok", ok[i]},
                    {"trials_failed", failed[i]},
                    {"mean_objective_bits", sum_obj[i] / n},
                    {"mean_modeled_objective_bits", sum_modeled[i] / n},
                    {"mean_p_trans", sum_ptrans[i] / n}});
  }
  json j{{"schema_version", cfg.schema_version},
         {"mode", cfg.mode == Mode::narrowband ? "narrowband" : "wideband"},
         {"sweep_variable", sweep_name(cfg.sweep_variable)},
         {"master_seed", cfg.master_seed},
         {"summary", rows}};
  return j.dump(2);
}

void write_outputs(const ExperimentConfig& cfg,
                   const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    csv << result_csv(result);
  }
  {
    std::ofstream summary(dir / "summary.json", std::ios::binary);
    summary << summary_json(cfg, result);
  }

  // One trace file per (scheme, sweep point); rows are already sorted, so
  // group boundaries are contiguous.
  size_t begin = 0;
  while (begin < result.rows.size()) {
    size_t end = begin;
    while (end < result.rows.size() &&
           result.rows[end].scheme == result.rows[begin].scheme &&
           result.rows[end].sweep_value == result.rows[begin].sweep_value) {
      ++end;
    }
    json trials = json::array();
    for (size_t i = begin; i < end; ++i) {
      trials.push_back({{"trial", result.rows[i].trial},
                        {"seed", result.rows[i].seed},
                        {"objective", result.rows[i].objective_trace}});
    }
    json j{{"scheme", result.rows[begin].scheme},
           {"sweep_value", result.rows[begin].sweep_value},
           {"trials", trials}};
    const std::string name = "trace_" + result.rows[begin].scheme + "_" +
                             format_double(result.rows[begin].sweep_value) +
                             ".json";
    std::ofstream trace(dir / name, std::ios::binary);
    trace << j.dump(2);
    begin = end;
  }
}

}  // namespace movant::experiment
