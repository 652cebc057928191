// SPDX-License-Identifier: Apache-2.0
//
// movant: experiment driver for coupling-aware movable-antenna MIMO links.
//
//   movant run <config.json> [--out DIR] [--trials N] [--seed U64]
//              [--profile desk|paper] [--threads N] [--timing]
//   movant qf <spacing_in_lambda> <count>
//   movant replay <pathset.json> <scheme> [--mode narrowband|wideband]
//                 [--config file.json]
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "movant/experiment.hpp"

namespace {

using namespace movant;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ContractViolation("cannot open file: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_command(const std::string& config_path, const std::string& out_dir,
                int trials, long long seed, const std::string& profile,
                int threads, bool timing) {
  experiment::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = experiment::config_from_json(slurp(config_path));
  } else if (profile.empty()) {
    throw ContractViolation("run: need a config file or --profile");
  }
  if (profile == "desk") {
    const experiment::ExperimentConfig scale =
        experiment::ExperimentConfig::desk_profile();
    if (config_path.empty()) cfg = scale;
    cfg.tx_antennas = scale.tx_antennas;
    cfg.rx_antennas = scale.rx_antennas;
    cfg.num_trials = scale.num_trials;
    cfg.subcarriers = scale.subcarriers;
    cfg.sweep_values = scale.sweep_values;
  } else if (profile == "paper") {
    const experiment::ExperimentConfig scale =
        experiment::ExperimentConfig::paper_profile();
    if (config_path.empty()) cfg = scale;
    cfg.tx_antennas = scale.tx_antennas;
    cfg.rx_antennas = scale.rx_antennas;
    cfg.num_trials = scale.num_trials;
    cfg.subcarriers = scale.subcarriers;
    cfg.sweep_values = scale.sweep_values;
  } else if (!profile.empty()) {
    throw ContractViolation("run: unknown profile '" + profile + "'");
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (trials > 0) cfg.num_trials = trials;
  if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (threads >= 0) cfg.threads = threads;
  if (timing) cfg.record_wall_time = true;

  const experiment::ExperimentResult result = experiment::run_experiment(cfg);

  // Console summary: mean objective per (scheme, sweep value).
  std::map<std::pair<std::string, double>, std::pair<double, int>> means;
  std::map<std::string, std::pair<int, int>> health;  // scheme -> (ok, total)
  for (const auto& row : result.rows) {
    auto& h = health[row.scheme];
    ++h.second;
    if (!row.error.empty()) continue;
    ++h.first;
    auto& m = means[{row.scheme, row.sweep_value}];
    m.first += row.objective_bits;
    ++m.second;
  }
  std::printf("%-8s %12s %8s %16s\n", "scheme", "sweep", "trials",
              "mean bits/s/Hz");
  for (const auto& [key, acc] : means) {
    std::printf("%-8s %12g %8d %16.4f\n", key.first.c_str(), key.second,
                acc.second, acc.first / std::max(acc.second, 1));
  }
  if (!cfg.output_dir.empty()) {
    std::printf("results written to %s\n", cfg.output_dir.c_str());
  }

  for (const auto& [scheme, h] : health) {
    if (h.first == 0) {
      std::fprintf(stderr, "scheme %s failed on every trial\n",
                   scheme.c_str());
      return 1;
    }
  }
  return 0;
}

int qf_command(double spacing_lambda, int count) {
  // The quality factor depends only on spacings in wavelengths.
  const auto k = antenna::Wavenumber::from_wavelength(1.0);
  const auto geom = opt::uniform_spread(count, (count - 1) * spacing_lambda,
                                        spacing_lambda * 0.99);
  std::printf("%.6g\n", experiment::quality_factor(geom, k));
  return 0;
}

int replay_command(const std::string& pathset_path, const std::string& scheme,
                   const std::string& mode, const std::string& config_path) {
  experiment::ExperimentConfig cfg =
      config_path.empty()
          ? experiment::ExperimentConfig::desk_profile()
          : experiment::config_from_json(slurp(config_path));
  if (mode == "narrowband") {
    cfg.mode = experiment::Mode::narrowband;
  } else if (mode == "wideband") {
    cfg.mode = experiment::Mode::wideband;
  } else if (!mode.empty()) {
    throw ContractViolation("replay: unknown mode '" + mode + "'");
  }

  const auto paths = scenario::pathset_from_json(slurp(pathset_path));
  const experiment::Scheme s = experiment::scheme_from_name(scheme);
  double d_min = 0.2;
  for (const auto& spec : cfg.schemes) {
    if (spec.scheme == s) d_min = spec.d_min_lambda;
  }
  const experiment::ResultRow row = experiment::run_single_trial(
      cfg, s, d_min, paths, 0, cfg.master_seed, cfg.sweep_values.front());

  std::printf("{\n");
  std::printf("  \"scheme\": \"%s\",\n", row.scheme.c_str());
  std::printf("  \"objective_bits\": %.12g,\n", row.objective_bits);
  std::printf("  \"modeled_objective_bits\": %.12g,\n",
              row.modeled_objective_bits);
  std::printf("  \"outer_iters\": %d,\n", row.outer_iters);
  std::printf("  \"qf_tx\": %.6g,\n", row.qf_tx);
  std::printf("  \"qf_rx\": %.6g,\n", row.qf_rx);
  std::printf("  \"p_trans\": %.6g\n", row.p_trans);
  std::printf("}\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupling-aware movable-antenna MIMO experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, profile;
  int trials = -1;
  long long seed = -1;
  int threads = -1;
  bool timing = false;
  CLI::App* run = app.add_subcommand("run", "run a sweep experiment");
  run->add_option("config", config_path, "experiment config (JSON)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--trials", trials, "override the trial count");
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--profile", profile, "scale preset: desk or paper");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_flag("--timing", timing,
                "record wall time per trial (breaks byte reproducibility)");

  double spacing_lambda = 0.2;
  int count = 8;
  CLI::App* qf = app.add_subcommand(
      "qf", "quality factor of a uniform array (spacing in wavelengths)");
  qf->add_option("spacing", spacing_lambda, "element spacing in wavelengths")
      ->required();
  qf->add_option("count", count, "element count")->required();

  std::string pathset_path, scheme, mode, replay_config;
  CLI::App* replay =
      app.add_subcommand("replay", "run one scheme on a stored path set");
  replay->add_option("pathset", pathset_path, "PathSet JSON file")->required();
  replay->add_option("scheme", scheme, "C-MA | NC-MA | ULA | CLA")->required();
  replay->add_option("--mode", mode, "narrowband | wideband");
  replay->add_option("--config", replay_config, "experiment config (JSON)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(config_path, out_dir, trials, seed, profile, threads,
                         timing);
    }
    if (qf->parsed()) {
      return qf_command(spacing_lambda, count);
    }
    if (replay->parsed()) {
      return replay_command(pathset_path, scheme, mode, replay_config);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
