// SPDX-License-Identifier: Apache-2.0
#include "movant/scenario.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "movant/errors.hpp"

namespace movant::scenario {

namespace {

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

ScenarioParams ScenarioParams::defaults() {
  ScenarioParams p;
  p.kappa = 1.0;  // 0 dB
  p.num_clusters = 3;
  p.subpaths_per_cluster = 8;
  p.carrier_hz = 28e9;
  p.r_min_m = 100.0;
  p.r_max_m = 300.0;
  p.los_angle_spread_rad = deg2rad(5.0);
  p.cluster_angle_spread_rad = deg2rad(40.0);
  p.subpath_angle_spread_rad = deg2rad(5.0);
  p.shadowing_sigma_db = 4.0;
  return p;
}

void ScenarioParams::validate() const {
  if (kappa < 0.0 || num_clusters < 0 || subpaths_per_cluster < 0 ||
      carrier_hz <= 0.0 || r_min_m <= 0.0 || r_max_m < r_min_m ||
      shadowing_sigma_db < 0.0 || cluster_delay_min_factor < 0.0 ||
      cluster_delay_max_factor < cluster_delay_min_factor ||
      pdp_reference_s <= 0.0) {
    throw ContractViolation("ScenarioParams: invalid parameter range");
  }
  if (num_clusters > 0 && subpaths_per_cluster < 1) {
    throw ContractViolation("ScenarioParams: clusters need sub-paths");
  }
}

double path_loss_db(double f_c_hz, double r_m, double shadow_db) {
  if (f_c_hz <= 0.0 || r_m <= 0.0) {
    throw ContractViolation("path_loss_db: frequency and range must be positive");
  }
  return 32.4 + 20.0 * std::log10(f_c_hz / 1e9) + 26.0 * std::log10(r_m) +
         shadow_db;
}

std::vector<double> power_delay_profile(std::span<const double> delays_s,
                                        std::span<const double> z_db,
                                        double reference_s) {
  if (delays_s.size() != z_db.size()) {
    throw ContractViolation("power_delay_profile: length mismatch");
  }
  std::vector<double> weights(delays_s.size());
  double total = 0.0;
  for (size_t i = 0; i < delays_s.size(); ++i) {
    weights[i] = std::pow(10.0, -delays_s[i] / reference_s + z_db[i] / 10.0);
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::vector<double> power_delay_profile(std::span<const double> delays_s,
                                        Rng& rng, double sigma_db,
                                        double reference_s) {
  std::vector<double> z(delays_s.size());
  for (double& zi : z) zi = sigma_db * rng.normal();
  return power_delay_profile(delays_s, z, reference_s);
}

channel::PathSet draw_scenario(const ScenarioParams& params,
                               std::uint64_t seed) {
  params.validate();
  Rng rng(seed);

  // Draw order is part of the determinism contract: distance, shadowing,
  // LoS angles, LoS gain, then per-cluster geometry, then per-sub-path
  // angles and gains, then the power-delay jitter.
  const double r = std::sqrt(
      rng.uniform(params.r_min_m * params.r_min_m,
                  params.r_max_m * params.r_max_m));
  const double shadow = params.shadowing_sigma_db * rng.normal();
  const double pl_db = path_loss_db(params.carrier_hz, r, shadow);
  const double pl_inv = std::pow(10.0, -pl_db / 10.0);

  const int num_paths = params.num_paths();
  channel::PathSet paths;
  paths.aod.reserve(num_paths);
  paths.aoa.reserve(num_paths);
  paths.delays.reserve(num_paths);
  paths.gains.reserve(num_paths);

  const double los_aod =
      rng.uniform(-params.los_angle_spread_rad, params.los_angle_spread_rad);
  const double los_aoa =
      rng.uniform(-params.los_angle_spread_rad, params.los_angle_spread_rad);
  const double los_delay = r / antenna::kSpeedOfLight;
  const double los_variance = params.kappa / (1.0 + params.kappa) * pl_inv;
  paths.aod.push_back(los_aod);
  paths.aoa.push_back(los_aoa);
  paths.delays.push_back(los_delay);
  paths.gains.push_back(rng.complex_normal(los_variance));

  std::vector<double> cluster_aod(params.num_clusters);
  std::vector<double> cluster_aoa(params.num_clusters);
  std::vector<double> cluster_delay(params.num_clusters);
  std::vector<double> pdp_jitter(params.num_clusters);
  for (int i = 0; i < params.num_clusters; ++i) {
    cluster_aod[i] = rng.uniform(-params.cluster_angle_spread_rad,
                                 params.cluster_angle_spread_rad);
    cluster_aoa[i] = rng.uniform(-params.cluster_angle_spread_rad,
                                 params.cluster_angle_spread_rad);
    cluster_delay[i] = los_delay * rng.uniform(params.cluster_delay_min_factor,
                                               params.cluster_delay_max_factor);
    pdp_jitter[i] = params.pdp_sigma_db * rng.normal();
  }

  const double subpath_variance =
      params.num_clusters > 0
          ? pl_inv / ((params.kappa + 1.0) *
                      params.num_clusters * params.subpaths_per_cluster)
          : 0.0;
  for (int i = 0; i < params.num_clusters; ++i) {
    for (int p = 0; p < params.subpaths_per_cluster; ++p) {
      paths.aod.push_back(cluster_aod[i] + los_aod +
                          rng.uniform(-params.subpath_angle_spread_rad,
                                      params.subpath_angle_spread_rad));
      paths.aoa.push_back(cluster_aoa[i] + los_aoa +
                          rng.uniform(-params.subpath_angle_spread_rad,
                                      params.subpath_angle_spread_rad));
      paths.delays.push_back(cluster_delay[i]);
      paths.gains.push_back(rng.complex_normal(subpath_variance));
    }
  }

  if (params.use_pdp_weights && params.num_clusters > 0) {
    const std::vector<double> q =
        power_delay_profile(cluster_delay, pdp_jitter, params.pdp_reference_s);
    for (int i = 0; i < params.num_clusters; ++i) {
      const double scale = std::sqrt(q[static_cast<size_t>(i)] *
                                     params.num_clusters);
      for (int p = 0; p < params.subpaths_per_cluster; ++p) {
        paths.gains[static_cast<size_t>(1 + i * params.subpaths_per_cluster +
                                        p)] *= scale;
      }
    }
  }

  paths.validate();
  return paths;
}

std::string pathset_to_json(const channel::PathSet& paths) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < paths.size(); ++i) {
    const auto idx = static_cast<size_t>(i);
    rows.push_back({{"aod", paths.aod[idx]},
                    {"aoa", paths.aoa[idx]},
                    {"delay", paths.delays[idx]},
                    {"gain_re", paths.gains[idx].real()},
                    {"gain_im", paths.gains[idx].imag()}});
  }
  return nlohmann::json{{"paths", rows}}.dump(2);
}

channel::PathSet pathset_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("pathset_from_json: ") + e.what());
  }
  if (!j.contains("paths") || !j["paths"].is_array() || j["paths"].empty()) {
    throw ContractViolation("pathset_from_json: missing paths array");
  }
  channel::PathSet paths;
  for (const auto& row : j["paths"]) {
    paths.aod.push_back(row.at("aod").get<double>());
    paths.aoa.push_back(row.at("aoa").get<double>());
    paths.delays.push_back(row.at("delay").get<double>());
    paths.gains.emplace_back(row.at("gain_re").get<double>(),
                             row.at("gain_im").get<double>());
  }
  paths.validate();
  return paths;
}

}  // namespace movant::scenario
