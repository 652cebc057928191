// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "movant/channel.hpp"
#include "movant/rng.hpp"

namespace movant::scenario {

/// Statistical parameters of the clustered Rician channel. Angle spreads are
/// half-widths: a spread of x means the draw is uniform on [-x, x].
struct ScenarioParams {
  double kappa = 1.0;                // Rician factor, linear
  int num_clusters = 3;              // scattering clusters
  int subpaths_per_cluster = 8;
  double carrier_hz = 28e9;
  double r_min_m = 100.0;            // link distance range; r^2 uniform
  double r_max_m = 300.0;
  double los_angle_spread_rad;       // LoS AoD/AoA half-width (5 deg)
  double cluster_angle_spread_rad;   // cluster offset half-width (40 deg)
  double subpath_angle_spread_rad;   // sub-path offset half-width (5 deg)
  double shadowing_sigma_db = 4.0;
  double cluster_delay_min_factor = 1.0;   // cluster delay, in LoS delays
  double cluster_delay_max_factor = 10.0;
  double pdp_sigma_db = 3.0;         // per-cluster power-profile jitter
  double pdp_reference_s = 1e-6;     // decay reference of the power profile
  /// When set, sub-path gains of cluster i are additionally scaled by
  /// sqrt(q_i * num_clusters) where q are the power-delay-profile weights;
  /// expected total scattered power is unchanged. Off by default: the plain
  /// per-sub-path variance is used as stated.
  bool use_pdp_weights = false;

  int num_paths() const { return 1 + num_clusters * subpaths_per_cluster; }

  /// Urban-microcell defaults at 28 GHz.
  static ScenarioParams defaults();

  void validate() const;
};

/// Free-space-like path loss in dB: 32.4 + 20 log10(f/1GHz) + 26 log10(r/1m)
/// plus the shadowing term.
double path_loss_db(double f_c_hz, double r_m, double shadow_db);

/// Normalized cluster power-delay weights from delays and per-cluster jitter
/// z (dB): q_i proportional to 10^(-tau_i/reference + z_i/10).
std::vector<double> power_delay_profile(std::span<const double> delays_s,
                                        std::span<const double> z_db,
                                        double reference_s = 1e-6);

/// Convenience overload drawing z_i ~ N(0, sigma^2) from the stream.
std::vector<double> power_delay_profile(std::span<const double> delays_s,
                                        Rng& rng, double sigma_db = 3.0,
                                        double reference_s = 1e-6);

/// Draws one channel realization: one line-of-sight path plus
/// num_clusters * subpaths_per_cluster scattered paths. Deterministic in
/// (params, seed); the draw order is fixed.
channel::PathSet draw_scenario(const ScenarioParams& params,
                               std::uint64_t seed);

/// JSON fixture round-trip for PathSet (fields aod, aoa, delay, gain_re,
/// gain_im per path).
std::string pathset_to_json(const channel::PathSet& paths);
channel::PathSet pathset_from_json(const std::string& text);

}  // namespace movant::scenario
