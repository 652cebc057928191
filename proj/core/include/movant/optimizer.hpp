// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "movant/channel.hpp"
#include "movant/deriv.hpp"
#include "movant/rate.hpp"

namespace movant::opt {

struct TrustRegionConfig {
  double rho1 = 0.25;          // acceptance thresholds, 0 < rho1 < rho2 < 1
  double rho2 = 0.75;
  double nu1 = 2.0;            // radius growth on a good boundary step
  double nu2 = 4.0;            // radius shrink on rejection
  double initial_radius = 0.0; // meters
  double min_radius = 0.0;     // meters; a coordinate whose radius falls
                               // below this stops moving
  int max_inner_iters = 50;
  double inner_tol_bits = 1e-8;

  /// Quarter-wavelength initial radius, 1e-6 wavelength floor.
  static TrustRegionConfig for_wavelength(double lambda);
  void validate() const;
};

struct BcaConfig {
  TrustRegionConfig trm;
  double outer_rel_tol = 1e-4;
  int max_outer_iters = 100;
  /// With false the coupling matrices are pinned to identity during the
  /// optimization (the coupling-blind scheme); the reported objective is then
  /// the modeled one.
  bool coupling_aware = true;
};

/// Closed candidate interval for one coordinate: trust region intersected
/// with the spacing and range constraints. Always contains the current
/// position.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval feasible_interval(const antenna::ArrayGeometry& geom, int index,
                           double radius);

struct TrmStep {
  double x = 0.0;          // new coordinate (center if rejected)
  double radius = 0.0;     // updated trust radius
  bool accepted = false;
  double objective = 0.0;  // objective at x
};

/// One trust-region iteration on a scalar coordinate: maximizes the quadratic
/// model over the interval, evaluates the acceptance ratio, and adapts the
/// radius. `objective` is called at most once (at the candidate).
TrmStep trm_step(const std::function<double(double)>& objective,
                 double x_center, double f_center, deriv::DerivPair model,
                 Interval box, double radius, const TrustRegionConfig& cfg);

struct StepRecord {
  int outer = 0;
  deriv::Side side = deriv::Side::transmit;
  int coord = 0;
  int inner = 0;
  bool accepted = false;
  double objective = 0.0;  // block objective after the step, reported scale
  double radius = 0.0;     // radius after the step
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
};

struct OptimizerState {
  antenna::ArrayGeometry tx;
  antenna::ArrayGeometry rx;
  rate::MulticarrierAllocation allocation;
  std::vector<double> tx_radii;
  std::vector<double> rx_radii;
  std::vector<TraceEntry> trace;   // entry 0: after the first covariance fit
  std::vector<StepRecord> steps;
  double objective = 0.0;          // final reported objective (bits/s/Hz)
  int outer_iters = 0;
  bool converged = false;
  int skipped_coordinates = 0;     // conditioning failures
};

/// Alternating maximization of the flat-fading capacity: covariance by
/// water-filling, then one trust-region pass over every transmit and receive
/// coordinate, until the capacity settles.
OptimizerState bca_narrowband(const channel::PathSet& paths,
                              const antenna::Wavenumber& k, double noise_power,
                              double p_max, const antenna::ArrayGeometry& tx0,
                              const antenna::ArrayGeometry& rx0,
                              const BcaConfig& cfg);

/// Wideband counterpart: joint water-filling across subcarriers and
/// trust-region steps driven by the summed per-subcarrier derivatives. The
/// reported objective is the CP-discounted sum-rate.
OptimizerState bca_wideband(const channel::PathSet& paths,
                            const channel::OfdmGrid& grid,
                            const antenna::Wavenumber& k, double noise_power,
                            double p_max, const antenna::ArrayGeometry& tx0,
                            const antenna::ArrayGeometry& rx0,
                            const BcaConfig& cfg);

enum class BaselineKind { ula, cla };

/// Fixed uniform arrays: half-wavelength (ula) or 0.2-wavelength (cla)
/// spacing, first element at 0.
antenna::ArrayGeometry baseline_positions(BaselineKind kind, int count,
                                          double lambda);

/// Uniform spread over [0, aperture]; the standard feasible initializer.
antenna::ArrayGeometry uniform_spread(int count, double aperture,
                                      double min_spacing);

/// Uniform cluster centered in the range with spacing capped at max_spacing
/// (degenerates to the full-range spread when the range is small). Starting
/// the coupling-aware search from a centered cluster reaches markedly better
/// optima than the full-range spread: the search can both expand toward
/// multipath-sampling layouts and contract into superdirective ones.
antenna::ArrayGeometry centered_spread(int count, double aperture,
                                       double min_spacing,
                                       double max_spacing);

/// Objective of the given positions and covariances evaluated under the true
/// coupled channel; pass grid = nullptr for narrowband. Used to price a
/// coupling-blind design on the physical channel.
double physical_objective(const antenna::ArrayGeometry& tx,
                          const antenna::ArrayGeometry& rx,
                          const rate::MulticarrierAllocation& allocation,
                          const channel::PathSet& paths,
                          const channel::OfdmGrid* grid,
                          const antenna::Wavenumber& k, double noise_power);

}  // namespace movant::opt
