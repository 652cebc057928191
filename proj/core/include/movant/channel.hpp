// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "movant/antenna.hpp"
#include "movant/matfun.hpp"

namespace movant::channel {

/// One multipath realization: departure/arrival elevations, absolute delays,
/// and complex amplitudes, one entry per path.
struct PathSet {
  std::vector<double> aod;     // radians
  std::vector<double> aoa;     // radians
  std::vector<double> delays;  // seconds
  std::vector<std::complex<double>> gains;

  int size() const noexcept { return static_cast<int>(gains.size()); }
  double min_delay() const;
  double max_delay() const;
  void validate() const;
};

/// OFDM dimensioning. The cyclic prefix spans exactly the delay-tap range.
struct OfdmGrid {
  int num_subcarriers = 1;     // S
  double spacing_hz = 0.0;     // subcarrier spacing
  int max_tap = 0;             // T
  int cp_len = 0;              // equals T

  /// Computes T = ceil(S * spacing * (tau_max - tau_min)) from the path
  /// delays and sets the CP length to match.
  static OfdmGrid for_paths(int num_subcarriers, double spacing_hz,
                            const PathSet& paths);
};

/// Field response and coupling factors of one array side. The coupling matrix
/// keeps its eigendecomposition for the Sylvester solves downstream. With
/// coupling_aware = false both coupling factors are identity (the
/// coupling-blind model).
struct SideFactors {
  antenna::ArrayGeometry geom;
  Eigen::MatrixXcd frm;             // L x n, G(t) or F(r)
  matfun::SpdMatrix coupling;       // C
  Eigen::MatrixXd coupling_inv_sqrt;
};

SideFactors make_side_factors(const antenna::ArrayGeometry& geom,
                              std::span<const double> angles,
                              const antenna::Wavenumber& k,
                              bool coupling_aware = true);

/// H = C_R^{-1/2} F^H diag(prm) G C_T^{-1/2}.
Eigen::MatrixXcd assemble_from_factors(const SideFactors& rx,
                                       const Eigen::VectorXcd& prm,
                                       const SideFactors& tx);

/// Flat-fading effective channel with its cached factors. Invariant:
/// h reassembles from the cached factors.
struct EffectiveChannel {
  SideFactors tx;
  SideFactors rx;
  Eigen::VectorXcd prm;  // diag of the path response matrix
  Eigen::MatrixXcd h;    // N x M
};

EffectiveChannel assemble_narrowband(const antenna::ArrayGeometry& t,
                                     const antenna::ArrayGeometry& r,
                                     const PathSet& paths,
                                     const antenna::Wavenumber& k,
                                     bool coupling_aware = true);

/// Time-domain tap gain of one path: the path amplitude rotated by the
/// carrier phase of its excess delay and shaped by the triangular pulse
/// f(t) = 1 - |t| on [-1, 1].
std::complex<double> time_domain_gain(const PathSet& paths, int path, int tap,
                                      const OfdmGrid& grid,
                                      const antenna::Wavenumber& k);

/// Per-subcarrier path gains: DFT of the tap sequence of each path. Entry
/// [nu](l) is b_l[nu].
std::vector<Eigen::VectorXcd> freq_domain_prm(const PathSet& paths,
                                              const OfdmGrid& grid,
                                              const antenna::Wavenumber& k);

/// Frequency-selective effective channel: per-subcarrier matrices share the
/// geometry factors (computed once) and differ only in the path response.
struct WidebandChannel {
  SideFactors tx;
  SideFactors rx;
  OfdmGrid grid;
  std::vector<Eigen::VectorXcd> prm;  // per subcarrier
  std::vector<Eigen::MatrixXcd> h;    // per subcarrier, N x M
};

WidebandChannel assemble_wideband(const antenna::ArrayGeometry& t,
                                  const antenna::ArrayGeometry& r,
                                  const PathSet& paths, const OfdmGrid& grid,
                                  const antenna::Wavenumber& k,
                                  bool coupling_aware = true);

}  // namespace movant::channel
