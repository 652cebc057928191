// SPDX-License-Identifier: Apache-2.0
#include "movant/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>

#include "movant/errors.hpp"

namespace movant::opt {

namespace {

using antenna::ArrayGeometry;
using antenna::Wavenumber;
using channel::PathSet;
using channel::SideFactors;
using deriv::Side;

double forward_capacity(const std::vector<Eigen::MatrixXcd>& h,
                        const rate::MulticarrierAllocation& alloc,
                        double noise) {
  double total = 0.0;
  for (size_t nu = 0; nu < h.size(); ++nu) {
    total += rate::capacity_bits(h[nu], alloc.per_carrier[nu].tx_cov, noise);
  }
  return total;
}

double reverse_capacity(const std::vector<Eigen::MatrixXcd>& h,
                        const rate::MulticarrierAllocation& alloc,
                        double noise) {
  double total = 0.0;
  for (size_t nu = 0; nu < h.size(); ++nu) {
    total += rate::capacity_bits(h[nu].adjoint(),
                                 alloc.per_carrier[nu].rx_cov, noise);
  }
  return total;
}

// Alternating maximization over {Q_nu}, t, r for a fixed list of per-carrier
// path responses. Narrowband is the single-carrier case; the wideband wrapper
// passes the CP discount through `scale`, which multiplies every reported
// objective (the acceptance ratio is scale-invariant).
class BcaEngine {
 public:
  BcaEngine(const PathSet& paths, std::vector<Eigen::VectorXcd> prm,
            double scale, const Wavenumber& k, double noise, double p_max,
            const ArrayGeometry& tx0, const ArrayGeometry& rx0,
            const BcaConfig& cfg)
      : paths_(paths),
        prm_(std::move(prm)),
        scale_(scale),
        k_(k),
        noise_(noise),
        p_max_(p_max),
        cfg_(cfg),
        tx_(channel::make_side_factors(tx0, paths.aod, k, cfg.coupling_aware)),
        rx_(channel::make_side_factors(rx0, paths.aoa, k,
                                       cfg.coupling_aware)) {
    cfg_.trm.validate();
    rebuild_channels();
  }

  OptimizerState run() {
    OptimizerState state{tx_.geom, rx_.geom, {}, {}, {}, {}, {},
                         0.0,      0,        false, 0};
    state.tx_radii.assign(static_cast<size_t>(tx_.geom.size()),
                          cfg_.trm.initial_radius);
    state.rx_radii.assign(static_cast<size_t>(rx_.geom.size()),
                          cfg_.trm.initial_radius);

    // Running objective. The covariance is refit before each position block,
    // so every stage (water-filling, transmit block, water-filling, receive
    // block) starts from the incumbent value and cannot lower it: the fresh
    // allocation is optimal for the current channels, and the block metrics
    // coincide with the capacity at a fresh covariance. The max() only ever
    // absorbs rounding between the algebraically equal stage values.
    double prev_end = 0.0;
    for (int outer = 1; outer <= cfg_.max_outer_iters; ++outer) {
      update_allocation();
      if (outer == 1) {
        state.trace.push_back({0, scale_ * capacity_});
        prev_end = capacity_;
      }

      run_block(Side::transmit, outer, state);
      update_allocation();
      run_block(Side::receive, outer, state);

      state.trace.push_back({outer, scale_ * capacity_});
      state.outer_iters = outer;
      if (outer >= 2 &&
          std::abs(capacity_ - prev_end) <=
              cfg_.outer_rel_tol * std::max(std::abs(prev_end), 1e-12)) {
        state.converged = true;
        break;
      }
      prev_end = capacity_;
    }
    update_allocation();

    state.tx = tx_.geom;
    state.rx = rx_.geom;
    state.allocation = alloc_;
    state.objective = scale_ * capacity_;
    return state;
  }

 private:
  void rebuild_channels() {
    h_.resize(prm_.size());
    for (size_t nu = 0; nu < prm_.size(); ++nu) {
      h_[nu] = channel::assemble_from_factors(rx_, prm_[nu], tx_);
    }
  }

  void update_allocation() {
    rate::MulticarrierAllocation candidate =
        rate::optimal_Q_multicarrier(h_, noise_, p_max_);
    const double cap = forward_capacity(h_, candidate, noise_);
    if (!have_alloc_ || cap >= capacity_) {
      alloc_ = std::move(candidate);
      capacity_ = cap;
      have_alloc_ = true;
    }
  }

  SideFactors& side(Side s) { return s == Side::transmit ? tx_ : rx_; }

  std::span<const double> angles(Side s) const {
    return s == Side::transmit ? std::span<const double>(paths_.aod)
                               : std::span<const double>(paths_.aoa);
  }

  const Eigen::MatrixXcd& frozen_cov(Side s, size_t nu) const {
    return s == Side::transmit ? alloc_.per_carrier[nu].tx_cov
                               : alloc_.per_carrier[nu].rx_cov;
  }

  // One pass over every coordinate of one side. The block objective is the
  // capacity against the frozen covariance (transmit) or its receive-side
  // mirror (receive); its value carries across the coordinates of the block.
  void run_block(Side s, int outer, OptimizerState& state) {
    double obj = 0.0;
    try {
      obj = s == Side::transmit ? forward_capacity(h_, alloc_, noise_)
                                : reverse_capacity(h_, alloc_, noise_);
    } catch (const IllConditionedCoupling&) {
      state.skipped_coordinates += side(s).geom.size();
      return;
    }
    for (int i = 0; i < side(s).geom.size(); ++i) {
      obj = coordinate_pass(s, i, outer, obj, state);
    }
    capacity_ = std::max(capacity_, obj);
  }

  // Inner trust-region loop on one coordinate until the block objective
  // settles, the radius floor is hit, or the iteration budget runs out.
  // Returns the updated block objective.
  double coordinate_pass(Side s, int index, int outer, double obj,
                         OptimizerState& state) {
    std::vector<double>& radii =
        s == Side::transmit ? state.tx_radii : state.rx_radii;
    // Fresh trust region per invocation: each coordinate update starts a new
    // subproblem with the initial radius. Carrying shrunken radii across
    // outer iterations freezes the search after the first pass.
    double radius = cfg_.trm.initial_radius;

    // Candidate state produced by the objective closure of the last
    // evaluation; committed on acceptance so the stored state and the logged
    // objective agree bit for bit.
    struct Candidate {
      SideFactors factors;
      std::vector<Eigen::MatrixXcd> h;
    };
    std::optional<Candidate> cand;

    const auto evaluate = [&](double x) {
      Candidate c{channel::make_side_factors(
                      side(s).geom.with_position(index, x), angles(s), k_,
                      cfg_.coupling_aware),
                  {}};
      c.h.resize(prm_.size());
      double total = 0.0;
      for (size_t nu = 0; nu < prm_.size(); ++nu) {
        if (s == Side::transmit) {
          c.h[nu] = channel::assemble_from_factors(rx_, prm_[nu], c.factors);
          total += rate::capacity_bits(c.h[nu], frozen_cov(s, nu), noise_);
        } else {
          c.h[nu] = channel::assemble_from_factors(c.factors, prm_[nu], tx_);
          total += rate::capacity_bits(c.h[nu].adjoint(), frozen_cov(s, nu),
                                       noise_);
        }
      }
      cand = std::move(c);
      return total;
    };

    for (int inner = 0; inner < cfg_.trm.max_inner_iters; ++inner) {
      if (radius < cfg_.trm.min_radius) break;

      TrmStep step;
      try {
        const deriv::LinkView view{&tx_, &rx_, paths_.aod, paths_.aoa, k_,
                                   cfg_.coupling_aware};
        std::vector<deriv::CarrierState> carriers(prm_.size());
        for (size_t nu = 0; nu < prm_.size(); ++nu) {
          carriers[nu].h = &h_[nu];
          carriers[nu].w = &frozen_cov(s, nu);
        }
        const deriv::DerivPair pair =
            deriv::objective_derivs(view, carriers, prm_, noise_, {s, index});
        const Interval box = feasible_interval(side(s).geom, index, radius);
        step = trm_step(evaluate, side(s).geom.position(index), obj, pair, box,
                        radius, cfg_.trm);
      } catch (const IllConditionedCoupling&) {
        ++state.skipped_coordinates;
        break;
      }
      radius = step.radius;

      if (step.accepted) {
        side(s) = std::move(cand->factors);
        h_ = std::move(cand->h);
        const double delta = step.objective - obj;
        obj = step.objective;
        state.steps.push_back(
            {outer, s, index, inner, true, scale_ * obj, radius});
        if (std::abs(delta) < cfg_.trm.inner_tol_bits) break;
      } else {
        state.steps.push_back(
            {outer, s, index, inner, false, scale_ * obj, radius});
      }
      cand.reset();
    }

    radii[static_cast<size_t>(index)] = radius;
    return obj;
  }

  const PathSet& paths_;
  std::vector<Eigen::VectorXcd> prm_;
  double scale_;
  Wavenumber k_;
  double noise_;
  double p_max_;
  BcaConfig cfg_;
  SideFactors tx_;
  SideFactors rx_;
  std::vector<Eigen::MatrixXcd> h_;
  rate::MulticarrierAllocation alloc_;
  double capacity_ = 0.0;
  bool have_alloc_ = false;
};

}  // namespace

TrustRegionConfig TrustRegionConfig::for_wavelength(double lambda) {
  TrustRegionConfig cfg;
  cfg.initial_radius = lambda / 4.0;
  cfg.min_radius = 1e-6 * lambda;
  return cfg;
}

void TrustRegionConfig::validate() const {
  if (!(0.0 < rho1 && rho1 < rho2 && rho2 < 1.0)) {
    throw ContractViolation("TrustRegionConfig: need 0 < rho1 < rho2 < 1");
  }
  if (!(nu1 > 1.0 && nu2 > 1.0)) {
    throw ContractViolation("TrustRegionConfig: need nu1, nu2 > 1");
  }
  if (!(initial_radius > min_radius && min_radius > 0.0)) {
    throw ContractViolation(
        "TrustRegionConfig: need initial_radius > min_radius > 0");
  }
  if (max_inner_iters < 0 || inner_tol_bits < 0.0) {
    throw ContractViolation("TrustRegionConfig: invalid inner loop limits");
  }
}

Interval feasible_interval(const ArrayGeometry& geom, int index,
                           double radius) {
  const double x = geom.position(index);
  const double lower_neighbor =
      index > 0 ? geom.position(index - 1) + geom.min_spacing() : 0.0;
  const double upper_neighbor =
      index < geom.size() - 1 ? geom.position(index + 1) - geom.min_spacing()
                              : geom.aperture();
  Interval box{std::max(x - radius, lower_neighbor),
               std::min(x + radius, upper_neighbor)};
  // The current position is feasible, so the interval contains it; clamp away
  // any projection residue.
  box.lo = std::min(box.lo, x);
  box.hi = std::max(box.hi, x);
  return box;
}

TrmStep trm_step(const std::function<double(double)>& objective,
                 double x_center, double f_center, deriv::DerivPair model,
                 Interval box, double radius, const TrustRegionConfig& cfg) {
  const auto quad = [&](double x) {
    const double d = x - x_center;
    return f_center + model.first * d + 0.5 * model.second * d * d;
  };

  // Exact maximizer of the quadratic over the interval: an endpoint, or the
  // Newton point when the model is concave.
  double x_star = box.lo;
  double w_star = quad(box.lo);
  if (const double w_hi = quad(box.hi); w_hi > w_star) {
    x_star = box.hi;
    w_star = w_hi;
  }
  if (model.second < -1e-12) {
    const double newton =
        std::clamp(x_center - model.first / model.second, box.lo, box.hi);
    if (const double w_n = quad(newton); w_n > w_star) {
      x_star = newton;
      w_star = w_n;
    }
  }

  const double predicted = w_star - f_center;
  if (predicted < 1e-14 * (1.0 + std::abs(f_center))) {
    // No meaningful predicted improvement; the ratio is undefined.
    return TrmStep{x_center, radius / cfg.nu2, false, f_center};
  }

  const double f_new = objective(x_star);
  const double ratio = (f_new - f_center) / predicted;

  if (ratio > cfg.rho2) {
    const bool on_boundary =
        std::abs(x_star - x_center) >= radius * (1.0 - 1e-12);
    return TrmStep{x_star, on_boundary ? radius * cfg.nu1 : radius, true,
                   f_new};
  }
  if (ratio > cfg.rho1) {
    return TrmStep{x_star, radius, true, f_new};
  }
  return TrmStep{x_center, radius / cfg.nu2, false, f_center};
}

OptimizerState bca_narrowband(const PathSet& paths, const Wavenumber& k,
                              double noise_power, double p_max,
                              const ArrayGeometry& tx0,
                              const ArrayGeometry& rx0, const BcaConfig& cfg) {
  paths.validate();
  std::vector<Eigen::VectorXcd> prm(1);
  prm[0] = Eigen::Map<const Eigen::VectorXcd>(
      paths.gains.data(), static_cast<Eigen::Index>(paths.gains.size()));
  return BcaEngine(paths, std::move(prm), 1.0, k, noise_power, p_max, tx0, rx0,
                   cfg)
      .run();
}

OptimizerState bca_wideband(const PathSet& paths,
                            const channel::OfdmGrid& grid, const Wavenumber& k,
                            double noise_power, double p_max,
                            const ArrayGeometry& tx0, const ArrayGeometry& rx0,
                            const BcaConfig& cfg) {
  paths.validate();
  const double scale = static_cast<double>(grid.num_subcarriers) /
                       static_cast<double>(grid.num_subcarriers + grid.cp_len);
  return BcaEngine(paths, channel::freq_domain_prm(paths, grid, k), scale, k,
                   noise_power, p_max, tx0, rx0, cfg)
      .run();
}

ArrayGeometry baseline_positions(BaselineKind kind, int count, double lambda) {
  if (count < 1 || lambda <= 0.0) {
    throw ContractViolation("baseline_positions: invalid arguments");
  }
  const double spacing = (kind == BaselineKind::ula ? 0.5 : 0.2) * lambda;
  std::vector<double> pos(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) pos[static_cast<size_t>(i)] = i * spacing;
  return ArrayGeometry(std::move(pos), (count - 1) * spacing, spacing);
}

ArrayGeometry uniform_spread(int count, double aperture, double min_spacing) {
  if (count < 1) {
    throw ContractViolation("uniform_spread: need at least one element");
  }
  std::vector<double> pos(static_cast<size_t>(count));
  if (count == 1) {
    pos[0] = aperture / 2.0;
  } else {
    const double spacing = aperture / (count - 1);
    for (int i = 0; i < count; ++i) pos[static_cast<size_t>(i)] = i * spacing;
  }
  return ArrayGeometry(std::move(pos), aperture, min_spacing);
}

ArrayGeometry centered_spread(int count, double aperture, double min_spacing,
                              double max_spacing) {
  if (count < 1) {
    throw ContractViolation("centered_spread: need at least one element");
  }
  if (count == 1) {
    return uniform_spread(count, aperture, min_spacing);
  }
  const double spacing = std::min(max_spacing, aperture / (count - 1));
  const double start = 0.5 * (aperture - (count - 1) * spacing);
  std::vector<double> pos(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    pos[static_cast<size_t>(i)] = start + i * spacing;
  }
  return ArrayGeometry(std::move(pos), aperture, min_spacing);
}

double physical_objective(const ArrayGeometry& tx, const ArrayGeometry& rx,
                          const rate::MulticarrierAllocation& allocation,
                          const PathSet& paths, const channel::OfdmGrid* grid,
                          const Wavenumber& k, double noise_power) {
  if (grid == nullptr) {
    if (allocation.per_carrier.size() != 1) {
      throw ContractViolation("physical_objective: expected one carrier");
    }
    const channel::EffectiveChannel ch =
        channel::assemble_narrowband(tx, rx, paths, k);
    return rate::capacity_bits(ch.h, allocation.per_carrier[0].tx_cov,
                               noise_power);
  }
  const channel::WidebandChannel ch =
      channel::assemble_wideband(tx, rx, paths, *grid, k);
  return rate::sum_rate(ch.h, allocation, noise_power, grid->num_subcarriers,
                        grid->cp_len);
}

}  // namespace movant::opt
