#pragma once

// Linear estimator built on binned waiting times.
//
// Around an expansion point theta the correction
//
//   delta_theta = sum_j g_j n_j + C,   g = beta (dw/dtheta) / (2 w),
//   beta = 1 / (2 N \int (dPhi/dtheta)^2),   C = -N sum_j g_j w_j dtau,
//
// is unbiased to first order and saturates the Cramer-Rao bound as N grows.
// Bins are [tau_j, tau_{j+1}) on the waiting-time table grid, and bin values
// of w and dw/dtheta are the averages of the two edge values.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "photocount/atom.hpp"
#include "photocount/bayes.hpp"
#include "photocount/fisher.hpp"
#include "photocount/trajectory.hpp"
#include "photocount/waiting_time.hpp"

namespace photocount {

struct WaitingHistogram {
  TauGrid grid;                     // bin j covers [tau_j, tau_{j+1})
  std::vector<std::size_t> counts;  // grid.points - 1 bins
  std::size_t n_total = 0;

  double bin_width() const { return grid.step; }
};

/// tau = grid.max() falls into the last bin. Throws std::out_of_range for
/// tau outside [0, grid.max()].
WaitingHistogram make_histogram(const std::vector<double>& taus, const TauGrid& grid);

struct GainFunction {
  TauGrid grid;
  Eigen::ArrayXd g;       // per bin; zero on excluded bins
  Eigen::ArrayXd w_bin;   // bin-averaged density
  Eigen::ArrayXd dw_bin;  // bin-averaged derivative
  double C = 0.0;
  double theta_prior = 0.0;
  double n_ref = 0.0;
  double fisher_per_photon = 0.0;  // 4 sum (dw)^2 / (4 w) dtau over kept bins
  std::size_t excluded_bins = 0;
  double excluded_mass = 0.0;
};

/// Bins with w below w_floor * max(w) get g = 0 and are left out of C.
/// Throws NumericalFailure when the kept bins carry no information.
GainFunction build_gain(const WaitingTimeTable& wtd, const Eigen::ArrayXd& dw_dtheta, double theta_prior,
                        double n_ref, double w_floor = 1e-9);

/// sum_j g_j counts_j + C. Throws std::invalid_argument unless the
/// histogram grid equals the gain grid.
double linear_estimate(const WaitingHistogram& hist, const GainFunction& gain);

/// The same correction written as
/// (1/f) sum_j dw_j (n_j / (N w_j dtau) - 1) dtau with f = fisher_per_photon
/// and N = n_ref, summed over the kept bins.
double linear_estimate_ratio_form(const WaitingHistogram& hist, const GainFunction& gain);

struct EstimatorOptions {
  GridOptions grid;
  /// Central-difference step for dw/dtheta; 1e-4 max(|theta|, gamma) when <= 0.
  double h = 0.0;
  double w_floor = 1e-9;
  /// Largest accepted |delta_theta| / |theta_hat| per update.
  double trust_region = 0.1;
  /// Each step of the chosen grid is split into this many bins.
  std::size_t bin_subdivision = 1;
};

/// Gain at theta for n_ref clicks on a grid reaching at least min_tau.
GainFunction gain_at(const AtomParams& params, Parameter theta, double n_ref, double min_tau,
                     const EstimatorOptions& options = {});

struct TracePoint {
  std::size_t n_used = 0;
  double theta_hat = 0.0;
  double sigma_crb = 0.0;
  double delta_theta = 0.0;  // accepted correction (clipped if trust_clipped)
  bool trust_clipped = false;
};

struct EstimateTrace {
  Parameter theta = Parameter::omega;
  double theta_initial = 0.0;
  std::vector<TracePoint> points;
  bool nonlinear = false;  // some update left the trust region
};

struct InitialGuessOptions {
  std::size_t clicks = 100;
  std::size_t candidates = 121;
  double relative_width = 0.2;  // search theta0 * [1 - width, 1 + width]
  /// Interpolation accuracy of the coarse likelihood tables.
  double interpolation_tolerance = 1e-4;
};

/// Grid maximum-likelihood value of theta from the first options.clicks
/// waiting times, searched around theta0.
double initial_guess(const WaitingTimes& taus, const AtomParams& params, Parameter theta, double theta0,
                     const InitialGuessOptions& options = {});

/// Iterates the linear estimator: for each N in schedule, rebuilds the gain at
/// the current estimate, applies it to the first N waiting times and updates
/// the estimate. The starting value is used as is. Throws
/// std::invalid_argument for an empty or unsorted schedule or one exceeding
/// the available waiting times.
EstimateTrace estimate_trace(const WaitingTimes& taus, const AtomParams& params, Parameter theta,
                             double theta_start, const std::vector<std::size_t>& schedule,
                             const EstimatorOptions& options = {});

/// Roughly log-spaced click counts from first to last inclusive with
/// points_per_decade entries per decade, deduplicated.
std::vector<std::size_t> log_schedule(std::size_t first, std::size_t last, double points_per_decade = 10.0);

}  // namespace photocount
