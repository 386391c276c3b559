#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "photocount/atom.hpp"

namespace photocount {

/// Uniform grid tau_j = j * step, j = 0 .. points-1.
struct TauGrid {
  double step = 0.0;
  std::size_t points = 0;

  double tau(std::size_t j) const { return step * static_cast<double>(j); }
  double max() const { return tau(points - 1); }

  friend bool operator==(const TauGrid&, const TauGrid&) = default;
};

struct GridOptions {
  /// Required probability mass inside [0, tau_max].
  double mass_target = 1.0 - 1e-10;
  /// Minimum resolution of the fastest oscillation.
  double points_per_period = 40.0;
  /// Cap on the trapezoid-rule error of the normalization integral.
  double trapezoid_tolerance = 1e-9;
  /// RK4 substep cap; default_step(params) when <= 0.
  double integrator_step = 0.0;
  std::size_t max_points = 50'000'000;
};

/// Uniform grid resolving the no-jump dynamics of params with tau_max past
/// the point where the survival probability drops below the truncation
/// budget. Throws NumericalFailure if the grid would exceed max_points.
TauGrid choose_grid(const AtomParams& params, const GridOptions& options = {});

/// Same step, enough points to reach tau.
TauGrid extend_grid(TauGrid grid, double tau);

/// Points per period of the fastest frequency for which linear interpolation
/// of w stays within relative_tolerance of the density scale.
double interpolation_points_per_period(double relative_tolerance);

/// Waiting-time density w(tau) = eta gamma rho~_ee(tau) tabulated on a grid,
/// together with the survival probability trace rho~(tau).
struct WaitingTimeTable {
  TauGrid grid;
  AtomParams params;
  Eigen::ArrayXd w;
  Eigen::ArrayXd survival;
  double mass = 0.0;       // trapezoid integral of w over the grid
  double tail_mass = 0.0;  // survival(tau_max): probability beyond the grid

  /// Linear interpolation; throws std::out_of_range outside [0, tau_max].
  double density_at(double tau) const;
  double survival_at(double tau) const;
};

double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double step);

/// Closed-form table, valid on resonance at unit efficiency only.
WaitingTimeTable wtd_analytic(const AtomParams& params, const TauGrid& grid);

/// Table from RK4 integration of the conditional master equation from |g><g|.
WaitingTimeTable wtd_numeric(const AtomParams& params, const TauGrid& grid,
                             double integrator_step = 0.0);

/// Asymptotic exponential decay rate of w, eta gamma rho_ee^st; also the mean
/// reported click rate.
double wtd_tail_rate(const AtomParams& params);

/// Matrix advancing the component vector (rho_gg, rho_ee, Re rho_ge, Im rho_ge)
/// by one grid step: the product of equal RK4 substeps no longer than
/// integrator_step.
Eigen::Matrix4d grid_step_matrix(const AtomParams& params, double step, double integrator_step = 0.0);

}  // namespace photocount
