#include "photocount/waiting_time.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "photocount/dynamics.hpp"

namespace photocount {

namespace {

void require_grid(const TauGrid& grid) {
  if (!(grid.step > 0) || grid.points < 2) {
    throw std::invalid_argument("tau grid needs a positive step and at least two points");
  }
}

double interpolate(const Eigen::ArrayXd& values, const TauGrid& grid, double tau) {
  if (!(tau >= 0.0) || tau > grid.max()) {
    throw std::out_of_range(fmt::format("tau = {} outside table range [0, {}]", tau, grid.max()));
  }
  const double x = tau / grid.step;
  auto j = static_cast<std::size_t>(x);
  if (j >= grid.points - 1) j = grid.points - 2;
  const double frac = x - static_cast<double>(j);
  return values(j) + frac * (values(j + 1) - values(j));
}

}  // namespace

Eigen::Matrix4d grid_step_matrix(const AtomParams& params, double step, double integrator_step) {
  validate(params);
  if (integrator_step <= 0) integrator_step = default_step(params);
  const int n = std::max(1, detail::substeps(step, integrator_step));
  const Eigen::Matrix4d one = rk4_step_matrix(density_generator<double>(params), step / n);
  Eigen::Matrix4d total = Eigen::Matrix4d::Identity();
  for (int i = 0; i < n; ++i) total = one * total;
  return total;
}

TauGrid choose_grid(const AtomParams& params, const GridOptions& options) {
  validate(params);
  if (!(options.mass_target > 0.0 && options.mass_target < 1.0)) {
    throw std::invalid_argument("mass_target must lie in (0, 1)");
  }
  if (steady_state_ee(params) == 0.0) {
    throw std::invalid_argument("waiting-time distribution undefined for an undriven atom");
  }
  const double budget = 1.0 - options.mass_target;
  double step = 2.0 * std::numbers::pi / (fastest_frequency(params) * options.points_per_period);

  // Trapezoid error of the mass integral is step^4 |w'''(0)| / 720 (w'(0) = 0
  // and everything vanishes at tau_max); keep it within half the budget.
  const Eigen::Matrix4d a = density_generator<double>(params);
  const Eigen::Vector4d third = a * (a * (a * DensityMatrix<double>::ground().components));
  const double w3 = params.eta * params.gamma * std::abs(third(1));
  const double trap_budget = std::min(options.trapezoid_tolerance, budget / 2);
  if (w3 > 0) step = std::min(step, std::pow(720.0 * trap_budget / w3, 0.25));

  const Eigen::Matrix4d advance = grid_step_matrix(params, step, options.integrator_step);
  Eigen::Vector4d x = DensityMatrix<double>::ground().components;
  std::size_t j = 0;
  while (x(0) + x(1) >= budget / 2) {
    x = advance * x;
    if (++j + 1 > options.max_points) {
      throw NumericalFailure(fmt::format(
          "waiting-time grid exceeds {} points (step {}, eta {})", options.max_points, step, params.eta));
    }
  }
  return {step, std::max<std::size_t>(j + 1, 2)};
}

TauGrid extend_grid(TauGrid grid, double tau) {
  require_grid(grid);
  if (tau > grid.max()) {
    grid.points = static_cast<std::size_t>(std::ceil(tau / grid.step)) + 1;
  }
  return grid;
}

double interpolation_points_per_period(double relative_tolerance) {
  // |error| <= step^2/8 max|w''| and max|w''| <= (2 omega)^2 max w.
  return 4.0 * std::numbers::pi / std::sqrt(8.0 * relative_tolerance);
}

double WaitingTimeTable::density_at(double tau) const { return interpolate(w, grid, tau); }

double WaitingTimeTable::survival_at(double tau) const { return interpolate(survival, grid, tau); }

double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double step) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  return step * (values.sum() - 0.5 * (values(0) + values(n - 1)));
}

WaitingTimeTable wtd_analytic(const AtomParams& params, const TauGrid& grid) {
  validate(params);
  require_grid(grid);
  if (params.delta != 0.0 || params.eta != 1.0) {
    throw std::invalid_argument("closed-form waiting-time distribution needs delta = 0 and eta = 1");
  }
  WaitingTimeTable table{grid, params, Eigen::ArrayXd(grid.points), Eigen::ArrayXd(grid.points)};
  for (std::size_t j = 0; j < grid.points; ++j) {
    table.w(j) = params.gamma * analytic_nojump_ee(grid.tau(j), params);
    table.survival(j) = analytic_nojump_survival(grid.tau(j), params);
  }
  table.mass = trapezoid(table.w, grid.step);
  table.tail_mass = table.survival(grid.points - 1);
  return table;
}

WaitingTimeTable wtd_numeric(const AtomParams& params, const TauGrid& grid, double integrator_step) {
  validate(params);
  require_grid(grid);
  const Eigen::Matrix4d advance = grid_step_matrix(params, grid.step, integrator_step);
  WaitingTimeTable table{grid, params, Eigen::ArrayXd(grid.points), Eigen::ArrayXd(grid.points)};
  const double scale = params.eta * params.gamma;
  Eigen::Vector4d x = DensityMatrix<double>::ground().components;
  for (std::size_t j = 0; j < grid.points; ++j) {
    if (j > 0) x = advance * x;
    table.w(j) = scale * std::max(x(1), 0.0);
    table.survival(j) = x(0) + x(1);
  }
  table.mass = trapezoid(table.w, grid.step);
  table.tail_mass = table.survival(grid.points - 1);
  return table;
}

double wtd_tail_rate(const AtomParams& params) {
  return params.eta * params.gamma * steady_state_ee(params);
}

}  // namespace photocount
