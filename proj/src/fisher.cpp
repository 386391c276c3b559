#include "photocount/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

#include "photocount/dynamics.hpp"
#include "photocount/parallel.hpp"

namespace photocount {

namespace {

double default_h(const AtomParams& params, Parameter theta) {
  return 1e-4 * std::max(std::abs(get(params, theta)), params.gamma);
}

void require_shared_grid(const WaitingTimeTable& center, const DensityDerivative& d) {
  if (!(center.grid == d.grid) || d.w_minus.size() != center.w.size() || d.w_plus.size() != center.w.size()) {
    throw std::invalid_argument("derivative tables must share the grid of the central table");
  }
}

}  // namespace

DensityDerivative wtd_derivative(const AtomParams& params, Parameter theta, double h, const TauGrid& grid,
                                 double integrator_step) {
  if (!(h > 0)) throw std::invalid_argument("derivative step h must be positive");
  const double value = get(params, theta);
  DensityDerivative d{grid, theta, h, {}, {}};
  d.w_minus = wtd_numeric(with(params, theta, value - h), grid, integrator_step).w;
  d.w_plus = wtd_numeric(with(params, theta, value + h), grid, integrator_step).w;
  return d;
}

double fisher_amplitude_form(const WaitingTimeTable& center, const DensityDerivative& derivative,
                             double density_floor) {
  require_shared_grid(center, derivative);
  const double floor = density_floor * center.w.maxCoeff();
  const Eigen::ArrayXd dw = derivative.dw();
  Eigen::ArrayXd integrand(center.w.size());
  for (Eigen::Index j = 0; j < integrand.size(); ++j) {
    double dphi = 0.0;
    if (center.w(j) > floor) {
      dphi = dw(j) / (2.0 * std::sqrt(center.w(j)));
    } else {
      dphi = (std::sqrt(derivative.w_plus(j)) - std::sqrt(derivative.w_minus(j))) / (2.0 * derivative.h);
    }
    integrand(j) = dphi * dphi;
  }
  return 4.0 * trapezoid(integrand, center.grid.step);
}

double fisher_score_form(const WaitingTimeTable& center, const DensityDerivative& derivative, double density_floor) {
  require_shared_grid(center, derivative);
  const double floor = density_floor * center.w.maxCoeff();
  const Eigen::ArrayXd dw = derivative.dw();
  const Eigen::ArrayXd integrand = (center.w > floor).select(dw.square() / center.w.max(floor), 0.0);
  return trapezoid(integrand, center.grid.step);
}

FisherResult fisher_per_photon(const AtomParams& params, Parameter theta, const FisherOptions& options) {
  validate(params);
  const double h = options.h > 0 ? options.h : default_h(params, theta);
  const TauGrid grid = choose_grid(params, options.grid);
  const WaitingTimeTable center = wtd_numeric(params, grid, options.grid.integrator_step);
  const DensityDerivative derivative = wtd_derivative(params, theta, h, grid, options.grid.integrator_step);

  FisherResult result;
  result.theta = theta;
  result.theta_value = get(params, theta);
  result.eta = params.eta;
  result.f_per_photon = fisher_amplitude_form(center, derivative, options.density_floor);
  result.f_per_time = result.f_per_photon * wtd_tail_rate(params);
  result.a = 1.0 / std::sqrt(result.f_per_photon);

  auto& diag = result.diagnostics;
  diag.grid_points = grid.points;
  diag.grid_step = grid.step;
  diag.h = h;
  diag.tail_mass = center.tail_mass;
  diag.f_score_form = fisher_score_form(center, derivative, options.density_floor);
  diag.f_half_step = std::numeric_limits<double>::quiet_NaN();

  if (options.richardson_check) {
    const DensityDerivative half = wtd_derivative(params, theta, h / 2, grid, options.grid.integrator_step);
    diag.f_half_step = fisher_amplitude_form(center, half, options.density_floor);
    const double diff = std::abs(diag.f_half_step - result.f_per_photon);
    const double scale = std::max(std::abs(diag.f_half_step), std::abs(result.f_per_photon));
    diag.richardson_deviation = scale > 0 ? diff / scale : 0.0;
    if (diag.richardson_deviation > options.richardson_tolerance && diff > options.richardson_floor) {
      throw NumericalFailure(fmt::format(
          "Fisher information at {}={} not converged in h: {} (h={}) vs {} (h={})", to_string(theta),
          result.theta_value, result.f_per_photon, h, diag.f_half_step, h / 2));
    }
  }
  if (!(result.f_per_photon >= 0) || !std::isfinite(result.f_per_photon)) {
    throw NumericalFailure(fmt::format("Fisher information at {}={} is {}", to_string(theta), result.theta_value,
                                       result.f_per_photon));
  }
  return result;
}

RabiFisher fisher_analytic_rabi(const AtomParams& params) {
  validate(params);
  if (params.delta != 0.0 || params.eta != 1.0) {
    throw std::invalid_argument("closed-form Rabi-frequency information needs delta = 0 and eta = 1");
  }
  if (!(params.omega > 0)) throw std::invalid_argument("closed-form Rabi-frequency information needs omega > 0");
  const double g = params.gamma;
  const double per_photon = 8.0 / (g * g) + 4.0 / (params.omega * params.omega);
  return {per_photon, per_photon * g * steady_state_ee(params)};
}

double fisher_low_eta(const AtomParams& params, Parameter theta) {
  validate(params);
  if (steady_state_ee(params) == 0.0) {
    throw NumericalFailure("low-efficiency information undefined: steady-state excitation vanishes");
  }
  const double value = get(params, theta);
  const double h = 1e-5 * std::max(std::abs(value), params.gamma);
  const double up = std::log(steady_state_ee(with(params, theta, value + h)));
  const double down = std::log(steady_state_ee(with(params, theta, value - h)));
  const double slope = (up - down) / (2.0 * h);
  return slope * slope;
}

double crb_sigma(double f_per_photon, double n_photons) {
  if (!(f_per_photon > 0) || !(n_photons > 0)) {
    throw std::invalid_argument("Cramer-Rao bound needs positive information and photon count");
  }
  return 1.0 / std::sqrt(n_photons * f_per_photon);
}

FisherScan scan(const AtomParams& base, Parameter theta, const ScanAxes& axes, const FisherOptions& options,
                unsigned jobs) {
  const auto axis = [](const std::vector<double>& values, double fallback) {
    return values.empty() ? std::vector<double>{fallback} : values;
  };
  const auto omegas = axis(axes.omegas, base.omega);
  const auto deltas = axis(axes.deltas, base.delta);
  const auto etas = axis(axes.etas, base.eta);

  FisherScan table;
  table.theta = theta;
  for (const double omega : omegas) {
    for (const double delta : deltas) {
      for (const double eta : etas) {
        AtomParams p = base;
        p.omega = omega;
        p.delta = delta;
        p.eta = eta;
        table.rows.push_back({p, std::nullopt, {}});
      }
    }
  }
  parallel_for(table.rows.size(), jobs, [&](std::size_t i) {
    ScanRow& row = table.rows[i];
    try {
      row.result = fisher_per_photon(row.params, theta, options);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return table;
}

std::vector<std::string> eta_monotonicity_violations(const FisherScan& table, double relative_slack) {
  std::map<std::tuple<double, double, double>, std::vector<std::pair<double, double>>> groups;
  for (const auto& row : table.rows) {
    if (!row.result) continue;
    groups[{row.params.omega, row.params.delta, row.params.gamma}].emplace_back(row.params.eta, row.result->a);
  }
  std::vector<std::string> violations;
  for (auto& [key, points] : groups) {
    std::sort(points.begin(), points.end());
    for (std::size_t i = 1; i < points.size(); ++i) {
      const auto [eta_lo, a_lo] = points[i - 1];
      const auto [eta_hi, a_hi] = points[i];
      if (a_hi > a_lo * (1.0 + relative_slack)) {
        violations.push_back(fmt::format("omega={} delta={}: a({})={} > a({})={}", std::get<0>(key),
                                         std::get<1>(key), eta_hi, a_hi, eta_lo, a_lo));
      }
    }
  }
  return violations;
}

double delta_asymmetry(const FisherScan& table) {
  std::map<std::tuple<double, double, double, double>, double> by_point;
  double largest = 0.0;
  for (const auto& row : table.rows) {
    if (!row.result) continue;
    by_point[{row.params.omega, row.params.delta, row.params.eta, row.params.gamma}] = row.result->f_per_photon;
  }
  for (const auto& [key, f] : by_point) {
    const auto [omega, delta, eta, gamma] = key;
    if (delta <= 0) continue;
    const auto mirror = by_point.find({omega, -delta, eta, gamma});
    if (mirror == by_point.end()) continue;
    const double scale = std::max(std::abs(f), std::abs(mirror->second));
    if (scale > 0) largest = std::max(largest, std::abs(f - mirror->second) / scale);
  }
  return largest;
}

}  // namespace photocount
