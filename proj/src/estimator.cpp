#include "photocount/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace photocount {

namespace {

void require_same_grid(const WaitingHistogram& hist, const GainFunction& gain) {
  if (!(hist.grid == gain.grid) || hist.counts.size() != static_cast<std::size_t>(gain.g.size())) {
    throw std::invalid_argument("histogram bins do not match the gain-function grid");
  }
}

Eigen::ArrayXd bin_average(const Eigen::ArrayXd& nodes) {
  const auto n = nodes.size() - 1;
  return 0.5 * (nodes.head(n) + nodes.tail(n));
}

}  // namespace

WaitingHistogram make_histogram(const std::vector<double>& taus, const TauGrid& grid) {
  if (!(grid.step > 0) || grid.points < 2) throw std::invalid_argument("histogram grid needs at least one bin");
  WaitingHistogram hist{grid, std::vector<std::size_t>(grid.points - 1, 0), 0};
  for (const double tau : taus) {
    if (!(tau >= 0) || tau > grid.max()) {
      throw std::out_of_range(fmt::format("waiting time {} outside histogram range [0, {}]", tau, grid.max()));
    }
    const auto j = std::min(static_cast<std::size_t>(tau / grid.step), hist.counts.size() - 1);
    ++hist.counts[j];
    ++hist.n_total;
  }
  return hist;
}

GainFunction build_gain(const WaitingTimeTable& wtd, const Eigen::ArrayXd& dw_dtheta, double theta_prior,
                        double n_ref, double w_floor) {
  if (dw_dtheta.size() != wtd.w.size()) throw std::invalid_argument("derivative table does not share the grid");
  if (!(n_ref >= 1)) throw std::invalid_argument("gain reference count must be at least one");
  GainFunction gain;
  gain.grid = wtd.grid;
  gain.theta_prior = theta_prior;
  gain.n_ref = n_ref;
  gain.w_bin = bin_average(wtd.w);
  gain.dw_bin = bin_average(dw_dtheta);

  const double dtau = wtd.grid.step;
  const double floor = w_floor * gain.w_bin.maxCoeff();
  const auto kept = gain.w_bin >= floor;
  const Eigen::ArrayXd score = kept.select(gain.dw_bin / (2.0 * gain.w_bin.max(floor)), 0.0);
  const double amplitude_info = (score.square() * gain.w_bin).sum() * dtau;  // \int (dPhi)^2
  if (!(amplitude_info > 0) || !std::isfinite(amplitude_info)) {
    throw NumericalFailure("waiting-time distribution carries no information on the parameter");
  }
  const double beta = 1.0 / (2.0 * n_ref * amplitude_info);
  gain.g = beta * score;
  gain.C = -n_ref * (gain.g * gain.w_bin).sum() * dtau;
  gain.fisher_per_photon = 4.0 * amplitude_info;
  gain.excluded_bins = static_cast<std::size_t>((!kept).count());
  gain.excluded_mass = kept.select(0.0, gain.w_bin).sum() * dtau;
  return gain;
}

double linear_estimate(const WaitingHistogram& hist, const GainFunction& gain) {
  require_same_grid(hist, gain);
  double sum = 0.0;
  for (std::size_t j = 0; j < hist.counts.size(); ++j) {
    sum += gain.g(static_cast<Eigen::Index>(j)) * static_cast<double>(hist.counts[j]);
  }
  return sum + gain.C;
}

double linear_estimate_ratio_form(const WaitingHistogram& hist, const GainFunction& gain) {
  require_same_grid(hist, gain);
  const double dtau = gain.grid.step;
  const double n = gain.n_ref;
  double sum = 0.0;
  for (std::size_t j = 0; j < hist.counts.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    if (gain.g(k) == 0.0) continue;  // excluded bin, or no slope
    const double expected = n * gain.w_bin(k) * dtau;
    sum += gain.dw_bin(k) * dtau * (static_cast<double>(hist.counts[j]) / expected - 1.0);
  }
  return sum / gain.fisher_per_photon;
}

GainFunction gain_at(const AtomParams& params, Parameter theta, double n_ref, double min_tau,
                     const EstimatorOptions& options) {
  validate(params);
  const double value = get(params, theta);
  const double h = options.h > 0 ? options.h : 1e-4 * std::max(std::abs(value), params.gamma);
  if (options.bin_subdivision < 1) throw std::invalid_argument("bin subdivision must be at least 1");
  TauGrid grid = choose_grid(params, options.grid);
  grid.step /= static_cast<double>(options.bin_subdivision);
  grid.points = (grid.points - 1) * options.bin_subdivision + 1;
  grid = extend_grid(grid, min_tau);
  const WaitingTimeTable center = wtd_numeric(params, grid, options.grid.integrator_step);
  const DensityDerivative derivative = wtd_derivative(params, theta, h, grid, options.grid.integrator_step);
  return build_gain(center, derivative.dw(), value, n_ref, options.w_floor);
}

double initial_guess(const WaitingTimes& taus, const AtomParams& params, Parameter theta, double theta0,
                     const InitialGuessOptions& options) {
  if (taus.taus.empty()) throw std::invalid_argument("initial guess needs at least one waiting time");
  if (options.candidates < 2) throw std::invalid_argument("initial guess needs at least two candidates");
  const std::size_t n = std::min(options.clicks, taus.taus.size());
  const WaitingTimes head{std::vector<double>(taus.taus.begin(), taus.taus.begin() + static_cast<long>(n))};
  std::vector<double> candidates(options.candidates);
  const double lo = theta0 * (1.0 - options.relative_width);
  const double hi = theta0 * (1.0 + options.relative_width);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    candidates[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(candidates.size() - 1);
  }
  TableOptions table;
  table.interpolation_tolerance = options.interpolation_tolerance;
  const LikelihoodGrid grid = loglik_waiting_times(head, params, theta, candidates, std::nullopt, table);
  return grid.candidates[argmax(grid)];
}

EstimateTrace estimate_trace(const WaitingTimes& taus, const AtomParams& params, Parameter theta,
                             double theta_start, const std::vector<std::size_t>& schedule,
                             const EstimatorOptions& options) {
  if (schedule.empty()) throw std::invalid_argument("estimation schedule is empty");
  if (!std::is_sorted(schedule.begin(), schedule.end()) || schedule.front() == 0) {
    throw std::invalid_argument("estimation schedule must be positive and non-decreasing");
  }
  if (schedule.back() > taus.taus.size()) {
    throw std::invalid_argument(fmt::format("schedule needs {} waiting times but the record has {}",
                                            schedule.back(), taus.taus.size()));
  }
  EstimateTrace trace;
  trace.theta = theta;
  trace.theta_initial = theta_start;
  double theta_hat = theta_start;
  for (const std::size_t n : schedule) {
    const std::vector<double> head(taus.taus.begin(), taus.taus.begin() + static_cast<long>(n));
    const double reach = *std::max_element(head.begin(), head.end());
    const GainFunction gain = gain_at(with(params, theta, theta_hat), theta, static_cast<double>(n), reach, options);
    const WaitingHistogram hist = make_histogram(head, gain.grid);

    TracePoint point;
    point.n_used = n;
    point.delta_theta = linear_estimate(hist, gain);
    const double cap = options.trust_region * std::abs(theta_hat);
    if (std::abs(point.delta_theta) > cap) {
      point.delta_theta = std::copysign(cap, point.delta_theta);
      point.trust_clipped = true;
      trace.nonlinear = true;
    }
    theta_hat += point.delta_theta;
    point.theta_hat = theta_hat;
    point.sigma_crb = crb_sigma(gain.fisher_per_photon, static_cast<double>(n));
    trace.points.push_back(point);
  }
  return trace;
}

std::vector<std::size_t> log_schedule(std::size_t first, std::size_t last, double points_per_decade) {
  if (first == 0 || last < first || !(points_per_decade > 0)) {
    throw std::invalid_argument("log schedule needs 0 < first <= last and a positive density");
  }
  std::vector<std::size_t> out;
  const double decades = std::log10(static_cast<double>(last) / static_cast<double>(first));
  const auto steps = static_cast<std::size_t>(std::ceil(decades * points_per_decade - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    const double value = static_cast<double>(first) * std::pow(10.0, static_cast<double>(k) / points_per_decade);
    out.push_back(static_cast<std::size_t>(std::llround(value)));
  }
  out.push_back(last);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace photocount
