#include "photocount/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "photocount/parallel.hpp"

namespace photocount {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRenormalizeBelow = -700.0;

void renormalize(LikelihoodGrid& grid) {
  double lowest = std::numeric_limits<double>::infinity();
  double highest = kNegInf;
  for (const double lw : grid.log_weights) {
    if (std::isfinite(lw)) {
      lowest = std::min(lowest, lw);
      highest = std::max(highest, lw);
    }
  }
  if (std::isfinite(lowest) && lowest < kRenormalizeBelow) {
    grid.log_weights -= highest;
    grid.log_offset += highest;
  }
}

double max_tau(const WaitingTimes& taus, std::optional<double> open_tail) {
  double m = open_tail.value_or(0.0);
  for (const double t : taus.taus) m = std::max(m, t);
  return m;
}

bool undriven(const AtomParams& p) { return steady_state_ee(p) == 0.0; }

}  // namespace

LikelihoodGrid init_grid(const AtomParams& base, Parameter theta, std::vector<double> candidates,
                         const std::vector<double>& prior) {
  validate(base);
  if (candidates.empty()) throw std::invalid_argument("candidate list is empty");
  const auto n = candidates.size();
  std::vector<double> p = prior;
  if (p.empty()) p.assign(n, 1.0 / static_cast<double>(n));
  if (p.size() != n) throw std::invalid_argument("prior and candidate list differ in length");
  for (const double v : p) {
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("prior entries must be positive");
  }
  if (std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) > 1e-9) {
    throw std::invalid_argument("prior must sum to one");
  }
  LikelihoodGrid grid;
  grid.theta = theta;
  grid.base = base;
  grid.candidates = std::move(candidates);
  for (std::size_t i = 0; i < n; ++i) validate(grid.candidate_params(i));
  grid.log_weights = Eigen::Map<const Eigen::ArrayXd>(p.data(), static_cast<Eigen::Index>(n)).log();
  grid.states.assign(n, PureState<double>::ground());
  return grid;
}

Eigen::ArrayXd posterior(const LikelihoodGrid& grid) {
  const double top = grid.log_weights.maxCoeff();
  if (!std::isfinite(top)) throw NumericalFailure("posterior undefined: every candidate has zero likelihood");
  // Vectorized exp clamps -inf to a denormal; excluded candidates get exact zeros.
  const Eigen::ArrayXd weights = (grid.log_weights == kNegInf).select(0.0, (grid.log_weights - top).exp());
  return weights / weights.sum();
}

std::size_t argmax(const LikelihoodGrid& grid) {
  Eigen::Index i = 0;
  grid.log_weights.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

const std::vector<Matrix2c<double>>& DtFilter::step_matrices(const LikelihoodGrid& grid, double dt) {
  auto it = cache_.find(dt);
  if (it != cache_.end() && it->second.size() == grid.size()) return it->second;
  std::vector<Matrix2c<double>> matrices;
  matrices.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const AtomParams p = grid.candidate_params(i);
    const double cap = max_substep_ > 0 ? max_substep_ : default_step(p);
    const int n = std::max(1, detail::substeps(dt, cap));
    const Matrix2c<double> one = rk4_step_matrix(pure_generator<double>(p), dt / n);
    Matrix2c<double> total = Matrix2c<double>::Identity();
    for (int k = 0; k < n; ++k) total = one * total;
    matrices.push_back(total);
  }
  return cache_.insert_or_assign(dt, std::move(matrices)).first->second;
}

void DtFilter::step(LikelihoodGrid& grid, bool click, double dt) {
  if (grid.base.eta != 1.0) throw std::invalid_argument("dt-stepped filter requires unit detector efficiency");
  if (!(dt > 0) || !(grid.base.gamma * dt < 1.0)) {
    throw std::invalid_argument(fmt::format("filter step dt = {} violates 0 < gamma dt < 1", dt));
  }
  const auto& matrices = step_matrices(grid, dt);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& psi = grid.states[i];
    psi.amplitudes = matrices[i] * psi.amplitudes;
    if (click) {
      grid.log_weights(static_cast<Eigen::Index>(i)) += std::log(grid.base.gamma * psi.excited_population());
      psi = PureState<double>::ground();
    } else {
      const double n2 = psi.norm2();
      grid.log_weights(static_cast<Eigen::Index>(i)) += std::log(n2);
      psi.amplitudes /= std::sqrt(n2);
    }
  }
  if (click) grid.log_offset += std::log(dt);
  grid.t_now += dt;
  renormalize(grid);
}

void step_dt(LikelihoodGrid& grid, bool click, double dt) {
  DtFilter filter;
  filter.step(grid, click, dt);
}

void filter_record(LikelihoodGrid& grid, const ClickRecord& record, double dt, const FilterObserver& observer) {
  if (!(dt > 0)) throw std::invalid_argument("filter step dt must be positive");
  DtFilter filter;
  const double t0 = grid.t_now;
  auto next = std::upper_bound(record.times.begin(), record.times.end(), t0);
  for (std::size_t k = 0;; ++k) {
    const double start = t0 + static_cast<double>(k) * dt;
    if (start >= record.duration) break;
    const double nominal_end = t0 + static_cast<double>(k + 1) * dt;
    const double end = std::min(nominal_end, record.duration);
    const double step = end == nominal_end ? dt : end - start;
    bool click = false;
    if (next != record.times.end() && *next <= end) {
      click = true;
      ++next;
      if (next != record.times.end() && *next <= end) {
        throw std::invalid_argument(fmt::format("two clicks fall into the filter step ending at t = {}", end));
      }
    }
    filter.step(grid, click, step);
    grid.t_now = end;
    if (observer) observer(grid);
  }
}

WaitingTimeTable interpolation_table(const AtomParams& params, double min_tau, const TableOptions& options) {
  GridOptions g = options.grid;
  g.points_per_period = std::max(g.points_per_period, interpolation_points_per_period(options.interpolation_tolerance));
  const TauGrid grid = extend_grid(choose_grid(params, g), min_tau);
  return wtd_numeric(params, grid, g.integrator_step);
}

LikelihoodGrid loglik_waiting_times(const WaitingTimes& taus, const AtomParams& base, Parameter theta,
                                    std::vector<double> candidates, std::optional<double> open_tail,
                                    const TableOptions& options, const std::vector<double>& prior) {
  LikelihoodGrid grid = init_grid(base, theta, std::move(candidates), prior);
  const double reach = max_tau(taus, open_tail);
  std::vector<double> loglik(grid.size(), 0.0);
  parallel_for(grid.size(), options.jobs, [&](std::size_t i) {
    const AtomParams p = grid.candidate_params(i);
    if (undriven(p)) {
      loglik[i] = taus.taus.empty() ? 0.0 : kNegInf;
      return;
    }
    const WaitingTimeTable table = interpolation_table(p, reach, options);
    double sum = 0.0;
    for (const double tau : taus.taus) sum += std::log(table.density_at(tau));
    if (open_tail) sum += std::log(table.survival_at(*open_tail));
    loglik[i] = sum;
  });
  for (std::size_t i = 0; i < grid.size(); ++i) grid.log_weights(static_cast<Eigen::Index>(i)) += loglik[i];
  renormalize(grid);
  return grid;
}

LikelihoodGrid loglik_record(const ClickRecord& record, Parameter theta, std::vector<double> candidates,
                             bool include_open_interval, const TableOptions& options,
                             const std::vector<double>& prior) {
  std::optional<double> tail;
  if (include_open_interval && open_interval(record) > 0) tail = open_interval(record);
  LikelihoodGrid grid =
      loglik_waiting_times(waiting_times(record), record.params, theta, std::move(candidates), tail, options, prior);
  grid.t_now = record.duration;
  return grid;
}

Eigen::MatrixXd cumulative_loglik(const WaitingTimes& taus, const AtomParams& base, Parameter theta,
                                  const std::vector<double>& candidates, const TableOptions& options) {
  const auto n = static_cast<Eigen::Index>(taus.taus.size());
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(candidates.size()));
  const double reach = max_tau(taus, std::nullopt);
  parallel_for(candidates.size(), options.jobs, [&](std::size_t i) {
    const AtomParams p = with(base, theta, candidates[i]);
    validate(p);
    const auto col = static_cast<Eigen::Index>(i);
    if (undriven(p)) {
      out.col(col).setConstant(kNegInf);
      return;
    }
    const WaitingTimeTable table = interpolation_table(p, reach, options);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      sum += std::log(table.density_at(taus.taus[static_cast<std::size_t>(k)]));
      out(k, col) = sum;
    }
  });
  return out;
}

}  // namespace photocount
