#pragma once

// Bayesian inference over a discrete set of candidate parameter values.
//
// Two likelihood evaluations are provided. The dt-stepped filter multiplies
// the quantum-measurement probabilities of every click / no-click interval
// along the record. The waiting-time form uses the renewal structure of the
// record: log L = sum_i log w(tau_i) + log S(T - t_N). Both agree up to a
// theta-independent constant plus O(dt) per click.

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "photocount/atom.hpp"
#include "photocount/dynamics.hpp"
#include "photocount/trajectory.hpp"
#include "photocount/waiting_time.hpp"

namespace photocount {

/// Candidate values with accumulated log-likelihood weights. The weights are
/// kept free of theta-independent factors; those are summed in log_offset so
/// that log_weights + log_offset is the full log-likelihood (plus log prior).
struct LikelihoodGrid {
  Parameter theta = Parameter::omega;
  AtomParams base;  // candidate i is with(base, theta, candidates[i])
  std::vector<double> candidates;
  Eigen::ArrayXd log_weights;
  std::vector<PureState<double>> states;  // normalized conditional states (dt mode)
  double t_now = 0.0;
  double log_offset = 0.0;

  AtomParams candidate_params(std::size_t i) const { return with(base, theta, candidates.at(i)); }
  std::size_t size() const { return candidates.size(); }
};

/// Uniform prior when prior is empty. Throws std::invalid_argument for an
/// empty candidate list, a size mismatch, non-positive prior entries or a
/// prior that does not sum to one.
LikelihoodGrid init_grid(const AtomParams& base, Parameter theta, std::vector<double> candidates,
                         const std::vector<double>& prior = {});

/// Normalized posterior exp(log_weights - max) / sum. Candidates at -inf get
/// zero mass. Throws NumericalFailure when every weight is -inf.
Eigen::ArrayXd posterior(const LikelihoodGrid& grid);

/// Index of the largest log-weight.
std::size_t argmax(const LikelihoodGrid& grid);

/// Advances every candidate by dt at unit efficiency. Without a click each
/// weight gains the log of the no-jump norm ratio. With a click the state is
/// propagated, the weight gains log(gamma |c_e|^2) at the end of the step
/// (log dt goes to log_offset) and the state resets to |g>. Throws
/// std::invalid_argument if gamma dt >= 1 or base.eta != 1.
class DtFilter {
 public:
  explicit DtFilter(double max_substep = 0.0) : max_substep_(max_substep) {}

  void step(LikelihoodGrid& grid, bool click, double dt);

 private:
  const std::vector<Matrix2c<double>>& step_matrices(const LikelihoodGrid& grid, double dt);

  double max_substep_;
  std::map<double, std::vector<Matrix2c<double>>> cache_;
};

/// Single step with a fresh propagator cache.
void step_dt(LikelihoodGrid& grid, bool click, double dt);

/// Called after each filter step with the current grid.
using FilterObserver = std::function<void(const LikelihoodGrid&)>;

/// Runs the dt filter over [t_now, record.duration]. A click at t falls into
/// the step (k dt, (k+1) dt] that contains it. The final step is shortened
/// to end at the record duration. Throws std::invalid_argument if two clicks
/// share a step.
void filter_record(LikelihoodGrid& grid, const ClickRecord& record, double dt,
                   const FilterObserver& observer = {});

struct TableOptions {
  GridOptions grid;
  /// Relative interpolation accuracy of w at the density scale.
  double interpolation_tolerance = 1e-6;
  unsigned jobs = 1;
};

/// Waiting-time table for params resolved for linear interpolation, extended
/// so that tau_max covers at least min_tau.
WaitingTimeTable interpolation_table(const AtomParams& params, double min_tau, const TableOptions& options = {});

/// log L(theta_i) = log prior_i + sum_j log w(tau_j; theta_i) [+ log S(open_tail;
/// theta_i)] with w interpolated linearly. Candidate tables are built one at
/// a time and discarded.
LikelihoodGrid loglik_waiting_times(const WaitingTimes& taus, const AtomParams& base, Parameter theta,
                                    std::vector<double> candidates, std::optional<double> open_tail = std::nullopt,
                                    const TableOptions& options = {}, const std::vector<double>& prior = {});

/// Waiting-time likelihood of a whole record. The trailing interval after the
/// last click enters as a survival factor when include_open_interval is set.
LikelihoodGrid loglik_record(const ClickRecord& record, Parameter theta, std::vector<double> candidates,
                             bool include_open_interval = true, const TableOptions& options = {},
                             const std::vector<double>& prior = {});

/// Row k holds sum_{j<=k} log w(tau_j; theta_i) for candidate column i.
Eigen::MatrixXd cumulative_loglik(const WaitingTimes& taus, const AtomParams& base, Parameter theta,
                                  const std::vector<double>& candidates, const TableOptions& options = {});

}  // namespace photocount
