#pragma once

// Fisher information of photon-counting records.
//
// Because every reported click resets the emitter to |g>, the record is a
// renewal process and its Fisher information is N times the information of
// a single waiting time:
//
//   F / N = 1/a^2 = 4 \int (d Phi / d theta)^2 d tau,   Phi = sqrt(w).
//
// fisher_per_photon evaluates this on a shared tau grid with central
// differences in theta.

#include <optional>
#include <string>
#include <vector>

#include "photocount/atom.hpp"
#include "photocount/waiting_time.hpp"

namespace photocount {

struct FisherOptions {
  /// Central-difference step; 1e-4 * max(|theta|, gamma) when <= 0.
  double h = 0.0;
  GridOptions grid;
  /// Maximum relative disagreement between the h and h/2 evaluations.
  double richardson_tolerance = 0.01;
  /// Disagreements below this absolute level (theta^-2) always pass, so that
  /// vanishing information (e.g. detuning at resonance) is not flagged.
  double richardson_floor = 1e-10;
  bool richardson_check = true;
  /// Grid points with w below floor * max(w) are treated as nodes.
  double density_floor = 1e-12;
};

struct FisherDiagnostics {
  std::size_t grid_points = 0;
  double grid_step = 0.0;
  double h = 0.0;
  double tail_mass = 0.0;
  double f_half_step = 0.0;          // result with h/2 (NaN if unchecked)
  double richardson_deviation = 0.0; // |f(h) - f(h/2)| / max
  double f_score_form = 0.0;         // \int (dw/dtheta)^2 / w cross-check
};

struct FisherResult {
  Parameter theta = Parameter::omega;
  double theta_value = 0.0;
  double eta = 1.0;
  double f_per_photon = 0.0;  // 1/a^2, units theta^-2
  double f_per_time = 0.0;    // f_per_photon * eta gamma rho_ee^st
  double a = 0.0;             // scaled uncertainty Delta S sqrt(N); inf when f = 0
  FisherDiagnostics diagnostics;
};

/// Tables at theta - h and theta + h on a shared grid.
struct DensityDerivative {
  TauGrid grid;
  Parameter theta = Parameter::omega;
  double h = 0.0;
  Eigen::ArrayXd w_minus;
  Eigen::ArrayXd w_plus;

  Eigen::ArrayXd dw() const { return (w_plus - w_minus) / (2.0 * h); }
};

DensityDerivative wtd_derivative(const AtomParams& params, Parameter theta, double h, const TauGrid& grid,
                                 double integrator_step = 0.0);

/// 4 \int (dPhi/dtheta)^2 with dPhi/dtheta = (dw/dtheta) / (2 Phi). At node
/// points (w below floor) the amplitude difference (Phi+ - Phi-)/(2h) is used.
double fisher_amplitude_form(const WaitingTimeTable& center, const DensityDerivative& derivative,
                             double density_floor = 1e-12);

/// \int (dw/dtheta)^2 / w, skipping points with w below floor * max(w).
double fisher_score_form(const WaitingTimeTable& center, const DensityDerivative& derivative,
                         double density_floor = 1e-12);

/// Throws NumericalFailure when the Richardson gate fails.
FisherResult fisher_per_photon(const AtomParams& params, Parameter theta, const FisherOptions& options = {});

struct RabiFisher {
  double per_photon;  // 8/gamma^2 + 4/omega^2
  double per_time;    // per_photon * gamma rho_ee^st = 4/gamma
};

/// Closed form for the Rabi frequency on resonance at unit efficiency.
RabiFisher fisher_analytic_rabi(const AtomParams& params);

/// Low-efficiency limit (d ln rho_ee^st / d theta)^2, where clicks form a
/// Poisson process at the steady-state rate. Throws NumericalFailure when
/// rho_ee^st = 0.
double fisher_low_eta(const AtomParams& params, Parameter theta);

/// Cramer-Rao standard deviation 1/sqrt(N f).
double crb_sigma(double f_per_photon, double n_photons);

struct ScanAxes {
  std::vector<double> omegas;  // empty: keep base value
  std::vector<double> deltas;
  std::vector<double> etas;
};

struct ScanRow {
  AtomParams params;
  std::optional<FisherResult> result;
  std::string error;  // set when the point failed
};

struct FisherScan {
  Parameter theta = Parameter::omega;
  std::vector<ScanRow> rows;  // omega-major, then delta, then eta
};

FisherScan scan(const AtomParams& base, Parameter theta, const ScanAxes& axes,
                const FisherOptions& options = {}, unsigned jobs = 1);

/// Descriptions of places where a(eta) increases with eta at fixed
/// (omega, delta) by more than relative_slack. Empty when monotone.
std::vector<std::string> eta_monotonicity_violations(const FisherScan& table, double relative_slack = 1e-6);

/// Largest |F(delta) - F(-delta)| / max(F) over mirrored pairs in the scan.
double delta_asymmetry(const FisherScan& table);

}  // namespace photocount
