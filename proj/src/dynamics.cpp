#include "photocount/dynamics.hpp"

#include <cmath>

namespace photocount {

namespace {

// e^{-gamma tau/4} cosh(q tau) and e^{-gamma tau/4} sinh(q tau)/q for the
// resonant problem, q^2 = gamma^2/16 - omega^2/4. Covers the underdamped
// (q imaginary), critical and overdamped branches without overflow.
struct ResonantFactors {
  double c;
  double s;
};

ResonantFactors resonant_factors(double tau, const AtomParams& p) {
  const double decay = p.gamma / 4;
  if (std::abs(p.omega - p.gamma / 2) < 1e-9) {
    const double env = std::exp(-decay * tau);
    return {env, tau * env};
  }
  const double q2 = p.gamma * p.gamma / 16 - p.omega * p.omega / 4;
  if (q2 < 0) {
    const double lambda = std::sqrt(-q2);
    const double env = std::exp(-decay * tau);
    return {env * std::cos(lambda * tau), env * std::sin(lambda * tau) / lambda};
  }
  const double kappa = std::sqrt(q2);
  const double up = std::exp((kappa - decay) * tau);
  const double down = std::exp(-(kappa + decay) * tau);
  return {(up + down) / 2, (up - down) / (2 * kappa)};
}

void require_resonance(const AtomParams& p) {
  validate(p);
  if (p.delta != 0.0) {
    throw std::invalid_argument("closed-form no-jump solution requires delta = 0");
  }
}

}  // namespace

NoJumpExponential::NoJumpExponential(const AtomParams& params) {
  validate(params);
  const Matrix2c<double> m = pure_generator<double>(params);
  mu_ = (m(0, 0) + m(1, 1)) / 2.0;
  shifted_ = m - mu_ * Matrix2c<double>::Identity();
  q_ = std::sqrt(shifted_(0, 0) * shifted_(0, 0) + shifted_(0, 1) * shifted_(1, 0));
  if (q_.real() < 0) q_ = -q_;
}

Matrix2c<double> NoJumpExponential::operator()(double tau) const {
  using C = std::complex<double>;
  const C x = q_ * tau;
  C cosh_part, sinh_part;  // e^{mu tau} cosh(q tau), e^{mu tau} sinh(q tau) / q
  if (std::abs(x) < 1e-3) {
    const C x2 = x * x;
    const C env = std::exp(mu_ * tau);
    cosh_part = env * (1.0 + x2 / 2.0 + x2 * x2 / 24.0);
    sinh_part = env * tau * (1.0 + x2 / 6.0 + x2 * x2 / 120.0);
  } else {
    const C up = std::exp((mu_ + q_) * tau);
    const C down = std::exp((mu_ - q_) * tau);
    cosh_part = (up + down) / 2.0;
    sinh_part = (up - down) / (2.0 * q_);
  }
  return cosh_part * Matrix2c<double>::Identity() + sinh_part * shifted_;
}

PureState<double> NoJumpExponential::from_ground(double tau) const {
  PureState<double> psi;
  psi.amplitudes = (*this)(tau).col(0);
  return psi;
}

double analytic_nojump_ee(double tau, const AtomParams& params) {
  require_resonance(params);
  if (tau < 0) throw std::invalid_argument("tau must be non-negative");
  const auto f = resonant_factors(tau, params);
  const double half_omega = params.omega / 2;
  return half_omega * half_omega * f.s * f.s;
}

double analytic_nojump_survival(double tau, const AtomParams& params) {
  require_resonance(params);
  if (tau < 0) throw std::invalid_argument("tau must be non-negative");
  const auto f = resonant_factors(tau, params);
  const double half_omega = params.omega / 2;
  const double g = f.c + params.gamma / 4 * f.s;
  return g * g + half_omega * half_omega * f.s * f.s;
}

double steady_state_ee(const AtomParams& params) {
  validate(params);
  if (params.omega == 0.0) return 0.0;
  // Stationary Bloch equations with rho_gg = 1 - rho_ee, unknowns
  // (rho_ee, Re rho_ge, Im rho_ge).
  const double w = params.omega, d = params.delta, g = params.gamma;
  Eigen::Matrix3d a;
  // clang-format off
  a << -g,  0,     w,
        0, -g / 2, d,
       -w, -d,    -g / 2;
  // clang-format on
  const Eigen::Vector3d b(0, 0, -w / 2);
  const Eigen::Vector3d x = a.partialPivLu().solve(b);
  return x(0);
}

}  // namespace photocount
