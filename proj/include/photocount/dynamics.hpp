#pragma once

// Two-level atom states and the no-jump (conditional) propagators.
//
// Basis ordering is (|g>, |e>). The Hamiltonian in the frame rotating with
// the laser is H0 = -delta |e><e| + omega/2 (|e><g| + |g><e|), and the no-jump
// evolution uses H_eff = H0 - i gamma/2 |e><e|. The density-matrix propagator
// additionally keeps a fraction (1 - eta) of the recycling term
// gamma |g><e| rho |e><g>, which describes emissions the detector missed.

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "photocount/atom.hpp"

namespace photocount {

template <typename Scalar>
using Vector2c = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar>
using Matrix2c = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Vector4r = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Matrix4r = Eigen::Matrix<Scalar, 4, 4>;

/// Un-normalized pure state; the norm only shrinks under no-jump evolution.
template <typename Scalar = double>
struct PureState {
  Vector2c<Scalar> amplitudes = Vector2c<Scalar>(Scalar(1), Scalar(0));

  static PureState ground() { return {}; }

  std::complex<Scalar> c_g() const { return amplitudes(0); }
  std::complex<Scalar> c_e() const { return amplitudes(1); }
  Scalar norm2() const { return amplitudes.squaredNorm(); }
  Scalar excited_population() const { return std::norm(amplitudes(1)); }
};

/// Hermitian 2x2 density matrix stored as (rho_gg, rho_ee, Re rho_ge, Im rho_ge).
/// The trace may drop below one (un-normalized no-jump solution).
template <typename Scalar = double>
struct DensityMatrix {
  Vector4r<Scalar> components = Vector4r<Scalar>(Scalar(1), Scalar(0), Scalar(0), Scalar(0));

  static DensityMatrix ground() { return {}; }

  static DensityMatrix from_pure(const PureState<Scalar>& psi) {
    const std::complex<Scalar> ge = psi.c_g() * std::conj(psi.c_e());
    DensityMatrix rho;
    rho.components << std::norm(psi.c_g()), std::norm(psi.c_e()), ge.real(), ge.imag();
    return rho;
  }

  Scalar gg() const { return components(0); }
  Scalar ee() const { return components(1); }
  std::complex<Scalar> ge() const { return {components(2), components(3)}; }
  Scalar trace() const { return components(0) + components(1); }

  bool is_positive(Scalar tol) const {
    return gg() >= -tol && ee() >= -tol && std::norm(ge()) <= gg() * ee() + tol;
  }

  Matrix2c<Scalar> matrix() const {
    Matrix2c<Scalar> m;
    m << gg(), ge(), std::conj(ge()), ee();
    return m;
  }
};

template <typename Scalar = double>
Matrix2c<Scalar> effective_hamiltonian(const AtomParams& p) {
  using C = std::complex<Scalar>;
  const Scalar half_omega = Scalar(p.omega) / 2;
  Matrix2c<Scalar> h;
  h << C(0), C(half_omega), C(half_omega), C(-Scalar(p.delta), -Scalar(p.gamma) / 2);
  return h;
}

/// -i H_eff, so that d(psi)/dt = generator * psi.
template <typename Scalar = double>
Matrix2c<Scalar> pure_generator(const AtomParams& p) {
  return std::complex<Scalar>(0, -1) * effective_hamiltonian<Scalar>(p);
}

/// Generator of the conditional master equation acting on the component
/// vector (rho_gg, rho_ee, Re rho_ge, Im rho_ge). eta = 1 gives the pure
/// no-jump equation; eta -> 0 approaches the unconditional master equation.
template <typename Scalar = double>
Matrix4r<Scalar> density_generator(const AtomParams& p) {
  const Scalar w = p.omega, d = p.delta, g = p.gamma, e = p.eta;
  Matrix4r<Scalar> a;
  // clang-format off
  a << 0,     (1 - e) * g,  0,      -w,
       0,     -g,           0,       w,
       0,      0,          -g / 2,   d,
       w / 2, -w / 2,      -d,      -g / 2;
  // clang-format on
  return a;
}

/// One classical fourth-order Runge-Kutta step for dx/dt = f(x).
template <typename State, typename Derivative, typename Scalar>
State rk4_step(const Derivative& f, const State& x, Scalar h) {
  const State k1 = f(x);
  const State k2 = f(State(x + (h / 2) * k1));
  const State k3 = f(State(x + (h / 2) * k2));
  const State k4 = f(State(x + h * k3));
  return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Matrix of one RK4 step of the linear system dx/dt = A x. Applying it to a
/// state reproduces rk4_step exactly in exact arithmetic.
template <typename Derived>
typename Derived::PlainObject rk4_step_matrix(const Eigen::MatrixBase<Derived>& generator,
                                              typename Derived::RealScalar h) {
  using Plain = typename Derived::PlainObject;
  const Plain a = generator;
  const auto f = [&a](const Plain& x) -> Plain { return a * x; };
  return rk4_step(f, Plain(Plain::Identity(a.rows(), a.cols())), h);
}

namespace detail {

template <typename Scalar>
int substeps(Scalar dt, Scalar max_step) {
  if (!(dt > 0)) throw std::invalid_argument("propagation interval dt must be positive");
  return static_cast<int>(std::ceil(dt / max_step - Scalar(1e-12)));
}

}  // namespace detail

/// Evolves psi under H_eff for dt using fixed RK4 substeps no longer than
/// max_step (default_step(params) when max_step <= 0).
template <typename Scalar>
PureState<Scalar> nojump_propagate_pure(const PureState<Scalar>& psi, const AtomParams& params,
                                        Scalar dt, Scalar max_step = 0) {
  validate(params);
  if (max_step <= 0) max_step = Scalar(default_step(params));
  const int n = std::max(1, detail::substeps(dt, max_step));
  const Scalar h = dt / n;
  const Matrix2c<Scalar> a = pure_generator<Scalar>(params);
  const auto f = [&a](const Vector2c<Scalar>& x) -> Vector2c<Scalar> { return a * x; };
  PureState<Scalar> out = psi;
  for (int i = 0; i < n; ++i) out.amplitudes = rk4_step(f, out.amplitudes, h);
  return out;
}

/// Evolves rho under the conditional master equation (efficiency params.eta)
/// for dt with fixed RK4 substeps. d(trace)/dt = -eta gamma rho_ee.
template <typename Scalar>
DensityMatrix<Scalar> nojump_propagate_density(const DensityMatrix<Scalar>& rho,
                                               const AtomParams& params, Scalar dt,
                                               Scalar max_step = 0) {
  validate(params);
  if (max_step <= 0) max_step = Scalar(default_step(params));
  const int n = std::max(1, detail::substeps(dt, max_step));
  const Scalar h = dt / n;
  const Matrix4r<Scalar> a = density_generator<Scalar>(params);
  const auto f = [&a](const Vector4r<Scalar>& x) -> Vector4r<Scalar> { return a * x; };
  DensityMatrix<Scalar> out = rho;
  for (int i = 0; i < n; ++i) out.components = rk4_step(f, out.components, h);
  return out;
}

/// Exact propagator exp(-i H_eff tau) of the 2x2 no-jump problem, evaluated in
/// closed form. Used where many evaluations at arbitrary tau are needed.
class NoJumpExponential {
 public:
  explicit NoJumpExponential(const AtomParams& params);

  Matrix2c<double> operator()(double tau) const;

  /// State reached from |g> after tau.
  PureState<double> from_ground(double tau) const;

 private:
  Matrix2c<double> shifted_;  // generator - mu * I
  std::complex<double> mu_;
  std::complex<double> q_;  // q^2 = det-free part, Re(q) >= 0
};

/// rho~_ee(tau) from |g> on resonance, closed form including the overdamped
/// (omega < gamma/2) continuation. Throws std::invalid_argument if delta != 0.
double analytic_nojump_ee(double tau, const AtomParams& params);

/// Trace of the resonant no-jump solution from |g>, i.e. the probability of
/// no click in [0, tau] at unit efficiency. Throws if delta != 0.
double analytic_nojump_survival(double tau, const AtomParams& params);

/// Excited-state population of the stationary solution of the full master
/// equation, from an algebraic solve of the optical Bloch equations.
double steady_state_ee(const AtomParams& params);

}  // namespace photocount
