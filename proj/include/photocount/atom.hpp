#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace photocount {

/// Thrown when a numerical safeguard trips (Richardson gate, trust region,
/// grid budget). Precondition violations use std::invalid_argument.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical parameters of the driven two-level emitter. Frequencies are in
/// units of the decay rate; gamma sets the time unit and defaults to 1.
struct AtomParams {
  double omega = 0.0;  // Rabi frequency
  double delta = 0.0;  // laser-atom detuning
  double gamma = 1.0;  // spontaneous decay rate
  double eta = 1.0;    // detector efficiency

  friend bool operator==(const AtomParams&, const AtomParams&) = default;
};

/// Throws std::invalid_argument unless gamma > 0, 0 < eta <= 1, omega >= 0
/// and all fields are finite.
void validate(const AtomParams& params);

/// Scalar parameter under estimation.
enum class Parameter { omega, delta };

std::string_view to_string(Parameter theta);
Parameter parse_parameter(std::string_view name);

double get(const AtomParams& params, Parameter theta);
AtomParams with(AtomParams params, Parameter theta, double value);

/// max(sqrt(omega^2 + delta^2), gamma): the fastest rate in the no-jump dynamics.
double fastest_frequency(const AtomParams& params);

/// Default fixed RK4 step, 1e-3 / max(omega, |delta|, gamma).
double default_step(const AtomParams& params);

}  // namespace photocount
