#include "photocount/atom.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace photocount {

void validate(const AtomParams& p) {
  if (!std::isfinite(p.omega) || !std::isfinite(p.delta) || !std::isfinite(p.gamma) ||
      !std::isfinite(p.eta)) {
    throw std::invalid_argument("atom parameters must be finite");
  }
  if (p.gamma <= 0.0) {
    throw std::invalid_argument(fmt::format("gamma must be positive (got {})", p.gamma));
  }
  if (p.eta <= 0.0 || p.eta > 1.0) {
    throw std::invalid_argument(fmt::format("eta must lie in (0, 1] (got {})", p.eta));
  }
  if (p.omega < 0.0) {
    throw std::invalid_argument(fmt::format("omega must be non-negative (got {})", p.omega));
  }
}

std::string_view to_string(Parameter theta) {
  switch (theta) {
    case Parameter::omega: return "omega";
    case Parameter::delta: return "delta";
  }
  return "?";
}

Parameter parse_parameter(std::string_view name) {
  if (name == "omega") return Parameter::omega;
  if (name == "delta") return Parameter::delta;
  throw std::invalid_argument(fmt::format("unknown parameter '{}' (expected omega or delta)", name));
}

double get(const AtomParams& params, Parameter theta) {
  return theta == Parameter::omega ? params.omega : params.delta;
}

AtomParams with(AtomParams params, Parameter theta, double value) {
  (theta == Parameter::omega ? params.omega : params.delta) = value;
  return params;
}

double fastest_frequency(const AtomParams& p) {
  return std::max(std::hypot(p.omega, p.delta), p.gamma);
}

double default_step(const AtomParams& p) {
  return 1e-3 / std::max({p.omega, std::abs(p.delta), p.gamma});
}

}  // namespace photocount
