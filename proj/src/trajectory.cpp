#include "photocount/trajectory.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace photocount {

TrajectorySimulator::TrajectorySimulator(const AtomParams& params, std::uint64_t seed,
                                         std::uint64_t stream, SimulationOptions options)
    : params_(params), rng_(seed, stream), options_(options), propagator_(params) {
  if (params.eta != 1.0) {
    throw std::invalid_argument("trajectories are simulated at unit efficiency; use thin_record");
  }
}

// Smallest tau in (0, horizon_interval] with |psi(tau)|^2 = threshold, or
// +inf when the norm stays above threshold over the whole interval. The norm
// is monotone, so doubling brackets the crossing and bisection refines it.
double TrajectorySimulator::locate(double threshold, double horizon_interval) {
  const auto norm2 = [this](double tau) { return propagator_.from_ground(tau).norm2(); };
  if (std::isfinite(horizon_interval) && norm2(horizon_interval) > threshold) {
    return std::numeric_limits<double>::infinity();
  }
  double lo = 0.0;
  double hi = options_.bracket_fraction / fastest_frequency(params_);
  while (norm2(hi) > threshold) {
    lo = hi;
    hi *= 2;
    if (hi > horizon_interval) {
      hi = horizon_interval;
      break;
    }
    if (hi > 1e15 / params_.gamma) {
      throw NumericalFailure("no click within 1e15/gamma; is the atom driven?");
    }
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double value = norm2(mid);
    if (std::abs(value - threshold) < options_.norm_tolerance) return mid;
    (value > threshold ? lo : hi) = mid;
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> TrajectorySimulator::next_click(double horizon) {
  if (!(horizon > time_)) {
    throw std::invalid_argument("horizon must lie after the current simulation time");
  }
  if (!pending_threshold_) {
    pending_threshold_ = rng_.uniform();
    reset_time_ = time_;
  }
  const double tau = locate(*pending_threshold_, horizon - reset_time_);
  if (!std::isfinite(tau)) {
    time_ = horizon;
    state_ = propagator_.from_ground(horizon - reset_time_);
    return std::nullopt;
  }
  time_ = reset_time_ + tau;
  state_ = PureState<double>::ground();
  pending_threshold_.reset();
  return time_;
}

ClickRecord simulate_record(const AtomParams& params, const StopCondition& stop, std::uint64_t seed,
                            std::uint64_t stream, SimulationOptions options) {
  validate(params);
  ClickRecord record;
  record.params = params;
  record.seed = seed;
  record.stream = stream;
  TrajectorySimulator sim(params, seed, stream, options);

  if (const auto* by_time = std::get_if<StopAfterDuration>(&stop)) {
    if (!(by_time->duration > 0)) throw std::invalid_argument("duration must be positive");
    record.duration = by_time->duration;
    if (params.omega == 0.0) return record;
    while (const auto t = sim.next_click(by_time->duration)) record.times.push_back(*t);
    return record;
  }

  const auto clicks = std::get<StopAfterClicks>(stop).clicks;
  if (clicks < 1) throw std::invalid_argument("click count must be at least 1");
  if (steady_state_ee(params) == 0.0) {
    throw std::invalid_argument("an undriven atom never emits; cannot stop on click count");
  }
  record.times.reserve(clicks);
  const double never = std::numeric_limits<double>::infinity();
  while (record.times.size() < clicks) record.times.push_back(*sim.next_click(never));
  record.duration = record.times.back();
  return record;
}

ClickRecord thin_record(const ClickRecord& record, double eta, std::uint64_t seed) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw std::invalid_argument(fmt::format("thinning efficiency must lie in (0, 1] (got {})", eta));
  }
  ClickRecord out = record;
  out.params.eta = record.params.eta * eta;
  out.thinning_seed = seed;
  out.times.clear();
  Philox4x32 rng(seed, Philox4x32::kThinningStreamBit | record.stream);
  for (const double t : record.times) {
    if (rng.uniform() < eta) out.times.push_back(t);
  }
  return out;
}

WaitingTimes waiting_times(const ClickRecord& record) {
  WaitingTimes out;
  out.taus.reserve(record.size());
  double previous = 0.0;
  for (const double t : record.times) {
    out.taus.push_back(t - previous);
    previous = t;
  }
  return out;
}

double open_interval(const ClickRecord& record) {
  return record.duration - (record.empty() ? 0.0 : record.times.back());
}

}  // namespace photocount
