#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "photocount/atom.hpp"
#include "photocount/dynamics.hpp"
#include "photocount/rng.hpp"

namespace photocount {

/// Detection timestamps (units of 1/gamma) with the metadata needed to
/// regenerate them. times are strictly increasing and lie in (0, duration].
struct ClickRecord {
  std::vector<double> times;
  double duration = 0.0;
  AtomParams params;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<std::uint64_t> thinning_seed;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

/// Inter-click intervals; the first is measured from t = 0.
struct WaitingTimes {
  std::vector<double> taus;
};

struct StopAfterDuration {
  double duration;
};
struct StopAfterClicks {
  std::size_t clicks;
};
using StopCondition = std::variant<StopAfterDuration, StopAfterClicks>;

struct SimulationOptions {
  /// Target accuracy of |psi|^2 - r at the located click.
  double norm_tolerance = 1e-10;
  /// Initial bracketing interval in units of 1/fastest_frequency.
  double bracket_fraction = 0.25;
};

/// Integrate-and-fire quantum-jump simulator at unit efficiency: draws
/// r ~ U(0,1), evolves the un-normalized state from |g> until |psi|^2 = r,
/// emits a click and resets to |g>.
class TrajectorySimulator {
 public:
  TrajectorySimulator(const AtomParams& params, std::uint64_t seed, std::uint64_t stream,
                      SimulationOptions options = {});

  /// Advances to the next click and returns its time, or std::nullopt if
  /// none occurs at or before horizon (time() is then horizon).
  std::optional<double> next_click(double horizon);

  double time() const { return time_; }
  /// Un-normalized conditional state at time().
  const PureState<double>& state() const { return state_; }

 private:
  double locate(double threshold, double horizon_interval);

  AtomParams params_;
  Philox4x32 rng_;
  SimulationOptions options_;
  NoJumpExponential propagator_;
  double time_ = 0.0;
  double reset_time_ = 0.0;  // time of the last click (or 0)
  PureState<double> state_;
  std::optional<double> pending_threshold_;
};

/// Simulates a unit-efficiency record. params.eta must be 1; finite
/// efficiency records are produced with thin_record.
ClickRecord simulate_record(const AtomParams& params, const StopCondition& stop, std::uint64_t seed,
                            std::uint64_t stream = 0, SimulationOptions options = {});

/// Keeps each click independently with probability eta. The result's
/// params.eta is the product of the source efficiency and eta.
ClickRecord thin_record(const ClickRecord& record, double eta, std::uint64_t seed);

WaitingTimes waiting_times(const ClickRecord& record);

/// Length of the trailing interval after the last click (the whole duration
/// for an empty record).
double open_interval(const ClickRecord& record);

}  // namespace photocount
