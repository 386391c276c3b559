// photocount: simulate photon-counting records and analyze them.
//
// Exit status: 0 success, 1 usage/configuration/I-O error, 2 numerical
// failure (Richardson gate, trust region).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "output.hpp"
#include "photocount/bayes.hpp"
#include "photocount/estimator.hpp"
#include "photocount/fisher.hpp"
#include "photocount/record_io.hpp"
#include "photocount/trajectory.hpp"
#include "photocount/waiting_time.hpp"

namespace pc = photocount;
using pc::cli::Format;
using pc::cli::OutputFile;
using pc::cli::RunMeta;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string output;
  Format format = Format::csv;
  unsigned jobs = 1;
};

std::string num(double v) { return pc::format_double(v); }

/// Everything the user could have set on this subcommand, explicit or default,
/// in declaration order. Output location and worker count do not affect
/// results and are left out so that reruns compare byte for byte.
RunMeta collect_meta(const CLI::App& root, const CLI::App& sub, const std::string& format_name) {
  RunMeta meta;
  meta.command = sub.get_name();
  const auto add = [&meta, &format_name](const CLI::App& app) {
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_single_name();
      if (name == "help" || name == "version" || name == "config" || name == "output" || name == "jobs") {
        continue;
      }
      std::string value;
      if (name == "format") {
        value = format_name;
      } else if (opt->count() > 0) {
        const auto results = opt->reduced_results();
        for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
      } else {
        value = opt->get_default_str();
      }
      meta.config.emplace_back(name, value);
    }
  };
  add(root);
  add(sub);
  return meta;
}

std::vector<double> linear_range(const std::string& spec, std::size_t default_count) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() < 2 || parts.size() > 3) throw UsageError(fmt::format("range '{}' must be start:stop[:count]", spec));
  try {
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const std::size_t n = parts.size() == 3 ? std::stoul(parts[2]) : default_count;
    if (n < 2) throw UsageError(fmt::format("range '{}' needs at least two points", spec));
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
  } catch (const std::logic_error&) {
    throw UsageError(fmt::format("malformed range '{}'", spec));
  }
}

std::vector<std::size_t> parse_schedule(const std::string& spec) {
  try {
    if (spec.find(':') == std::string::npos) {
      std::vector<std::size_t> out;
      std::stringstream ss(spec);
      for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoul(item));
      return out;
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() < 3) throw UsageError("");
    const std::size_t first = std::stoul(parts[0]);
    const std::size_t last = std::stoul(parts[1]);
    if (parts[2] == "log") {
      const double density = parts.size() > 3 ? std::stod(parts[3]) : 10.0;
      return pc::log_schedule(first, last, density);
    }
    if (parts[2] == "lin" && parts.size() == 4) {
      const std::size_t n = std::stoul(parts[3]);
      if (n < 2 || last < first) throw UsageError("");
      std::vector<std::size_t> out;
      for (std::size_t k = 0; k < n; ++k) {
        out.push_back(first + static_cast<std::size_t>(std::llround(static_cast<double>(last - first) *
                                                                    static_cast<double>(k) /
                                                                    static_cast<double>(n - 1))));
      }
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    }
  } catch (const std::logic_error&) {
  } catch (const UsageError&) {
  }
  throw UsageError(fmt::format("schedule '{}' must be first:last:log[:per_decade], first:last:lin:count or a list", spec));
}

// Defaults are recorded at full precision so the metadata header reproduces
// the run exactly.
CLI::Option* add_real(CLI::App* sub, const std::string& name, double& value, const std::string& help) {
  return sub->add_option(name, value, help)->default_str(num(value));
}

CLI::Option* add_reals(CLI::App* sub, const std::string& name, std::vector<double>& values, const std::string& help) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) text += (i ? "," : "") + num(values[i]);
  return sub->add_option(name, values, help)->delimiter(',')->default_str(text);
}

void add_param_options(CLI::App* sub, pc::AtomParams& p) {
  add_real(sub, "--omega", p.omega, "Rabi frequency (units of gamma)");
  add_real(sub, "--delta", p.delta, "laser-atom detuning");
  add_real(sub, "--gamma", p.gamma, "decay rate; sets the time unit");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  pc::AtomParams params;
  double eta = 1.0;
  std::optional<double> duration;
  std::optional<std::size_t> clicks;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
};

int run_simulate(const SimulateArgs& a, const Common& common, const RunMeta& meta) {
  if (a.duration.has_value() == a.clicks.has_value()) throw UsageError("give exactly one of --duration and --clicks");
  if (!(a.eta > 0 && a.eta <= 1)) throw UsageError("--eta must lie in (0, 1]");
  pc::StopCondition stop = pc::StopAfterDuration{0.0};
  if (a.duration) {
    stop = pc::StopAfterDuration{*a.duration};
  } else {
    if (a.params.omega == 0) throw UsageError("an undriven atom never reaches a click count; use --duration");
    stop = pc::StopAfterClicks{*a.clicks};
  }
  pc::ClickRecord record = pc::simulate_record(a.params, stop, a.seed, a.stream);
  if (a.eta < 1) record = pc::thin_record(record, a.eta, a.seed);
  if (a.params.omega == 0) std::cerr << "warning: omega = 0, the atom is not driven and the record is empty\n";

  OutputFile out(pc::cli::resolve_output(common.output, "record", common.format));
  if (common.format == Format::json) {
    nlohmann::json j = pc::to_json(record);
    j["meta"] = meta.to_json();
    out.stream() << j.dump(2) << '\n';
  } else {
    meta.write_csv(out.stream());
    pc::write_record_csv(out.stream(), record);
  }
  out.commit();

  std::ostream& log = out.path() == "-" ? std::cerr : std::cout;
  const double rate = record.duration > 0 ? static_cast<double>(record.size()) / record.duration : 0.0;
  log << fmt::format("clicks={} duration={} rate={} expected_rate={}\n", record.size(), num(record.duration),
                     num(rate), num(pc::wtd_tail_rate(record.params)));
  return 0;
}

// ---------------------------------------------------------------- wtd

struct WtdArgs {
  pc::AtomParams params;
  std::vector<double> etas{1.0};
  double mass_target = 1.0 - 1e-10;
  double dt = 0.0;
  std::string method = "numeric";
};

int run_wtd(const WtdArgs& a, const Common& common, const RunMeta& meta) {
  const auto base_path = pc::cli::resolve_output(common.output, "wtd", common.format);
  for (const double eta : a.etas) {
    pc::AtomParams p = a.params;
    p.eta = eta;
    pc::GridOptions options;
    options.mass_target = a.mass_target;
    options.integrator_step = a.dt;
    const pc::TauGrid grid = pc::choose_grid(p, options);
    const pc::WaitingTimeTable table =
        a.method == "analytic" ? pc::wtd_analytic(p, grid) : pc::wtd_numeric(p, grid, a.dt);

    const nlohmann::json info = {{"params", pc::to_json(p)},
                                 {"dtau", table.grid.step},
                                 {"tau_max", table.grid.max()},
                                 {"points", table.grid.points},
                                 {"mass", table.mass},
                                 {"eps_trunc", 1.0 - a.mass_target},
                                 {"tail_mass", table.tail_mass},
                                 {"tail_rate", pc::wtd_tail_rate(p)}};
    const auto path = a.etas.size() > 1 ? pc::cli::tagged_path(base_path, "eta" + fmt::format("{}", eta)) : base_path;
    OutputFile out(path);
    if (common.format == Format::json) {
      nlohmann::json j = {{"meta", meta.to_json()}, {"table", info}};
      j["table"]["tau"] = std::vector<double>(table.grid.points);
      for (std::size_t k = 0; k < table.grid.points; ++k) j["table"]["tau"][k] = table.grid.tau(k);
      j["table"]["w"] = std::vector<double>(table.w.begin(), table.w.end());
      out.stream() << j.dump() << '\n';
    } else {
      meta.write_csv(out.stream());
      out.stream() << "# table=" << info.dump() << '\n';
      out.stream() << "tau,w\n";
      for (std::size_t k = 0; k < table.grid.points; ++k) {
        out.stream() << num(table.grid.tau(k)) << ',' << num(table.w(static_cast<Eigen::Index>(k))) << '\n';
      }
    }
    out.commit();
    std::ostream& log = path == "-" ? std::cerr : std::cout;
    log << fmt::format("eta={} points={} dtau={} tau_max={} mass={} tail_rate={}\n", num(eta), table.grid.points,
                       num(table.grid.step), num(table.grid.max()), num(table.mass), num(pc::wtd_tail_rate(p)));
  }
  return 0;
}

// ---------------------------------------------------------------- fisher

struct FisherArgs {
  std::string theta = "omega";
  std::vector<double> omegas;
  std::vector<double> deltas{0.0};
  std::string delta_range;
  std::size_t range_points = 81;
  std::vector<double> etas{1.0};
  double gamma = 1.0;
  double h = 0.0;
  double mass_target = 1.0 - 1e-10;
  bool no_richardson = false;
};

int run_fisher(const FisherArgs& a, const Common& common, const RunMeta& meta) {
  if (a.omegas.empty()) throw UsageError("--omega needs at least one value");
  const pc::Parameter theta = pc::parse_parameter(a.theta);
  pc::ScanAxes axes;
  axes.omegas = a.omegas;
  axes.deltas = a.delta_range.empty() ? a.deltas : linear_range(a.delta_range, a.range_points);
  axes.etas = a.etas;
  pc::FisherOptions options;
  options.h = a.h;
  options.grid.mass_target = a.mass_target;
  options.richardson_check = !a.no_richardson;
  pc::AtomParams base;
  base.gamma = a.gamma;
  const pc::FisherScan table = pc::scan(base, theta, axes, options, common.jobs);

  const auto violations = pc::eta_monotonicity_violations(table);
  const double asymmetry = pc::delta_asymmetry(table);
  std::size_t failed = 0;
  for (const auto& row : table.rows) {
    if (!row.result) {
      ++failed;
      std::cerr << fmt::format("error: omega={} delta={} eta={}: {}\n", num(row.params.omega), num(row.params.delta),
                               num(row.params.eta), row.error);
    }
  }
  for (const auto& v : violations) std::cerr << "warning: a(eta) not monotone: " << v << '\n';

  OutputFile out(pc::cli::resolve_output(common.output, "fisher", common.format));
  const double nan = std::nan("");
  if (common.format == Format::json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
      nlohmann::json r = {{"omega", row.params.omega}, {"delta", row.params.delta}, {"eta", row.params.eta},
                          {"status", row.result ? "ok" : "failed"}};
      if (row.result) {
        r["f_per_photon"] = row.result->f_per_photon;
        r["f_per_time"] = row.result->f_per_time;
        r["a"] = row.result->a;
        r["grid_points"] = row.result->diagnostics.grid_points;
        r["h"] = row.result->diagnostics.h;
        r["tail_mass"] = row.result->diagnostics.tail_mass;
      } else {
        r["error"] = row.error;
      }
      rows.push_back(r);
    }
    const nlohmann::json j = {{"meta", meta.to_json()},
                              {"theta", a.theta},
                              {"diagnostics", {{"eta_monotone", violations.empty()}, {"delta_asymmetry", asymmetry}}},
                              {"rows", rows}};
    out.stream() << j.dump(2) << '\n';
  } else {
    meta.write_csv(out.stream());
    out.stream() << "# diagnostics.eta_monotone=" << (violations.empty() ? "yes" : "no") << '\n';
    out.stream() << "# diagnostics.delta_asymmetry=" << num(asymmetry) << '\n';
    const bool by_delta = theta == pc::Parameter::delta;
    out.stream() << (by_delta ? "delta,omega,f_per_photon,eta,a,f_per_time,status\n"
                              : "omega,eta,a,f_per_photon,f_per_time,delta,status\n");
    for (const auto& row : table.rows) {
      const double f = row.result ? row.result->f_per_photon : nan;
      const double ft = row.result ? row.result->f_per_time : nan;
      const double av = row.result ? row.result->a : nan;
      const char* status = row.result ? "ok" : "failed";
      if (by_delta) {
        out.stream() << fmt::format("{},{},{},{},{},{},{}\n", num(row.params.delta), num(row.params.omega), num(f),
                                    num(row.params.eta), num(av), num(ft), status);
      } else {
        out.stream() << fmt::format("{},{},{},{},{},{},{}\n", num(row.params.omega), num(row.params.eta), num(av),
                                    num(f), num(ft), num(row.params.delta), status);
      }
    }
  }
  out.commit();

  std::ostream& log = out.path() == "-" ? std::cerr : std::cout;
  if (table.rows.size() == 1 && table.rows.front().result) {
    const auto& r = *table.rows.front().result;
    log << fmt::format("f_per_photon={} f_per_time={} a={}\n", num(r.f_per_photon), num(r.f_per_time), num(r.a));
  } else {
    log << fmt::format("rows={} failed={}\n", table.rows.size(), failed);
  }
  return failed > 0 ? 2 : 0;
}

// ---------------------------------------------------------------- bayes

struct BayesArgs {
  std::string record;
  std::string theta = "omega";
  std::vector<double> candidates;
  std::string candidate_range;
  std::size_t range_points = 201;
  std::string method = "wtd";
  double dt = 1e-3;
  double snapshot = 0.1;
  std::string layout = "auto";
  bool no_open_interval = false;
  double interpolation_tolerance = 1e-6;
};

struct PosteriorRow {
  double t;
  Eigen::ArrayXd p;
};

int run_bayes(const BayesArgs& a, const Common& common, const RunMeta& meta) {
  const pc::ClickRecord record = pc::load_record(a.record);
  const pc::Parameter theta = pc::parse_parameter(a.theta);
  std::vector<double> candidates = a.candidate_range.empty() ? a.candidates : linear_range(a.candidate_range, a.range_points);
  if (candidates.empty()) throw UsageError("give --candidates or --candidate-range");

  std::vector<PosteriorRow> rows;
  pc::LikelihoodGrid prior = pc::init_grid(record.params, theta, candidates);
  rows.push_back({0.0, pc::posterior(prior)});
  if (a.method == "dt") {
    double next_snapshot = a.snapshot;
    std::size_t seen = 0;
    pc::filter_record(prior, record, a.dt, [&](const pc::LikelihoodGrid& g) {
      bool clicked = false;
      while (seen < record.size() && record.times[seen] <= g.t_now) {
        ++seen;
        clicked = true;
      }
      const bool last = g.t_now >= record.duration;
      if (clicked || last || g.t_now >= next_snapshot - 1e-12) {
        rows.push_back({g.t_now, pc::posterior(g)});
        while (next_snapshot <= g.t_now + 1e-12) next_snapshot += a.snapshot;
      }
    });
  } else {
    pc::TableOptions options;
    options.interpolation_tolerance = a.interpolation_tolerance;
    options.jobs = common.jobs;
    const pc::WaitingTimes taus = pc::waiting_times(record);
    const Eigen::MatrixXd cumulative = pc::cumulative_loglik(taus, record.params, theta, candidates, options);
    for (Eigen::Index k = 0; k < cumulative.rows(); ++k) {
      pc::LikelihoodGrid g = prior;
      g.log_weights += cumulative.row(k).transpose().array();
      rows.push_back({record.times[static_cast<std::size_t>(k)], pc::posterior(g)});
    }
    if (!a.no_open_interval && pc::open_interval(record) > 0) {
      const pc::LikelihoodGrid g = pc::loglik_record(record, theta, candidates, true, options);
      rows.push_back({record.duration, pc::posterior(g)});
    }
  }

  const bool wide = a.layout == "wide" || (a.layout == "auto" && candidates.size() <= 10);
  OutputFile out(pc::cli::resolve_output(common.output, "posterior", common.format));
  if (common.format == Format::json) {
    nlohmann::json j = {{"meta", meta.to_json()}, {"theta", a.theta}, {"candidates", candidates}};
    j["t"] = nlohmann::json::array();
    j["posterior"] = nlohmann::json::array();
    for (const auto& row : rows) {
      j["t"].push_back(row.t);
      j["posterior"].push_back(std::vector<double>(row.p.begin(), row.p.end()));
    }
    out.stream() << j.dump() << '\n';
  } else {
    meta.write_csv(out.stream());
    if (wide) {
      out.stream() << 't';
      for (const double c : candidates) out.stream() << ",p_" << num(c);
      out.stream() << '\n';
      for (const auto& row : rows) {
        out.stream() << num(row.t);
        for (const double v : row.p) out.stream() << ',' << num(v);
        out.stream() << '\n';
      }
    } else {
      out.stream() << "t," << a.theta << ",posterior\n";
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          out.stream() << num(row.t) << ',' << num(candidates[i]) << ','
                       << num(row.p(static_cast<Eigen::Index>(i))) << '\n';
        }
      }
    }
  }
  out.commit();

  Eigen::Index best = 0;
  const double mass = rows.back().p.maxCoeff(&best);
  std::ostream& log = out.path() == "-" ? std::cerr : std::cout;
  log << fmt::format("clicks={} argmax={} posterior={}\n", record.size(), num(candidates[static_cast<std::size_t>(best)]),
                     num(mass));
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string record;
  std::string theta = "omega";
  std::optional<double> theta0;
  std::string schedule = "100:10000:log";
  std::size_t init_clicks = 100;
  double init_width = 0.2;
  std::size_t init_candidates = 121;
  double trust_region = 0.1;
  double h = 0.0;
  double w_floor = 1e-9;
  std::string gain_dump;
};

int run_estimate(const EstimateArgs& a, const Common& common, const RunMeta& meta) {
  const pc::ClickRecord record = pc::load_record(a.record);
  const pc::Parameter theta = pc::parse_parameter(a.theta);
  const pc::WaitingTimes taus = pc::waiting_times(record);
  if (taus.taus.empty()) throw UsageError("record has no clicks");
  const std::vector<std::size_t> schedule = parse_schedule(a.schedule);
  if (!schedule.empty() && schedule.back() > taus.taus.size()) {
    throw UsageError(fmt::format("schedule needs {} waiting times but the record has {}", schedule.back(),
                                 taus.taus.size()));
  }
  const double theta0 = a.theta0.value_or(pc::get(record.params, theta));
  double start = theta0;
  if (a.init_clicks > 0) {
    pc::InitialGuessOptions init;
    init.clicks = a.init_clicks;
    init.relative_width = a.init_width;
    init.candidates = a.init_candidates;
    start = pc::initial_guess(taus, record.params, theta, theta0, init);
  }
  pc::EstimatorOptions options;
  options.h = a.h;
  options.w_floor = a.w_floor;
  options.trust_region = a.trust_region;
  const pc::EstimateTrace trace = pc::estimate_trace(taus, record.params, theta, start, schedule, options);

  OutputFile out(pc::cli::resolve_output(common.output, "estimate", common.format));
  if (common.format == Format::json) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : trace.points) {
      points.push_back({{"n", p.n_used},
                        {"theta_hat", p.theta_hat},
                        {"sigma_crb", p.sigma_crb},
                        {"delta_theta", p.delta_theta},
                        {"trust_clipped", p.trust_clipped}});
    }
    const nlohmann::json j = {{"meta", meta.to_json()},          {"theta", a.theta},
                              {"theta_initial", trace.theta_initial}, {"nonlinear", trace.nonlinear},
                              {"trace", points}};
    out.stream() << j.dump(2) << '\n';
  } else {
    meta.write_csv(out.stream());
    out.stream() << "# theta_initial=" << num(trace.theta_initial) << '\n';
    out.stream() << "N,theta_hat,sigma_crb,delta_theta,trust_clipped\n";
    for (const auto& p : trace.points) {
      out.stream() << fmt::format("{},{},{},{},{}\n", p.n_used, num(p.theta_hat), num(p.sigma_crb),
                                  num(p.delta_theta), p.trust_clipped ? 1 : 0);
    }
  }
  out.commit();

  if (!a.gain_dump.empty()) {
    const auto& last = trace.points.back();
    const std::vector<double> head(taus.taus.begin(), taus.taus.begin() + static_cast<long>(last.n_used));
    const double reach = *std::max_element(head.begin(), head.end());
    const pc::GainFunction gain = pc::gain_at(pc::with(record.params, theta, last.theta_hat), theta,
                                              static_cast<double>(last.n_used), reach, options);
    OutputFile dump(a.gain_dump);
    meta.write_csv(dump.stream());
    dump.stream() << "# C=" << num(gain.C) << '\n' << "tau,g\n";
    for (Eigen::Index j = 0; j < gain.g.size(); ++j) {
      dump.stream() << num((static_cast<double>(j) + 0.5) * gain.grid.step) << ',' << num(gain.g(j)) << '\n';
    }
    dump.commit();
  }

  const auto& last = trace.points.back();
  std::ostream& log = out.path() == "-" ? std::cerr : std::cout;
  log << fmt::format("N={} theta_hat={} sigma_crb={}\n", last.n_used, num(last.theta_hat), num(last.sigma_crb));
  if (trace.nonlinear) {
    std::cerr << "warning: an update exceeded the trust region; the linear estimator may not be valid here\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-counting records of a driven two-level emitter: simulation, waiting-time "
               "distributions, Fisher information and estimators."};
  app.set_version_flag("--version", PHOTOCOUNT_VERSION);
  app.set_config("--config", "", "flat key=value configuration file; [subcommand] sections allowed");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  Common common;
  std::string format = "csv";
  app.add_option("-o,--output", common.output, "output file ('-' for stdout); default in $PHOTOCOUNT_OUTPUT_DIR");
  auto* format_opt = app.add_option("--format", format, "output format; defaults to the output extension, else csv")
                         ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", common.jobs, "worker threads for scans")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a click record");
  simulate->fallthrough();
  add_param_options(simulate, sim.params);
  add_real(simulate, "--eta", sim.eta, "detector efficiency, applied by thinning");
  simulate->add_option("--duration", sim.duration, "stop after this time");
  simulate->add_option("--clicks", sim.clicks, "stop after this many clicks");
  simulate->add_option("--seed", sim.seed, "64-bit RNG seed");
  simulate->add_option("--stream", sim.stream, "RNG substream (trajectory index)");

  WtdArgs wtd;
  auto* wtd_cmd = app.add_subcommand("wtd", "tabulate the waiting-time distribution");
  wtd_cmd->fallthrough();
  add_param_options(wtd_cmd, wtd.params);
  add_reals(wtd_cmd, "--eta", wtd.etas, "detector efficiencies; one table each");
  add_real(wtd_cmd, "--mass-target", wtd.mass_target, "probability mass inside the grid");
  add_real(wtd_cmd, "--dt", wtd.dt, "RK4 step cap (0: default)");
  wtd_cmd->add_option("--method", wtd.method, "table source")->check(CLI::IsMember({"numeric", "analytic"}));

  FisherArgs fis;
  auto* fisher = app.add_subcommand("fisher", "Fisher information and scaled uncertainty scans");
  fisher->fallthrough();
  fisher->add_option("--theta", fis.theta, "parameter under estimation")->check(CLI::IsMember({"omega", "delta"}));
  add_reals(fisher, "--omega", fis.omegas, "Rabi frequencies")->required();
  add_reals(fisher, "--delta", fis.deltas, "detunings");
  fisher->add_option("--delta-range", fis.delta_range, "detuning range start:stop[:count]");
  fisher->add_option("--range-points", fis.range_points, "default count for --delta-range");
  add_reals(fisher, "--eta", fis.etas, "detector efficiencies");
  add_real(fisher, "--gamma", fis.gamma, "decay rate");
  add_real(fisher, "--fd-step", fis.h, "central-difference step (0: default)");
  add_real(fisher, "--mass-target", fis.mass_target, "probability mass inside the grid");
  fisher->add_flag("--no-richardson", fis.no_richardson, "skip the h versus h/2 check");

  BayesArgs bay;
  auto* bayes = app.add_subcommand("bayes", "posterior over candidate values for a record");
  bayes->fallthrough();
  bayes->add_option("record,--record", bay.record, "record file (.csv or .json)")->required()->check(CLI::ExistingFile);
  bayes->add_option("--theta", bay.theta, "parameter under estimation")->check(CLI::IsMember({"omega", "delta"}));
  add_reals(bayes, "--candidates", bay.candidates, "candidate values");
  bayes->add_option("--candidate-range", bay.candidate_range, "candidate grid start:stop[:count]");
  bayes->add_option("--range-points", bay.range_points, "default count for --candidate-range");
  bayes->add_option("--method", bay.method, "likelihood evaluation")->check(CLI::IsMember({"wtd", "dt"}));
  add_real(bayes, "--dt", bay.dt, "filter step for --method dt");
  add_real(bayes, "--snapshot", bay.snapshot, "output interval for --method dt");
  bayes->add_option("--layout", bay.layout, "CSV layout")->check(CLI::IsMember({"auto", "wide", "long"}));
  bayes->add_flag("--no-open-interval", bay.no_open_interval, "ignore the interval after the last click");
  add_real(bayes, "--interpolation-tolerance", bay.interpolation_tolerance, "relative accuracy of w lookups");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "iterated linear estimator trace for a record");
  estimate->fallthrough();
  estimate->add_option("record,--record", est.record, "record file (.csv or .json)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--theta", est.theta, "parameter under estimation")->check(CLI::IsMember({"omega", "delta"}));
  estimate->add_option("--theta0", est.theta0, "centre of the initial search (default: record value)");
  estimate->add_option("--schedule", est.schedule, "click counts: first:last:log[:per_decade], first:last:lin:n or a list");
  estimate->add_option("--init-clicks", est.init_clicks, "clicks for the initial grid search (0: start at theta0)");
  add_real(estimate, "--init-width", est.init_width, "relative half-width of the initial search");
  estimate->add_option("--init-candidates", est.init_candidates, "candidates in the initial search");
  add_real(estimate, "--trust-region", est.trust_region, "largest relative update");
  add_real(estimate, "--fd-step", est.h, "central-difference step (0: default)");
  add_real(estimate, "--w-floor", est.w_floor, "relative density below which bins are ignored");
  estimate->add_option("--gain-dump", est.gain_dump, "also write the final gain function (tau, g)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (format_opt->count() == 0 && std::filesystem::path(common.output).extension() == ".json") format = "json";
  common.format = format == "json" ? Format::json : Format::csv;

  try {
    if (simulate->parsed()) return run_simulate(sim, common, collect_meta(app, *simulate, format));
    if (wtd_cmd->parsed()) return run_wtd(wtd, common, collect_meta(app, *wtd_cmd, format));
    if (fisher->parsed()) return run_fisher(fis, common, collect_meta(app, *fisher, format));
    if (bayes->parsed()) return run_bayes(bay, common, collect_meta(app, *bayes, format));
    if (estimate->parsed()) return run_estimate(est, common, collect_meta(app, *estimate, format));
  } catch (const pc::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
