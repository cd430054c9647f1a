#pragma once

// Command-line front end: subcommands solve, zero-mass, sweep, thresholds and
// selftest. Options can also come from an INI file (--config) with one
// section per subcommand; flags given on the command line win.
//
// Exit codes: 0 success, 1 configuration error, 2 solver failure or
// non-convergence.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"

#include "kgm/continuation.hpp"
#include "kgm/error.hpp"
#include "kgm/io.hpp"
#include "kgm/model.hpp"
#include "kgm/selftest.hpp"
#include "kgm/solver.hpp"
#include "kgm/sweep.hpp"
#include "kgm/thresholds.hpp"

namespace kgm::cli {

enum Exit : int { kOk = 0, kConfigError = 1, kSolverFailure = 2 };

struct GridArgs {
  int n = 4000;
  double r_max = 50.0;
  std::string boundary = "coulomb";
  bool operator==(const GridArgs&) const = default;
};

struct SolverArgs {
  std::string method = "mountain-pass";
  int max_iters = 3000;
  double grad_tol = 1e-6;
  int path_points = 16;
  double amplitude = 2.0;
  double width = 2.0;
  double delta = 0.5;
  bool operator==(const SolverArgs&) const = default;
};

struct SolveConfig {
  std::optional<double> p;
  double m = 1.0;
  double omega = 0.5;
  double e = 1.0;
  double lambda = 1.0;
  bool force = false;
  GridArgs grid;
  SolverArgs solver;
  std::string out = "out/solve";
  bool operator==(const SolveConfig&) const = default;
};

struct ZeroMassConfig {
  double p = 5.0;
  double q = 7.0;
  std::optional<double> alpha;  ///< defaults to p
  double m = 1.0;
  double e = 1.0;
  double eps0 = 1.0;
  int steps = 13;
  bool limit = true;
  GridArgs grid;
  SolverArgs solver;
  std::string out = "out/zero-mass";
  bool operator==(const ZeroMassConfig&) const = default;
};

struct SweepConfig {
  std::string p_range = "2.05:3.95:0.05";
  std::string ratio_range = "0.05:1.0:0.05";
  int solve_sample = 0;
  double m = 1.0;
  double e = 1.0;
  GridArgs grid{2000, 50.0, "coulomb"};
  SolverArgs solver;
  std::string out = "out/sweep";
  bool operator==(const SweepConfig&) const = default;
};

struct ThresholdsConfig {
  std::optional<double> p;
  double m = 1.0;
  double omega = 0.5;
  std::string out;
  bool operator==(const ThresholdsConfig&) const = default;
};

struct SelftestConfig {
  bool quick = false;
  std::string sabotage;
  bool operator==(const SelftestConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 42;
  SolveConfig solve;
  ZeroMassConfig zero_mass;
  SweepConfig sweep;
  ThresholdsConfig thresholds;
  SelftestConfig selftest;
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

/// Shortest decimal that reads back as the same double.
inline std::string shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string ini_value(double v) { return shortest(v); }
inline std::string ini_value(int v) { return std::to_string(v); }
inline std::string ini_value(std::uint64_t v) { return std::to_string(v); }
inline std::string ini_value(bool v) { return v ? "true" : "false"; }
inline std::string ini_value(const std::string& v) { return '"' + v + '"'; }

}  // namespace detail

/// Remembers, for every bound option, how to print its current value, so a
/// configuration can be written back as INI text.
class ConfigWriter {
 public:
  template <class T>
  void record(const std::string& section, const std::string& key, const T& var) {
    entries_.push_back({section, key, [&var]() -> std::optional<std::string> {
                          if constexpr (std::is_same_v<T, std::optional<double>>) {
                            if (!var) return std::nullopt;
                            return detail::ini_value(*var);
                          } else {
                            return detail::ini_value(var);
                          }
                        }});
  }

  std::string str() const {
    std::ostringstream os;
    std::string current;
    for (const auto& e : entries_) {
      const auto value = e.value();
      if (!value) continue;
      if (e.section != current) {
        os << "\n[" << e.section << "]\n";
        current = e.section;
      }
      os << e.key << '=' << *value << '\n';
    }
    return os.str();
  }

 private:
  struct Entry {
    std::string section;
    std::string key;
    std::function<std::optional<std::string>()> value;
  };
  std::vector<Entry> entries_;
};

namespace detail {

/// add_option plus registration with the writer; the INI key is the long
/// flag name without dashes.
template <class T>
CLI::Option* bind_option(CLI::App* app, ConfigWriter* writer, const std::string& flag, T& var,
                  const std::string& help = "") {
  CLI::Option* opt = app->add_option(flag, var, help);
  if constexpr (!std::is_same_v<T, std::optional<double>>) opt->capture_default_str();
  if (writer) writer->record(app->get_parent() ? app->get_name() : std::string(), flag.substr(2), var);
  return opt;
}

inline CLI::Option* bind_flag(CLI::App* app, ConfigWriter* writer, const std::string& flag, bool& var,
                              const std::string& help = "") {
  CLI::Option* opt = app->add_flag(flag, var, help);
  if (writer) writer->record(app->get_parent() ? app->get_name() : std::string(), flag.substr(2), var);
  return opt;
}

inline void add_grid(CLI::App* sub, ConfigWriter* w, GridArgs& g) {
  bind_option(sub, w, "--n", g.n, "grid nodes")->check(CLI::Range(16, 100000000));
  bind_option(sub, w, "--rmax", g.r_max, "truncation radius")->check(CLI::PositiveNumber);
  bind_option(sub, w, "--boundary", g.boundary, "outer condition for phi")
      ->check(CLI::IsMember({"coulomb", "dirichlet"}));
}

inline void add_solver(CLI::App* sub, ConfigWriter* w, SolverArgs& s) {
  bind_option(sub, w, "--method", s.method, "critical point method")
      ->check(CLI::IsMember({"mountain-pass", "nehari"}));
  bind_option(sub, w, "--max-iters", s.max_iters)->check(CLI::PositiveNumber);
  bind_option(sub, w, "--grad-tol", s.grad_tol)->check(CLI::PositiveNumber);
  bind_option(sub, w, "--path-points", s.path_points)->check(CLI::Range(8, 10000));
  bind_option(sub, w, "--seed-amplitude", s.amplitude);
  bind_option(sub, w, "--seed-width", s.width)->check(CLI::PositiveNumber);
  bind_option(sub, w, "--delta", s.delta, "lower end of the lambda range");
}

inline GridPtr make_grid_from(const GridArgs& g) {
  return make_grid(g.n, g.r_max, g.boundary == "dirichlet" ? PotentialBoundary::dirichlet
                                                          : PotentialBoundary::coulomb);
}

inline SolverOptions solver_options(const SolverArgs& s) {
  SolverOptions o;
  o.method = s.method == "nehari" ? Method::nehari_descent : Method::mountain_pass;
  o.max_iters = s.max_iters;
  o.grad_tol = s.grad_tol;
  o.path_points = s.path_points;
  o.seed = GaussianSeed{s.amplitude, s.width};
  o.delta = s.delta;
  o.validate();
  return o;
}

}  // namespace detail

/// Binds every option of every subcommand to `cfg`; with a writer, also
/// records how to print each value back.
inline void build_app(CLI::App& app, RunConfig& cfg, ConfigWriter* w = nullptr) {
  using detail::bind_option;
  using detail::bind_flag;
  app.description("Standing waves of the Klein-Gordon-Maxwell system on radial grids");
  app.set_config("--config", "", "INI file with one section per subcommand");
  bind_option(&app, w, "--seed", cfg.seed, "seed for all randomness");
  app.require_subcommand(1);
  // --config and --seed are also accepted after the subcommand name
  app.fallthrough();

  auto* solve = app.add_subcommand("solve", "one critical point of I_lambda");
  auto& s = cfg.solve;
  bind_option(solve, w, "--p", s.p, "power exponent")->required();
  bind_option(solve, w, "--m", s.m);
  bind_option(solve, w, "--omega", s.omega);
  bind_option(solve, w, "--e", s.e);
  bind_option(solve, w, "--lambda", s.lambda);
  bind_flag(solve, w, "--force", s.force, "attempt even where nonexistence is known");
  detail::add_grid(solve, w, s.grid);
  detail::add_solver(solve, w, s.solver);
  bind_option(solve, w, "--out", s.out, "output directory");

  auto* zm = app.add_subcommand("zero-mass", "eps continuation to omega = m");
  auto& z = cfg.zero_mass;
  bind_option(zm, w, "--p", z.p);
  bind_option(zm, w, "--q", z.q);
  bind_option(zm, w, "--alpha", z.alpha, "superquadraticity constant (default p)");
  bind_option(zm, w, "--m", z.m, "mass, also used as omega");
  bind_option(zm, w, "--e", z.e);
  bind_option(zm, w, "--eps0", z.eps0);
  bind_option(zm, w, "--steps", z.steps, "number of eps values eps0 2^-k");
  bind_option(zm, w, "--limit", z.limit, "finish with the eps = 0 solve");
  detail::add_grid(zm, w, z.grid);
  detail::add_solver(zm, w, z.solver);
  bind_option(zm, w, "--out", z.out);

  auto* sw = app.add_subcommand("sweep", "classify a (p, omega/m) grid");
  auto& v = cfg.sweep;
  bind_option(sw, w, "--p", v.p_range, "lo:hi:step");
  bind_option(sw, w, "--ratio", v.ratio_range, "lo:hi:step");
  bind_option(sw, w, "--solve-sample", v.solve_sample, "solve this many ExistenceThm1 cells");
  bind_option(sw, w, "--m", v.m);
  bind_option(sw, w, "--e", v.e);
  detail::add_grid(sw, w, v.grid);
  detail::add_solver(sw, w, v.solver);
  bind_option(sw, w, "--out", v.out);

  auto* th = app.add_subcommand("thresholds", "threshold quantities at one point");
  auto& t = cfg.thresholds;
  bind_option(th, w, "--p", t.p)->required();
  bind_option(th, w, "--m", t.m);
  bind_option(th, w, "--omega", t.omega);
  bind_option(th, w, "--out", t.out, "also write the JSON report here");

  auto* st = app.add_subcommand("selftest", "run the invariant suite");
  bind_flag(st, w, "--quick", cfg.selftest.quick, "cheap checks only");
  bind_option(st, w, "--sabotage", cfg.selftest.sabotage, "inject a known fault");
}

/// INI text of the whole configuration.
inline std::string serialize(const RunConfig& cfg) {
  RunConfig copy = cfg;
  CLI::App app;
  ConfigWriter writer;
  build_app(app, copy, &writer);
  return writer.str();
}

/// Inverse of serialize(): reads INI text on top of the defaults.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  CLI::App app;
  build_app(app, cfg);
  app.require_subcommand(0);
  for (auto* sub : app.get_subcommands({})) {
    for (auto* opt : sub->get_options()) opt->required(false);
  }
  std::istringstream is(text);
  app.parse_from_stream(is);
  return cfg;
}

inline int run_solve(const SolveConfig& c, std::ostream& out, std::ostream& err) {
  ModelParams params;
  GridPtr grid;
  SolverOptions opts;
  Region region;
  try {
    params.m = c.m;
    params.omega = c.omega;
    params.e = c.e;
    params.nonlinearity = Nonlinearity::power(*c.p);
    params.validate();
    require(c.e > 0.0 || c.force, ErrorCode::InvalidArgument, "e must be > 0 (use --force for e = 0)");
    require(c.omega < c.m, ErrorCode::InvalidArgument,
            "solve needs 0 < omega < m; use zero-mass for omega = m");
    (void)Mode::standard(c.lambda);
    grid = detail::make_grid_from(c.grid);
    opts = detail::solver_options(c.solver);
    region = classify_existence(*c.p, c.omega / c.m);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (region == Region::Nonexistence) {
    err << "warning: Nonexistence region (classifier)\n";
    if (!c.force) {
      err << "refusing to solve without --force\n";
      return kConfigError;
    }
  } else if (region == Region::Unknown) {
    err << "warning: no existence result covers p=" << *c.p << ", omega/m=" << c.omega / c.m << '\n';
  }

  SolutionReport r;
  try {
    r = solve(params, grid, opts, Mode::standard(c.lambda));
  } catch (const Error& e) {
    err << "solver failed: " << e.what() << '\n';
    return kSolverFailure;
  }
  const bool accepted = r.converged && r.residuals.pohozaev <= 1e-2 && r.electrostatic_gap <= 1e-6;
  Json j{{"params", to_json(params)}, {"grid", to_json(*grid)}};
  j["lambda"] = c.lambda;
  j["region"] = std::string(to_string(region));
  j["grad_tol"] = opts.grad_tol;
  j["accepted"] = accepted;
  j["report"] = to_json(r);
  const std::filesystem::path dir(c.out);
  write_json(dir / "report.json", j);
  write_field(dir / "u", r.u, params, "u");
  write_field(dir / "phi", r.phi, params, "phi");
  out << "energy " << fmt17(r.energy.total) << " gradient " << fmt17(r.residuals.gradient_norm)
      << " nehari " << fmt17(r.residuals.nehari) << " pohozaev " << fmt17(r.residuals.pohozaev)
      << " iterations " << r.iterations << (accepted ? " accepted" : " NOT accepted") << '\n';
  return accepted ? kOk : kSolverFailure;
}

inline int run_zero_mass(const ZeroMassConfig& c, std::ostream& out, std::ostream& err) {
  ModelParams params;
  GridPtr grid;
  SolverOptions opts;
  std::vector<double> schedule;
  try {
    params.m = c.m;
    params.omega = c.m;
    params.e = c.e;
    params.nonlinearity = Nonlinearity::double_power(c.p, c.q, c.alpha.value_or(c.p));
    params.validate();
    require(c.m > 0.0 && c.e > 0.0, ErrorCode::InvalidArgument, "zero-mass needs m > 0 and e > 0");
    grid = detail::make_grid_from(c.grid);
    opts = detail::solver_options(c.solver);
    schedule = epsilon_schedule(c.eps0, c.steps);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  ContinuationTrace trace;
  try {
    trace = epsilon_continuation(params, grid, opts, schedule, c.limit && c.steps > 1);
  } catch (const Error& e) {
    err << "continuation failed: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kConfigError : kSolverFailure;
  }
  const auto& last = trace.final_report();
  const bool residual_ok = last.residuals.gradient_norm <= 10.0 * opts.grad_tol &&
                           last.residuals.nehari <= kNehariAcceptance;
  const bool phi_ok = last.norms_phi.d12 > 0.0;
  const std::filesystem::path dir(c.out);
  {
    auto os = open_output(dir / "trace.csv");
    write_trace_csv(os, trace);
  }
  Json j{{"params", to_json(params)}, {"grid", to_json(*grid)}};
  j["schedule"] = schedule;
  j["limit_solve"] = c.limit && c.steps > 1;
  j["final_residual_ok"] = residual_ok;
  j["trace"] = to_json(trace);
  write_json(dir / "trace.json", j);
  write_field(dir / "u0", last.u, params, "u");
  write_field(dir / "phi0", last.phi, params, "phi");
  out << "steps " << trace.steps.size() << " final eps " << fmt17(trace.steps.back().parameter)
      << " energy " << fmt17(last.energy.total) << " gradient " << fmt17(last.residuals.gradient_norm)
      << " d12_phi " << fmt17(last.norms_phi.d12) << '\n';
  return residual_ok && phi_ok ? kOk : kSolverFailure;
}

inline int run_sweep(const SweepConfig& c, std::ostream& out, std::ostream& err) {
  Range pr, rr;
  GridPtr grid;
  SolverOptions opts;
  try {
    pr = parse_range(c.p_range);
    rr = parse_range(c.ratio_range);
    require(rr.lo > 0.0, ErrorCode::InvalidArgument, "omega/m range must start above 0");
    require(c.solve_sample >= 0, ErrorCode::InvalidArgument, "--solve-sample must be >= 0");
    if (c.solve_sample > 0) {
      require(c.m > 0.0 && c.e > 0.0, ErrorCode::InvalidArgument, "sample solves need m > 0 and e > 0");
      grid = detail::make_grid_from(c.grid);
      opts = detail::solver_options(c.solver);
    }
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const unsigned workers = worker_count();
  const auto rows = region_sweep(pr, rr, workers);
  const std::filesystem::path dir(c.out);
  {
    auto os = open_output(dir / "regions.csv");
    write_region_csv(os, rows);
  }
  {
    auto os = open_output(dir / "curves.dat");
    write_curve_file(os);
  }
  out << "cells " << rows.size() << " (" << pr.count() << " x " << rr.count() << ")\n";
  if (c.solve_sample == 0) return kOk;
  const auto samples = solve_samples(rows, c.solve_sample, grid, opts, c.m, c.e, workers);
  {
    auto os = open_output(dir / "samples.csv");
    write_samples_csv(os, samples);
  }
  int failed = 0;
  for (const auto& s : samples) {
    if (!s.converged) ++failed;
  }
  out << "sample solves " << samples.size() << ", not converged " << failed << '\n';
  return failed == 0 ? kOk : kSolverFailure;
}

inline int run_thresholds(const ThresholdsConfig& c, std::ostream& out, std::ostream& err) {
  ThresholdReport r;
  try {
    const double p = *c.p;
    require(p > 2.0 && p < 6.0, ErrorCode::InvalidArgument, "p must lie in (2,6), got " + fmt17(p));
    r = threshold_report(p, c.m, c.omega);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const Json j = to_json(r);
  out << j.dump(2) << '\n';
  if (!c.out.empty()) write_json(c.out, j);
  return kOk;
}

inline int run_selftest_cmd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  SelftestOptions o;
  o.quick = cfg.selftest.quick;
  o.sabotage = cfg.selftest.sabotage;
  o.seed = cfg.seed;
  std::vector<SelfCheck> extra;
  extra.push_back({"cli: config survives serialize and parse", true, [cfg](Rng&, const SelftestOptions&) {
                     RunConfig probe = cfg;
                     probe.solve.p = 3.0;
                     probe.thresholds.p = 3.5;
                     probe.zero_mass.alpha = 4.5;
                     return CheckOutcome{parse_config(serialize(probe)) == probe, ""};
                   }});
  SelftestResult r;
  try {
    r = run_selftest(o, out, extra);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  out << r.passed << " passed, " << r.failed << " failed\n";
  if (!r.ok()) {
    for (const auto& f : r.failures) err << "FAILED: " << f << '\n';
    return kSolverFailure;
  }
  return kOk;
}

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"kgm"};
  build_app(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  try {
    if (app.got_subcommand("solve")) return run_solve(cfg.solve, out, err);
    if (app.got_subcommand("zero-mass")) return run_zero_mass(cfg.zero_mass, out, err);
    if (app.got_subcommand("sweep")) return run_sweep(cfg.sweep, out, err);
    if (app.got_subcommand("thresholds")) return run_thresholds(cfg.thresholds, out, err);
    return run_selftest_cmd(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kConfigError : kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

}  // namespace kgm::cli
