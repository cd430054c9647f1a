#pragma once

// Parameter continuations with warm starts.
//
// lambda: solves I_lambda on an increasing schedule ending at lambda = 1 and
// watches the gradient norm along the way; a blow-up would contradict the
// a-priori bound the existence argument rests on.
// eps: solves the regularized zero-mass problems on a decreasing schedule and
// finishes with a solve of the eps = 0 equation itself.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kgm/energy.hpp"
#include "kgm/error.hpp"
#include "kgm/model.hpp"
#include "kgm/solver.hpp"
#include "kgm/thresholds.hpp"

namespace kgm {

struct ContinuationStep {
  double parameter = 0.0;  ///< lambda or eps
  SolutionReport report;
  double d12_u = 0.0;
  double d12_phi = 0.0;
  /// Boundedness certificate (lambda continuation with a certified alpha).
  std::optional<double> certificate;
};

struct ContinuationTrace {
  std::vector<ContinuationStep> steps;
  std::optional<double> alpha;  ///< alpha used by the certificate
  bool all_converged() const {
    for (const auto& s : steps) {
      if (!s.report.converged) return false;
    }
    return !steps.empty();
  }
  const SolutionReport& final_report() const {
    require(!steps.empty(), ErrorCode::InvalidArgument, "empty trace");
    return steps.back().report;
  }
};

/// Growth of the gradient norm along a trace that counts as unbounded.
inline constexpr double kBoundGrowthFactor = 10.0;
/// Lower limit of int f'(u) u below which the zero-mass iterates are
/// considered to vanish.
inline constexpr double kMassLeakFloor = 1e-6;

/// delta 2^(k/(count-1)) for k = 0..count-1: geometric from delta to 1.
inline std::vector<double> lambda_schedule(double delta = 0.5, int count = 6) {
  require(delta > 0.0 && delta < 1.0, ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  require(count >= 2, ErrorCode::InvalidArgument, "lambda schedule needs at least two steps");
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) {
    out[k] = delta * std::pow(1.0 / delta, static_cast<double>(k) / (count - 1));
  }
  out.back() = 1.0;
  return out;
}

/// eps0 2^-k for k = 0..count-1.
inline std::vector<double> epsilon_schedule(double eps0 = 1.0, int count = 13) {
  require(std::isfinite(eps0) && eps0 > 0.0, ErrorCode::InvalidArgument, "eps0 must be > 0");
  require(count >= 1, ErrorCode::InvalidArgument, "eps schedule needs at least one step");
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = std::ldexp(eps0, -k);
  return out;
}

namespace detail {

inline ContinuationStep make_step(double parameter, SolutionReport report) {
  ContinuationStep s;
  s.parameter = parameter;
  s.d12_u = report.norms_u.d12;
  s.d12_phi = report.norms_phi.d12;
  s.report = std::move(report);
  return s;
}

inline SolverOptions warm_started(SolverOptions opts, const ContinuationTrace& trace) {
  if (!trace.steps.empty()) opts.seed = trace.steps.back().report.u;
  return opts;
}

}  // namespace detail

inline ContinuationTrace lambda_continuation(const ModelParams& params, const GridPtr& grid,
                                             const SolverOptions& opts,
                                             const std::vector<double>& schedule = lambda_schedule()) {
  params.validate();
  require(params.nonlinearity.is_power(), ErrorCode::InvalidArgument,
          "lambda continuation needs the power nonlinearity");
  const double p = params.nonlinearity.p();
  require(params.m > 0.0 && classify_existence(p, params.omega / params.m) == Region::ExistenceThm1,
          ErrorCode::InvalidArgument, "lambda continuation needs 2 < p < 4 and omega < m g(p)");
  require(!schedule.empty() && schedule.back() == 1.0, ErrorCode::InvalidArgument,
          "lambda schedule must end at 1");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    require(schedule[k] > 0.0 && schedule[k] <= 1.0, ErrorCode::InvalidArgument,
            "lambda values must lie in (0,1]");
    require(k == 0 || schedule[k] > schedule[k - 1], ErrorCode::InvalidArgument,
            "lambda schedule must be strictly increasing");
  }

  ContinuationTrace trace;
  trace.alpha = find_alpha(p, params.m, params.omega);
  SolverOptions base = opts;
  base.delta = std::min(opts.delta, schedule.front());
  for (double lambda : schedule) {
    SolutionReport r = solve(params, grid, detail::warm_started(base, trace), Mode::standard(lambda));
    ContinuationStep step = detail::make_step(lambda, std::move(r));
    step.certificate = boundedness_certificate(step.report.u, params, lambda, *trace.alpha);
    if (!trace.steps.empty()) {
      const double first = trace.steps.front().d12_u;
      require(step.d12_u <= kBoundGrowthFactor * first, ErrorCode::BoundednessMonitorTripped,
              "gradient norm grew from " + std::to_string(first) + " to " +
                  std::to_string(step.d12_u) + " at lambda=" + std::to_string(lambda));
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

/// Runs the eps schedule and, when `limit_solve` is set, one more solve of
/// the eps = 0 equation warm-started from the last regularized solution.
inline ContinuationTrace epsilon_continuation(const ModelParams& params, const GridPtr& grid,
                                              const SolverOptions& opts,
                                              const std::vector<double>& schedule = epsilon_schedule(),
                                              bool limit_solve = true) {
  params.validate();
  require(params.omega == params.m, ErrorCode::InvalidArgument,
          "zero-mass continuation needs omega = m");
  require(params.nonlinearity.is_double_power(), ErrorCode::InvalidArgument,
          "zero-mass continuation needs the double-power nonlinearity");
  const auto& law = params.nonlinearity.as_double_power();
  const auto hyp = verify_f_hypotheses(params.nonlinearity, law.alpha, 2001);
  require(hyp.passed, ErrorCode::InvalidArgument,
          "nonlinearity violates " + hyp.violated + " at t=" + std::to_string(hyp.witness.value_or(NAN)));
  require(!schedule.empty(), ErrorCode::InvalidArgument, "empty eps schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    require(schedule[k] > 0.0, ErrorCode::InvalidArgument, "eps values must be > 0");
    require(k == 0 || schedule[k] < schedule[k - 1], ErrorCode::InvalidArgument,
            "eps schedule must be strictly decreasing");
  }

  ContinuationTrace trace;
  auto record = [&](double eps) {
    SolutionReport r = solve(params, grid, detail::warm_started(opts, trace), Mode::zero_mass(eps));
    ContinuationStep step = detail::make_step(eps, std::move(r));
    require(step.report.fprime_mass >= kMassLeakFloor, ErrorCode::MassLeak,
            "int f'(u)u dropped to " + std::to_string(step.report.fprime_mass) +
                " at eps=" + std::to_string(eps));
    if (!trace.steps.empty()) {
      const auto& first = trace.steps.front();
      const bool bounded = step.d12_u <= kBoundGrowthFactor * first.d12_u &&
                           step.d12_phi <= kBoundGrowthFactor * first.d12_phi;
      require(bounded, ErrorCode::UniformBoundViolated,
              "D12 norms left " + std::to_string(kBoundGrowthFactor) + "x their initial values at eps=" +
                  std::to_string(eps));
    }
    trace.steps.push_back(std::move(step));
  };
  for (double eps : schedule) record(eps);
  if (limit_solve) record(0.0);
  return trace;
}

}  // namespace kgm
