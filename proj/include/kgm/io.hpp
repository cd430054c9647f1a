#pragma once

// JSON reports and CSV tables. Numbers in CSV files are written with 17
// significant digits; JSON keys keep insertion order so identical inputs give
// byte-identical files.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"

#include "kgm/continuation.hpp"
#include "kgm/error.hpp"
#include "kgm/model.hpp"
#include "kgm/solver.hpp"
#include "kgm/thresholds.hpp"

namespace kgm {

using Json = nlohmann::ordered_json;

inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

template <class T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

/// JSON has no NaN or infinity; those become null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace detail

inline Json to_json(const Nonlinearity& nl) {
  if (nl.is_power()) return Json{{"kind", "power"}, {"p", nl.as_power().p}};
  const auto& d = nl.as_double_power();
  return Json{{"kind", "double_power"}, {"p", d.p},   {"q", d.q},
              {"alpha", d.alpha},       {"c1", d.c1}, {"c2", d.c2}};
}

inline Json to_json(const ModelParams& p) {
  return Json{{"m", p.m},
              {"omega", p.omega},
              {"e", p.e},
              {"Omega", p.Omega()},
              {"nonlinearity", to_json(p.nonlinearity)}};
}

inline Json to_json(const RadialGrid& g) {
  return Json{{"n", g.n()},
              {"r_max", g.r_max()},
              {"h", g.h()},
              {"potential_boundary",
               g.potential_boundary() == PotentialBoundary::coulomb ? "coulomb" : "dirichlet"}};
}

inline Json to_json(const FieldNorms& n) {
  return Json{{"d12", n.d12}, {"l2", n.l2}, {"lp", n.lp}, {"p", n.p}, {"h1", n.h1}};
}

inline Json to_json(const EnergyBreakdown& e) {
  return Json{{"kinetic", e.kinetic},
              {"mass_term", e.mass_term},
              {"interaction", e.interaction},
              {"potential", e.potential},
              {"total", e.total}};
}

inline Json to_json(const IdentityResiduals& r) {
  return Json{{"nehari", detail::number(r.nehari)},
              {"pohozaev", detail::number(r.pohozaev)},
              {"gradient_norm", detail::number(r.gradient_norm)}};
}

inline Json to_json(const SolutionReport& r) {
  return Json{{"method", std::string(to_string(r.method))},
              {"mode", r.mode},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"level_estimate", r.level_estimate},
              {"energy", to_json(r.energy)},
              {"residuals", to_json(r.residuals)},
              {"norms_u", to_json(r.norms_u)},
              {"norms_phi", to_json(r.norms_phi)},
              {"electrostatic_gap", r.electrostatic_gap},
              {"phi_linear_residual", r.phi_linear_residual},
              {"phi_max", r.phi_max},
              {"u_center", r.u.values.empty() ? 0.0 : r.u[0]},
              {"fprime_mass", r.fprime_mass}};
}

inline Json to_json(const QuadraticCheck& c) {
  return Json{{"passed", c.passed},
              {"grid_passed", c.grid_passed},
              {"agree", c.agree},
              {"min_value", c.min_value},
              {"argmin", c.argmin},
              {"witness", detail::optional_json(c.witness)}};
}

inline Json to_json(const ThresholdReport& r) {
  Json j{{"p", r.p},
         {"m", r.m},
         {"omega", r.omega},
         {"omega_ratio", r.omega / r.m},
         {"region", std::string(to_string(r.region))},
         {"g_p", detail::optional_json(r.g_of_p)},
         {"g0_p", detail::optional_json(r.g0_of_p)}};
  j["interval_Ip"] = r.interval ? Json::array({r.interval->lo, r.interval->hi}) : Json(nullptr);
  j["inf_kp"] = detail::optional_json(r.inf_kp);
  j["alpha_star"] = detail::optional_json(r.alpha_star);
  if (r.alpha_star) {
    const auto t = coefficients(r.p, *r.alpha_star);
    j["coefficients"] = Json{{"A", t.a}, {"B", t.b}, {"C", t.c}};
    j["kp_alpha_star"] = kp(r.p, *r.alpha_star);
  }
  j["certificate"] = r.certificate ? to_json(*r.certificate) : Json(nullptr);
  return j;
}

inline Json to_json(const ContinuationTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json row{{"parameter", s.parameter}, {"d12_u", s.d12_u}, {"d12_phi", s.d12_phi}};
    row["certificate"] = detail::optional_json(s.certificate);
    row["report"] = to_json(s.report);
    steps.push_back(std::move(row));
  }
  return Json{{"alpha", detail::optional_json(t.alpha)},
              {"all_converged", t.all_converged()},
              {"steps", std::move(steps)}};
}

/// Envelope written next to a field CSV.
inline Json field_envelope(const Field& f, const ModelParams& params, const std::string& name) {
  Json j{{"field", name}};
  j["grid"] = to_json(*f.grid);
  j["params"] = to_json(params);
  j["columns"] = Json::array({"r", "value"});
  return j;
}

inline void write_field_csv(std::ostream& os, const Field& f) {
  os << "r,value\n";
  const auto r = f.grid->nodes();
  for (std::size_t i = 0; i < f.size(); ++i) os << fmt17(r[i]) << ',' << fmt17(f[i]) << '\n';
}

inline void write_trace_csv(std::ostream& os, const ContinuationTrace& t) {
  os << "parameter,energy,d12_u,d12_phi,nehari,pohozaev,fprime_mass,converged\n";
  for (const auto& s : t.steps) {
    const auto& r = s.report;
    os << fmt17(s.parameter) << ',' << fmt17(r.energy.total) << ',' << fmt17(s.d12_u) << ','
       << fmt17(s.d12_phi) << ',' << fmt17(r.residuals.nehari) << ',' << fmt17(r.residuals.pohozaev)
       << ',' << fmt17(r.fprime_mass) << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::InvalidArgument, "cannot open " + path.string());
  return os;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

/// Writes <stem>.csv and <stem>.json for a field.
inline void write_field(const std::filesystem::path& stem, const Field& f, const ModelParams& params,
                        const std::string& name) {
  auto csv = open_output(stem.string() + ".csv");
  write_field_csv(csv, f);
  write_json(stem.string() + ".json", field_envelope(f, params, name));
}

}  // namespace kgm
