#pragma once

// Classification sweeps over the (p, omega/m) plane and the threshold curves.
// Cells are independent; they are evaluated on a small worker pool and
// gathered in row-major order, so output never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "kgm/error.hpp"
#include "kgm/io.hpp"
#include "kgm/solver.hpp"
#include "kgm/thresholds.hpp"

namespace kgm {

/// Inclusive range lo:hi:step.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  int count() const { return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1; }
  /// Snapped to 1e-12 so that decimal grids print as typed.
  double at(int k) const { return std::round((lo + k * step) * 1e12) / 1e12; }
  std::vector<double> values() const {
    std::vector<double> v(count());
    for (int k = 0; k < count(); ++k) v[k] = at(k);
    return v;
  }
  std::string str() const { return fmt17(lo) + ":" + fmt17(hi) + ":" + fmt17(step); }
};

inline Range parse_range(const std::string& text) {
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
  require(b != std::string::npos && text.find(':', b + 1) == std::string::npos,
          ErrorCode::InvalidArgument, "range must look like lo:hi:step, got '" + text + "'");
  Range r;
  try {
    std::size_t used = 0;
    auto num = [&](const std::string& s) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    };
    r.lo = num(text.substr(0, a));
    r.hi = num(text.substr(a + 1, b - a - 1));
    r.step = num(text.substr(b + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "range has a non-numeric part: '" + text + "'");
  }
  require(std::isfinite(r.lo) && std::isfinite(r.hi) && std::isfinite(r.step) && r.step > 0.0 &&
              r.hi >= r.lo,
          ErrorCode::InvalidArgument, "range needs finite lo <= hi and step > 0: '" + text + "'");
  require(r.count() <= 1000000, ErrorCode::InvalidArgument, "range has too many points");
  return r;
}

/// Worker count: hardware concurrency, capped by KGM_THREADS when set.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("KGM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception is rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      if (failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

struct SweepRow {
  double p = 0.0;
  double omega_ratio = 0.0;
  Region region = Region::Unknown;
  std::optional<double> g_p;
  std::optional<double> g0_p;
  std::optional<double> inf_kp;
  std::optional<double> alpha_star;
};

inline SweepRow classify_cell(double p, double ratio) {
  SweepRow row;
  row.p = p;
  row.omega_ratio = ratio;
  row.region = classify_existence(p, ratio);
  if (p > 2.0 && p < 4.0) row.g_p = g(p);
  if (p > 2.0 && p <= 4.0) row.g0_p = g0(p);
  if (p > 2.0 && p <= 3.0) row.inf_kp = inf_kp(p);
  if (row.region == Region::ExistenceThm1) {
    try {
      row.alpha_star = find_alpha(p, 1.0, ratio);
    } catch (const Error&) {
    }
  }
  return row;
}

/// Row-major over (p, ratio): p varies slowest.
inline std::vector<SweepRow> region_sweep(const Range& p_range, const Range& ratio_range,
                                          unsigned workers = worker_count()) {
  require(ratio_range.lo > 0.0, ErrorCode::InvalidArgument, "omega/m must be > 0");
  const auto ps = p_range.values();
  const auto rs = ratio_range.values();
  std::vector<SweepRow> rows(ps.size() * rs.size());
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    rows[i] = classify_cell(ps[i / rs.size()], rs[i % rs.size()]);
  });
  return rows;
}

inline void write_region_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
  os << "p,omega_ratio,region,g_p,g0_p,inf_kp,alpha_star\n";
  for (const auto& r : rows) {
    os << fmt17(r.p) << ',' << fmt17(r.omega_ratio) << ',' << to_string(r.region) << ',' << opt(r.g_p)
       << ',' << opt(r.g0_p) << ',' << opt(r.inf_kp) << ',' << opt(r.alpha_star) << '\n';
  }
}

/// Gnuplot data: block 0 holds g(p) on (2,4), block 1 g0(p) on (2,4], both on
/// p = 2 + k/100. Blocks are separated by two blank lines (`index 0/1`).
inline void write_curve_file(std::ostream& os) {
  os << "# p g(p)\n";
  for (int k = 1; k < 200; ++k) {
    const double p = (200 + k) / 100.0;
    os << fmt17(p) << ' ' << fmt17(g(p)) << '\n';
  }
  os << "\n\n# p g0(p)\n";
  for (int k = 1; k <= 200; ++k) {
    const double p = (200 + k) / 100.0;
    os << fmt17(p) << ' ' << fmt17(g0(p)) << '\n';
  }
}

struct SampleSolve {
  double p = 0.0;
  double omega_ratio = 0.0;
  bool converged = false;
  double energy = 0.0;
  double gradient_norm = 0.0;
  double nehari = 0.0;
  double pohozaev = 0.0;
  int iterations = 0;
  std::string error;
};

/// Indices of `count` ExistenceThm1 cells spread evenly over the sweep.
inline std::vector<std::size_t> sample_cells(const std::vector<SweepRow>& rows, int count) {
  std::vector<std::size_t> thm1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].region == Region::ExistenceThm1) thm1.push_back(i);
  }
  std::vector<std::size_t> out;
  if (count <= 0 || thm1.empty()) return out;
  const std::size_t k = std::min<std::size_t>(count, thm1.size());
  for (std::size_t j = 0; j < k; ++j) out.push_back(thm1[(j * thm1.size()) / k]);
  return out;
}

inline std::vector<SampleSolve> solve_samples(const std::vector<SweepRow>& rows, int count,
                                              const GridPtr& grid, const SolverOptions& opts,
                                              double m, double e, unsigned workers = worker_count()) {
  const auto picks = sample_cells(rows, count);
  std::vector<SampleSolve> out(picks.size());
  parallel_for(picks.size(), workers, [&](std::size_t i) {
    const auto& row = rows[picks[i]];
    SampleSolve s;
    s.p = row.p;
    s.omega_ratio = row.omega_ratio;
    try {
      ModelParams params;
      params.m = m;
      params.omega = row.omega_ratio * m;
      params.e = e;
      params.nonlinearity = Nonlinearity::power(row.p);
      const auto r = solve(params, grid, opts, Mode::standard(1.0));
      s.converged = r.converged;
      s.energy = r.energy.total;
      s.gradient_norm = r.residuals.gradient_norm;
      s.nehari = r.residuals.nehari;
      s.pohozaev = r.residuals.pohozaev;
      s.iterations = r.iterations;
    } catch (const Error& err) {
      s.error = err.what();
    }
    out[i] = std::move(s);
  });
  return out;
}

inline void write_samples_csv(std::ostream& os, const std::vector<SampleSolve>& samples) {
  os << "p,omega_ratio,converged,energy,gradient_norm,nehari,pohozaev,iterations,error\n";
  for (const auto& s : samples) {
    os << fmt17(s.p) << ',' << fmt17(s.omega_ratio) << ',' << (s.converged ? 1 : 0) << ','
       << fmt17(s.energy) << ',' << fmt17(s.gradient_norm) << ',' << fmt17(s.nehari) << ','
       << fmt17(s.pohozaev) << ',' << s.iterations << ',' << '"' << s.error << '"' << '\n';
  }
}

}  // namespace kgm
