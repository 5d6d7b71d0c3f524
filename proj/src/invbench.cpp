#include "autm/invbench.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "autm/dataset.hpp"
#include "autm/error.hpp"
#include "autm/map.hpp"

namespace autm {

void BenchConfig::validate() const {
  solver.validate();
  if (tolerances.empty()) throw ConfigError("benchmark needs at least one tolerance");
  for (double t : tolerances)
    if (!(t > 0.0)) throw ConfigError("benchmark tolerances must be positive");
  if (n_inputs < 1) throw ConfigError("benchmark needs at least one input");
  refine_config(RefineMethod::FixedPoint, tolerances.front()).validate();
}

RefineConfig BenchConfig::refine_config(RefineMethod method, double tolerance) const {
  RefineConfig rc;
  rc.method = method;
  rc.tolerance = tolerance;
  rc.max_iterations = max_iterations;
  rc.damping = damping;
  rc.min_damping = std::min(rc.min_damping, damping);
  rc.slope_scaled = false;
  rc.bracket_half_width = bracket_half_width;
  return rc;
}

const BenchRow& BenchReport::row(double tolerance, RefineMethod method) const {
  for (const auto& r : rows)
    if (r.tolerance == tolerance && r.method == method) return r;
  throw ConfigError("no benchmark row for that tolerance and method");
}

double BenchReport::ratio(double tolerance) const {
  return row(tolerance, RefineMethod::FixedPoint).mean_steps / row(tolerance, RefineMethod::Bisection).mean_steps;
}

double BenchReport::bisection_growth_per_decade() const {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.method == RefineMethod::Bisection) pts.emplace_back(-std::log10(r.tolerance), r.mean_steps);
  if (pts.size() < 2) throw ConfigError("growth needs at least two tolerances");
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxy / sxx;
}

BenchReport run_bench(const BenchConfig& cfg) {
  cfg.validate();
  const Integrand g(Family::Quadratic, cfg.coeffs);
  const SolverConfig fwd = cfg.solver.with_direction(Direction::Forward);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> ys(cfg.n_inputs);
  for (double& y : ys) y = forward(g, fwd, unif(rng)).y;

  BenchReport report;
  report.config = cfg;
  for (double tol : cfg.tolerances) {
    for (RefineMethod method : {RefineMethod::Bisection, RefineMethod::FixedPoint}) {
      const RefineConfig rc = cfg.refine_config(method, tol);
      BenchRow row;
      row.tolerance = tol;
      row.method = method;
      double steps = 0.0, expansions = 0.0;
      std::size_t ok = 0;
      for (double y : ys) {
        RefineResult r;
        try {
          r = method == RefineMethod::Bisection ? bisection_invert(g, fwd, y, rc) : fixedpoint_invert(g, fwd, y, rc);
        } catch (const NumericalError&) {
          ++row.failures;
          continue;
        }
        if (r.fell_back) ++row.fallbacks;
        if (!r.converged) {
          ++row.failures;
          continue;
        }
        ++ok;
        steps += r.steps;
        expansions += r.expansions;
        row.max_steps = std::max(row.max_steps, r.steps);
      }
      if (ok > 0) {
        row.mean_steps = steps / static_cast<double>(ok);
        row.mean_expansions = expansions / static_cast<double>(ok);
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "tolerance,method,mean_steps,mean_expansions,failures\n";
  for (const auto& r : report.rows)
    out << format_double(r.tolerance) << ',' << to_string(r.method) << ',' << format_double(r.mean_steps) << ','
        << format_double(r.mean_expansions) << ',' << r.failures << '\n';
}

std::string bench_summary(const BenchReport& report) {
  const auto& c = report.config;
  std::ostringstream s;
  s << "integrand: quadratic a=" << c.coeffs.a << " b=" << c.coeffs.b << " c=" << c.coeffs.c << ", "
    << to_string(c.solver.scheme) << " N=" << c.solver.steps << ", inputs=" << c.n_inputs << ", seed=" << c.seed
    << ", fixed-point damping=" << c.damping << "\n";
  s << std::left << std::setw(12) << "tolerance" << std::setw(12) << "bisection" << std::setw(12) << "fixed_point"
    << std::setw(8) << "ratio" << "failures(b/f)\n";
  for (double tol : c.tolerances) {
    const auto& b = report.row(tol, RefineMethod::Bisection);
    const auto& f = report.row(tol, RefineMethod::FixedPoint);
    std::ostringstream t;
    t << tol;
    s << std::setw(12) << t.str() << std::setw(12) << std::fixed << std::setprecision(3) << b.mean_steps
      << std::setw(12) << f.mean_steps << std::setw(8) << report.ratio(tol) << b.failures << "/" << f.failures
      << "\n";
    s.unsetf(std::ios::fixed);
    s << std::setprecision(6);
  }
  if (c.tolerances.size() >= 2) s << "bisection growth per decade: " << report.bisection_growth_per_decade() << "\n";
  return s.str();
}

}  // namespace autm
