#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "autm/integrand.hpp"
#include "autm/refine.hpp"
#include "autm/solver.hpp"

namespace autm {

struct BenchConfig {
  /// Quadratic integrand a v + b + c v^2.
  Coeffs coeffs{0.5, 0.1, 0.2};
  SolverConfig solver;
  std::vector<double> tolerances{1e-3, 1e-4, 1e-5, 1e-6};
  std::size_t n_inputs = 1000;
  std::uint64_t seed = 0;
  /// Fixed-point settings: plain x <- x - lambda (q(x) - y) with this initial
  /// lambda, halving on residual growth, bisection after max_iterations.
  double damping = 0.5;
  int max_iterations = 100;
  /// Bisection bracket half width around y.
  double bracket_half_width = 0.5;

  void validate() const;
  RefineConfig refine_config(RefineMethod method, double tolerance) const;
};

struct BenchRow {
  double tolerance = 0.0;
  RefineMethod method = RefineMethod::Bisection;
  double mean_steps = 0.0;
  double mean_expansions = 0.0;
  int max_steps = 0;
  /// Samples whose refinement did not reach the tolerance (excluded from means).
  std::size_t failures = 0;
  /// Fixed-point samples that needed the bisection fallback.
  std::size_t fallbacks = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchRow> rows;

  const BenchRow& row(double tolerance, RefineMethod method) const;
  /// Fixed-point mean steps over bisection mean steps at one tolerance.
  double ratio(double tolerance) const;
  /// Least-squares growth of bisection mean steps per decade of tolerance.
  double bisection_growth_per_decade() const;
};

/// x ~ U(0, 1) seeded, y = q(x); each tolerance and method inverts every y
/// from scratch. Step counts exclude the initial guess and bracket expansion.
BenchReport run_bench(const BenchConfig& cfg);

/// tolerance,method,mean_steps,mean_expansions,failures
void write_bench_csv(std::ostream& out, const BenchReport& report);
std::string bench_summary(const BenchReport& report);

}  // namespace autm
