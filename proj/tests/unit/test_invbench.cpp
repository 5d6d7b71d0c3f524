#include <doctest.h>

#include <cmath>
#include <sstream>

#include "autm/error.hpp"
#include "autm/invbench.hpp"

using namespace autm;

namespace {

BenchConfig small() {
  BenchConfig c;
  c.n_inputs = 200;
  return c;
}

}  // namespace

TEST_CASE("benchmark rows cover every tolerance and method") {
  const BenchReport rep = run_bench(small());
  CHECK(rep.rows.size() == 8);
  for (double tol : rep.config.tolerances) {
    CHECK(rep.row(tol, RefineMethod::Bisection).failures == 0);
    CHECK(rep.row(tol, RefineMethod::FixedPoint).failures == 0);
    CHECK(rep.row(tol, RefineMethod::FixedPoint).fallbacks == 0);
  }
}

TEST_CASE("fixed point needs fewer steps than bisection and bisection grows by about log2(10)") {
  const BenchReport rep = run_bench(small());
  for (double tol : rep.config.tolerances) CHECK(rep.ratio(tol) < 0.65);
  for (std::size_t i = 1; i < rep.config.tolerances.size(); ++i) {
    const double t0 = rep.config.tolerances[i - 1], t1 = rep.config.tolerances[i];
    CHECK(rep.row(t1, RefineMethod::Bisection).mean_steps > rep.row(t0, RefineMethod::Bisection).mean_steps);
    CHECK(rep.row(t1, RefineMethod::FixedPoint).mean_steps >= rep.row(t0, RefineMethod::FixedPoint).mean_steps);
  }
  CHECK(std::abs(rep.bisection_growth_per_decade() - std::log2(10.0)) < 0.5);
}

TEST_CASE("benchmark is deterministic for a seed") {
  const BenchReport a = run_bench(small()), b = run_bench(small());
  std::ostringstream sa, sb;
  write_bench_csv(sa, a);
  write_bench_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("tolerance,method,mean_steps,mean_expansions,failures\n", 0) == 0);
  CHECK(bench_summary(a).find("fixed_point") != std::string::npos);
}

TEST_CASE("benchmark refinement settings") {
  const BenchConfig c;
  const RefineConfig fp = c.refine_config(RefineMethod::FixedPoint, 1e-4);
  CHECK_FALSE(fp.slope_scaled);
  CHECK(fp.damping == 0.5);
  CHECK(fp.tolerance == 1e-4);
  CHECK(c.refine_config(RefineMethod::Bisection, 1e-5).bracket_half_width == 0.5);
}

TEST_CASE("benchmark config validation") {
  BenchConfig c;
  c.n_inputs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tolerances = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tolerances = {-1e-3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
