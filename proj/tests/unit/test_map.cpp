#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "autm/error.hpp"
#include "autm/map.hpp"
#include "oracles.hpp"

using namespace autm;

namespace {

SolverConfig rk4(int n) {
  SolverConfig c;
  c.steps = n;
  return c;
}

SolverConfig reverse(int n) { return rk4(n).with_direction(Direction::Reverse); }

}  // namespace

TEST_CASE("forward: identity and shift maps") {
  const MapResult id = forward(Integrand::quadratic(0, 0, 0), rk4(16), 0.7);
  CHECK(id.y == 0.7);
  CHECK(id.log_deriv == 0.0);
  const MapResult sh = forward(Integrand::quadratic(0, 2.5, 0), rk4(16), 1.0);
  CHECK(sh.y == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(sh.log_deriv == 0.0);
}

TEST_CASE("forward: linear field has the closed form x e^t") {
  const MapResult r = forward(Integrand::quadratic(1, 0, 0), rk4(64), 1.0);
  CHECK(std::abs(r.y - std::numbers::e) < 1e-8);
  CHECK(r.log_deriv == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("forward keeps the trajectory on request") {
  const MapResult r = forward(Integrand::quadratic(0, 1, 0), rk4(4), 0.0, true);
  REQUIRE(r.trajectory.size() == 5);
  CHECK(r.trajectory.front() == 0.0);
  CHECK(r.trajectory[2] == doctest::Approx(0.5));
  CHECK(r.trajectory.back() == r.y);
}

TEST_CASE("inverse: identity, shift, linear") {
  CHECK(inverse(Integrand::quadratic(0, 0, 0), reverse(16), 0.7).x == 0.7);
  CHECK(inverse(Integrand::quadratic(0, 2.5, 0), reverse(16), 3.5).x == doctest::Approx(1.0).epsilon(1e-14));
  const InverseResult r = inverse(Integrand::quadratic(1, 0, 0), reverse(64), std::numbers::e);
  CHECK(std::abs(r.x - 1.0) < 1e-8);
  CHECK(r.converged);
}

TEST_CASE("direction preconditions") {
  const Integrand g = Integrand::quadratic(0.1, 0, 0);
  CHECK_THROWS_AS(forward(g, reverse(16), 0.0), ConfigError);
  CHECK_THROWS_AS(inverse(g, rk4(16), 0.0), ConfigError);
  CHECK_THROWS_AS(forward_vjp(g, reverse(16), 0.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(rk4(0).validate(), ConfigError);
}

TEST_CASE("reverse integration mirrors the forward nodes") {
  const SolverConfig f = rk4(8), r = f.reversed();
  CHECK(f.step() == -r.step());
  for (int i = 0; i <= 8; ++i) CHECK(f.node_time(i) == r.node_time(8 - i));
}

TEST_CASE("derivative: shift, linear and finite differences") {
  CHECK(derivative(Integrand::quadratic(0, 7, 0), rk4(16), -3.0) == 1.0);
  CHECK(derivative(Integrand::quadratic(1, 0, 0), rk4(16), 0.4) == doctest::Approx(std::numbers::e).epsilon(1e-14));
  const Integrand g = Integrand::quadratic(0.3, -0.2, 0.1);
  const double fd = oracle::central_diff([&](double x) { return forward(g, rk4(16), x).y; }, 0.5);
  CHECK(oracle::rel_err(derivative(g, rk4(16), 0.5), fd) < 1e-6);
}

TEST_CASE("forward_vjp: constant trajectory and shift") {
  for (double x : {-1.3, 0.0, 0.8}) {
    const Sensitivity s = forward_vjp(Integrand::quadratic(0, 0, 0), rk4(16), x, 1.0, 0.0);
    CHECK(s.dx == doctest::Approx(1.0));
    CHECK(s.dparams[0] == doctest::Approx(x));
    CHECK(s.dparams[1] == doctest::Approx(1.0));
    CHECK(s.dparams[2] == doctest::Approx(x * x));
  }
  for (double b : {-2.0, 0.0, 3.0}) CHECK(forward_vjp(Integrand::quadratic(0, b, 0), rk4(16), 0.3, 1.0, 0.0).dparams[1] == doctest::Approx(1.0));
}

TEST_CASE("forward_vjp matches finite differences on random cases") {
  std::mt19937_64 rng(5);
  int redrawn = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = oracle::draw_resolved_case(rng, 1.0, 2.0, rk4(16), redrawn);
    const Coeffs k = c.g.coeffs();
    for (int out = 0; out < 2; ++out) {
      auto value = [&](const Integrand& g, double x) {
        const MapResult r = forward(g, rk4(16), x);
        return out == 0 ? r.y : r.log_deriv;
      };
      const Sensitivity s = forward_vjp(c.g, rk4(16), c.x, out == 0 ? 1.0 : 0.0, out == 1 ? 1.0 : 0.0);
      worst = std::max(worst, oracle::rel_err(s.dx, oracle::central_diff([&](double x) { return value(c.g, x); }, c.x)));
      for (int p = 0; p < 3; ++p) {
        auto f = [&](double v) {
          Coeffs cc = k;
          (p == 0 ? cc.a : p == 1 ? cc.b : cc.c) = v;
          return value(Integrand(c.g.family(), cc), c.x);
        };
        const double base = p == 0 ? k.a : p == 1 ? k.b : k.c;
        worst = std::max(worst, oracle::rel_err(s.dparams[p], oracle::central_diff(f, base)));
      }
    }
  }
  MESSAGE("max relative error " << worst << ", redrawn " << redrawn);
  CHECK(worst < 1e-5);
}

TEST_CASE("Euler vjp matches finite differences") {
  SolverConfig e = rk4(10);
  e.scheme = Scheme::Euler;
  const Integrand g = Integrand::sigmoid_affine(0.4, -0.3, 0.9);
  const Sensitivity s = forward_vjp(g, e, 0.6, 0.7, 0.3);
  auto value = [&](const Integrand& gi, double x) {
    const MapResult r = forward(gi, e, x);
    return 0.7 * r.y + 0.3 * r.log_deriv;
  };
  CHECK(oracle::rel_err(s.dx, oracle::central_diff([&](double x) { return value(g, x); }, 0.6)) < 1e-7);
  CHECK(oracle::rel_err(s.dparams[2], oracle::central_diff([&](double c) { return value(Integrand::sigmoid_affine(0.4, -0.3, c), 0.6); }, 0.9)) < 1e-7);
}

TEST_CASE("monotonicity on random cases") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> p(-2.0, 2.0), ux(-5.0, 5.0);
  int violations = 0, skipped = 0;
  for (int i = 0; i < 2000; ++i) {
    const Integrand g(static_cast<Family>(i % 3), {p(rng), p(rng), p(rng)});
    double x0 = ux(rng), x1 = ux(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (x0 == x1) continue;
    try {
      if (!(forward(g, rk4(64), x0).y < forward(g, rk4(64), x1).y)) ++violations;
    } catch (const DivergenceError&) {
      ++skipped;
    }
  }
  MESSAGE("skipped (guard box) " << skipped);
  CHECK(violations == 0);
}

TEST_CASE("solver order: RK4 4, Euler 1") {
  const Integrand g = Integrand::quadratic(1, 0, 0);
  for (auto scheme : {Scheme::RK4, Scheme::Euler}) {
    std::vector<double> err;
    for (int n : {8, 16, 32, 64}) {
      SolverConfig c = rk4(n);
      c.scheme = scheme;
      err.push_back(std::abs(forward(g, c, 1.0).y - std::numbers::e));
    }
    const double expected = scheme == Scheme::RK4 ? 4.0 : 1.0;
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(std::log2(err[i - 1] / err[i]) == doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("round trip with refinement") {
  std::mt19937_64 rng(21);
  int redrawn = 0, worst_iters = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = oracle::draw_resolved_case(rng, 1.0, 2.0, rk4(16), redrawn);
    const double y = forward(c.g, rk4(16), c.x).y;
    const InverseResult r = inverse(c.g, reverse(16), y);
    CHECK(r.converged);
    worst = std::max(worst, std::abs(r.x - c.x));
    worst_iters = std::max(worst_iters, r.iterations);
  }
  CHECK(worst < 1e-8);
  CHECK(worst_iters <= 15);
}

TEST_CASE("inverse refinement methods agree") {
  const Integrand g = Integrand::cubic(0.2, 0.1, -0.3);
  const double x = 0.9, y = forward(g, rk4(16), x).y;
  RefineConfig rc;
  for (auto m : {RefineMethod::Bisection, RefineMethod::FixedPoint}) {
    rc.method = m;
    rc.tolerance = 1e-12;
    CHECK(inverse(g, reverse(16), y, rc).x == doctest::Approx(x).epsilon(1e-10));
  }
  rc.method = RefineMethod::ReverseIntegrationOnly;
  const InverseResult raw = inverse(g, reverse(16), y, rc);
  CHECK(raw.iterations == 0);
  CHECK(std::abs(raw.x - x) < 1e-4);
  CHECK(raw.reverse_log_deriv == doctest::Approx(-forward(g, rk4(16), x).log_deriv).epsilon(1e-4));
}

TEST_CASE("guard box turns blow-up into DivergenceError") {
  // v' = v^2 from v(0) = 2 blows up at t = 1/2.
  try {
    forward(Integrand::quadratic(0, 0, 1), rk4(64), 2.0);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::abs(e.value()) > 1e6);
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 1.0);
  }
  SolverConfig tight = rk4(16);
  tight.guard = 1.0;
  CHECK_THROWS_AS(forward(Integrand::quadratic(0, 1, 0), tight, 0.5), DivergenceError);
}

TEST_CASE("resolution gap separates resolved and unresolved maps") {
  CHECK(resolution_gap(Integrand::quadratic(0.3, 0.1, 0.2), rk4(16), 0.5) < 1e-5);
  CHECK(resolution_gap(Integrand::quadratic(0.159, 0.129, -0.707), rk4(16), -1.4) > 1e-3);
}
