#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the solver internals beyond the public map being checked.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "autm/error.hpp"
#include "autm/integrand.hpp"
#include "autm/map.hpp"

namespace oracle {

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double got, double want, double floor = 1e-4) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

/// Central-difference Jacobian, J[i][j] = d out_i / d in_j.
inline std::vector<std::vector<double>> fd_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f, const std::vector<double>& x,
    double h = 1e-6) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> J(f(x).size(), std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    auto xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const auto fp = f(xp), fm = f(xm);
    for (std::size_t i = 0; i < fp.size(); ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

/// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
    if (a[p][k] == 0.0) return 0.0;
    if (p != k) {
      std::swap(a[p], a[k]);
      det = -det;
    }
    det *= a[k][k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= m * a[k][j];
    }
  }
  return det;
}

inline double log_std_normal(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return -0.5 * s - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

/// Adaptive Simpson quadrature to an absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
  std::function<double(double, double, double, double, double, double, double, int)> rec =
      [&](double l, double r, double fl, double fm, double fr, double whole, double eps, int d) {
        const double m = 0.5 * (l + r), lm = 0.5 * (l + m), rm = 0.5 * (m + r);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - l) / 6.0 * (fl + 4.0 * flm + fm);
        const double right = (r - m) / 6.0 * (fm + 4.0 * frm + fr);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
        return rec(l, m, fl, flm, fm, left, eps / 2.0, d - 1) + rec(m, r, fm, frm, fr, right, eps / 2.0, d - 1);
      };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// For phi(x) = 2x + 1 and a constant kernel, w = v + 1 solves
/// w(t) = w(0) + int_0^t w(z e) dz, whose power series gives
/// q_s(x) + 1 = (x + 1) sum_n e^{n(n-1)/2} / n!.
inline double affine_qs_series(double x, double s) {
  const double eps = std::exp(-1.0 / s);
  double sum = 0.0, term = 1.0;
  for (int n = 0; n < 60; ++n) {
    if (n > 0) term *= std::pow(eps, n - 1) / n;
    sum += term;
    if (term < 1e-300) break;
  }
  return (x + 1.0) * sum - 1.0;
}

/// A random built-in integrand and input whose trajectory the solver resolves
/// (q_N and q_2N agree to 1e-3 relative); unresolved draws are counted.
struct ScalarCase {
  autm::Integrand g;
  double x;
};

inline ScalarCase draw_resolved_case(std::mt19937_64& rng, double param_range, double x_range,
                                     const autm::SolverConfig& cfg, int& redrawn) {
  std::uniform_real_distribution<double> p(-param_range, param_range), ux(-x_range, x_range);
  std::uniform_int_distribution<int> fam(0, 2);
  while (true) {
    const auto family = static_cast<autm::Family>(fam(rng));
    autm::Integrand g(family, {p(rng), p(rng), p(rng)});
    const double x = ux(rng);
    try {
      autm::SolverConfig fine = cfg;
      fine.steps *= 2;
      const double a = autm::forward(g, cfg, x).y, b = autm::forward(g, fine, x).y;
      if (std::abs(a - b) <= 1e-3 * (1.0 + std::abs(b))) return {g, x};
    } catch (const autm::DivergenceError&) {
    }
    ++redrawn;
  }
}

}  // namespace oracle
