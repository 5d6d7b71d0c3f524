#pragma once

#include <string_view>
#include <vector>

#include "autm/integrand.hpp"
#include "autm/solver.hpp"

namespace autm {

enum class RefineMethod { Bisection, FixedPoint, ReverseIntegrationOnly };

std::string_view to_string(RefineMethod method);

/// Root-finding settings for solving q(x) = y.
struct RefineConfig {
  RefineMethod method = RefineMethod::FixedPoint;
  /// Target on |q(x_k) - y|.
  double tolerance = 1e-12;
  int max_iterations = 15;

  // Bisection: bracket [c - w, c + w] with w = bracket_half_width, each side
  // widened by bracket_expansion until q(lo) <= y <= q(hi).
  double bracket_half_width = 0.5;
  double bracket_expansion = 2.0;
  int max_expansions = 64;
  int max_bisection_steps = 200;

  // Fixed point: x <- x - lambda * (q(x) - y) / slope, where slope is q'(x0)
  // when slope_scaled is set and 1 otherwise. lambda starts at damping and
  // halves (down to min_damping) whenever a step would increase the residual.
  double damping = 1.0;
  double min_damping = 1.0 / 16.0;
  bool slope_scaled = true;
  bool fallback_to_bisection = true;

  /// Throws ConfigError on non-positive tolerance, iterations or damping out of (0, 1].
  void validate() const;
};

struct RefineResult {
  double x = 0.0;
  double residual = 0.0;  ///< |q(x) - y| at the returned x
  int steps = 0;          ///< refinement iterations (halvings or fixed-point trials)
  int expansions = 0;     ///< bracket expansions, reported separately from steps
  bool converged = false;
  bool fell_back = false; ///< fixed point handed over to bisection
  /// Accepted residuals of the fixed-point loop, starting with the initial guess.
  std::vector<double> residual_history;
};

/// Bisection with a bracket grown geometrically around `center`.
/// Stops once q(hi) - q(lo) <= tolerance and returns the endpoint with the
/// smaller residual; `forward` must have Direction::Forward.
RefineResult bisection_refine(const Integrand& g, const SolverConfig& forward, double y, double center,
                              const RefineConfig& rc);

/// Bisection whose bracket is centred on y itself.
RefineResult bisection_invert(const Integrand& g, const SolverConfig& forward, double y,
                              const RefineConfig& rc);

/// Damped fixed-point iteration x <- x - lambda (q(x) - y) / slope from x0.
RefineResult fixedpoint_refine(const Integrand& g, const SolverConfig& forward, double y, double x0,
                               const RefineConfig& rc);

/// Fixed-point iteration seeded with trapezoid_inverse_guess(g, y, 5).
RefineResult fixedpoint_invert(const Integrand& g, const SolverConfig& forward, double y,
                               const RefineConfig& rc);

/// Coarse explicit inverse: x = y - int_0^1 g(v(t), t) dt with the integral
/// taken by the trapezoid rule on `nodes` equispaced nodes, the trajectory
/// being marched backwards from v(1) = y with the same trapezoid (Heun) rule.
double trapezoid_inverse_guess(const Integrand& g, double y, int nodes = 5);

}  // namespace autm
