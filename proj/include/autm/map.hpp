#pragma once

#include <vector>

#include "autm/integrand.hpp"
#include "autm/refine.hpp"
#include "autm/solver.hpp"

namespace autm {

/// Result of integrating the latent dynamics v' = g(v, t).
struct MapResult {
  double y = 0.0;
  /// Integral of dg/dv along the trajectory, accumulated as an extra ODE state
  /// with the same scheme. For a Forward solve this is log q'(x).
  double log_deriv = 0.0;
  /// v at every solver node, only filled when requested.
  std::vector<double> trajectory;
};

/// Reverse-mode sensitivities of (y, log_deriv) contracted with cotangents.
struct Sensitivity {
  double dx = 0.0;
  Grad3 dparams{0.0, 0.0, 0.0};
};

/// Integrates in cfg.direction from v = start. Throws DivergenceError when
/// the trajectory leaves the guard box.
MapResult integrate(const Integrand& g, const SolverConfig& cfg, double start,
                    bool keep_trajectory = false);

/// q(x) = v(1) with v(0) = x. Requires a Forward config.
MapResult forward(const Integrand& g, const SolverConfig& cfg, double x, bool keep_trajectory = false);

/// q'(x) = exp(int_0^1 dg/dv dt); always positive.
double derivative(const Integrand& g, const SolverConfig& cfg, double x);

/// |q_N(x) - q_2N(x)| / (1 + |q_2N(x)|): how far the step count is from
/// resolving the trajectory. Infinite when the finer solve leaves the guard box.
double resolution_gap(const Integrand& g, const SolverConfig& cfg, double x);

struct InverseResult {
  double x = 0.0;
  /// Log-derivative of the reverse solve started at y (approximates -log q'(x)).
  double reverse_log_deriv = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Refinement used by inverse() unless told otherwise: slope-scaled fixed
/// point to |q(x) - y| <= 1e-12 in at most 15 iterations.
RefineConfig default_inverse_refine();

/// q^{-1}(y): reverse-time integration from v(1) = y with the same scheme and
/// step count, then refinement against the forward map. Requires a Reverse
/// config. Non-convergence is reported through the flag, not thrown.
InverseResult inverse(const Integrand& g, const SolverConfig& cfg, double y,
                      const RefineConfig& refine = default_inverse_refine());

/// Exact gradient of the discretized solve (in cfg.direction) started at
/// `start`: cot_y * d(y)/d(.) + cot_logdet * d(log_deriv)/d(.).
Sensitivity integrate_vjp(const Integrand& g, const SolverConfig& cfg, double start, double cot_y,
                          double cot_logdet);

/// integrate_vjp restricted to Forward configs.
Sensitivity forward_vjp(const Integrand& g, const SolverConfig& cfg, double x, double cot_y,
                        double cot_logdet);

}  // namespace autm
