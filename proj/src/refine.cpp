#include "autm/refine.hpp"

#include <algorithm>
#include <cmath>

#include "autm/error.hpp"
#include "autm/map.hpp"

namespace autm {

std::string_view to_string(RefineMethod method) {
  switch (method) {
    case RefineMethod::Bisection: return "bisection";
    case RefineMethod::FixedPoint: return "fixed_point";
    case RefineMethod::ReverseIntegrationOnly: return "reverse_only";
  }
  return "unknown";
}

void RefineConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("refinement tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(bracket_half_width > 0.0)) throw ConfigError("bracket half width must be positive");
  if (!(bracket_expansion > 1.0)) throw ConfigError("bracket expansion factor must exceed 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (!(min_damping > 0.0 && min_damping <= damping)) throw ConfigError("min_damping must lie in (0, damping]");
}

namespace {

double eval_q(const Integrand& g, const SolverConfig& forward_cfg, double x) {
  return forward(g, forward_cfg, x).y;
}

// q is increasing, so a trajectory escaping the guard box stands for +-infinity.
double eval_q_extended(const Integrand& g, const SolverConfig& forward_cfg, double x) {
  try {
    return eval_q(g, forward_cfg, x);
  } catch (const DivergenceError& e) {
    return std::copysign(HUGE_VAL, e.value());
  }
}

}  // namespace

RefineResult bisection_refine(const Integrand& g, const SolverConfig& forward_cfg, double y, double center,
                              const RefineConfig& rc) {
  rc.validate();
  RefineResult r;

  double w_lo = rc.bracket_half_width;
  double lo = center - w_lo;
  double q_lo = eval_q_extended(g, forward_cfg, lo);
  while (q_lo > y) {
    if (r.expansions >= rc.max_expansions) throw NumericalError("bisection: no lower bracket found");
    w_lo *= rc.bracket_expansion;
    lo = center - w_lo;
    q_lo = eval_q_extended(g, forward_cfg, lo);
    ++r.expansions;
  }
  double w_hi = rc.bracket_half_width;
  double hi = center + w_hi;
  double q_hi = eval_q_extended(g, forward_cfg, hi);
  while (q_hi < y) {
    if (r.expansions >= rc.max_expansions) throw NumericalError("bisection: no upper bracket found");
    w_hi *= rc.bracket_expansion;
    hi = center + w_hi;
    q_hi = eval_q_extended(g, forward_cfg, hi);
    ++r.expansions;
  }

  while (q_hi - q_lo > rc.tolerance && r.steps < rc.max_bisection_steps) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted at double precision
    const double q_mid = eval_q_extended(g, forward_cfg, mid);
    ++r.steps;
    if (q_mid < y) {
      lo = mid;
      q_lo = q_mid;
    } else {
      hi = mid;
      q_hi = q_mid;
    }
  }
  const double r_lo = std::abs(q_lo - y), r_hi = std::abs(q_hi - y);
  r.x = r_lo <= r_hi ? lo : hi;
  r.residual = std::min(r_lo, r_hi);
  r.converged = r.residual <= rc.tolerance;
  return r;
}

RefineResult bisection_invert(const Integrand& g, const SolverConfig& forward_cfg, double y,
                              const RefineConfig& rc) {
  return bisection_refine(g, forward_cfg, y, y, rc);
}

RefineResult fixedpoint_refine(const Integrand& g, const SolverConfig& forward_cfg, double y, double x0,
                               const RefineConfig& rc) {
  rc.validate();
  RefineResult r;
  const MapResult start = forward(g, forward_cfg, x0);
  double x = x0;
  double res = start.y - y;
  const double slope = rc.slope_scaled ? std::exp(start.log_deriv) : 1.0;
  double lambda = rc.damping;
  r.residual_history.push_back(std::abs(res));

  while (std::abs(res) > rc.tolerance && r.steps < rc.max_iterations) {
    const double trial = x - lambda * res / slope;
    ++r.steps;
    double trial_res;
    try {
      trial_res = eval_q(g, forward_cfg, trial) - y;
    } catch (const DivergenceError&) {
      trial_res = HUGE_VAL;
    }
    if (std::abs(trial_res) > std::abs(res)) {
      // Reject the step; residuals of accepted iterates never grow.
      if (lambda > rc.min_damping) lambda = std::max(0.5 * lambda, rc.min_damping);
      continue;
    }
    x = trial;
    res = trial_res;
    r.residual_history.push_back(std::abs(res));
  }

  r.x = x;
  r.residual = std::abs(res);
  r.converged = r.residual <= rc.tolerance;
  if (!r.converged && rc.fallback_to_bisection) {
    RefineResult b = bisection_refine(g, forward_cfg, y, x, rc);
    r.fell_back = true;
    r.steps += b.steps;
    r.expansions += b.expansions;
    if (b.residual < r.residual) {
      r.x = b.x;
      r.residual = b.residual;
    }
    r.converged = r.residual <= rc.tolerance;
  }
  return r;
}

RefineResult fixedpoint_invert(const Integrand& g, const SolverConfig& forward_cfg, double y,
                               const RefineConfig& rc) {
  return fixedpoint_refine(g, forward_cfg, y, trapezoid_inverse_guess(g, y, 5), rc);
}

double trapezoid_inverse_guess(const Integrand& g, double y, int nodes) {
  if (nodes < 2) throw ConfigError("trapezoid guess needs at least two nodes");
  const int intervals = nodes - 1;
  const double h = 1.0 / intervals;
  // March v backwards from t = 1 with Heun's rule and accumulate the
  // trapezoid sum of g over the visited nodes.
  double v = y;
  double g_here = g.value(v, 1.0);
  double integral = 0.0;
  for (int i = 0; i < intervals; ++i) {
    const double t_next = 1.0 - static_cast<double>(i + 1) / intervals;
    const double v_pred = v - h * g_here;
    const double g_pred = g.value(v_pred, t_next);
    const double v_next = v - 0.5 * h * (g_here + g_pred);
    const double g_next = g.value(v_next, t_next);
    integral += 0.5 * h * (g_here + g_next);
    v = v_next;
    g_here = g_next;
  }
  const double x = y - integral;
  if (!std::isfinite(x)) throw NumericalError("trapezoid inverse guess is not finite");
  return x;
}

}  // namespace autm
