#include "autm/map.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "autm/error.hpp"

namespace autm {

std::string_view to_string(Scheme scheme) { return scheme == Scheme::RK4 ? "rk4" : "euler"; }

Scheme parse_scheme(std::string_view name) {
  if (name == "rk4") return Scheme::RK4;
  if (name == "euler") return Scheme::Euler;
  throw ConfigError("unknown solver scheme '" + std::string(name) + "'");
}

void SolverConfig::validate() const {
  if (steps < 1) throw ConfigError("solver steps must be >= 1");
  if (!(guard > 0.0)) throw ConfigError("guard box must be positive");
}

namespace {

// !(|v| <= limit) also catches NaN.
inline void check_guard(double v, double limit, double t) {
  if (!(std::abs(v) <= limit)) throw DivergenceError(v, t);
}

constexpr double kRk4Weights[4] = {1.0, 2.0, 2.0, 1.0};

}  // namespace

MapResult integrate(const Integrand& g, const SolverConfig& cfg, double start, bool keep_trajectory) {
  cfg.validate();
  const double h = cfg.step();
  const int n = cfg.steps;

  MapResult r;
  double v = start;
  double ell = 0.0;
  check_guard(v, cfg.guard, cfg.node_time(0));
  if (keep_trajectory) {
    r.trajectory.reserve(static_cast<std::size_t>(n) + 1);
    r.trajectory.push_back(v);
  }

  for (int i = 0; i < n; ++i) {
    const double t = cfg.node_time(i);
    if (cfg.scheme == Scheme::Euler) {
      const double k = g.value(v, t);
      const double l = g.dv(v, t);
      v += h * k;
      ell += h * l;
    } else {
      const double tm = t + 0.5 * h;
      const double t1 = cfg.node_time(i + 1);
      const double k1 = g.value(v, t), l1 = g.dv(v, t);
      const double v2 = v + 0.5 * h * k1;
      const double k2 = g.value(v2, tm), l2 = g.dv(v2, tm);
      const double v3 = v + 0.5 * h * k2;
      const double k3 = g.value(v3, tm), l3 = g.dv(v3, tm);
      const double v4 = v + h * k3;
      const double k4 = g.value(v4, t1), l4 = g.dv(v4, t1);
      v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ell += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    check_guard(v, cfg.guard, cfg.node_time(i + 1));
    if (!std::isfinite(ell)) throw DivergenceError(v, cfg.node_time(i + 1));
    if (keep_trajectory) r.trajectory.push_back(v);
  }
  r.y = v;
  r.log_deriv = ell;
  return r;
}

MapResult forward(const Integrand& g, const SolverConfig& cfg, double x, bool keep_trajectory) {
  if (cfg.direction != Direction::Forward) throw ConfigError("forward() needs a Forward solver config");
  return integrate(g, cfg, x, keep_trajectory);
}

double derivative(const Integrand& g, const SolverConfig& cfg, double x) {
  return std::exp(forward(g, cfg, x).log_deriv);
}

double resolution_gap(const Integrand& g, const SolverConfig& cfg, double x) {
  SolverConfig fine = cfg;
  fine.steps = 2 * cfg.steps;
  try {
    const double coarse = integrate(g, cfg, x).y;
    const double y = integrate(g, fine, x).y;
    return std::abs(coarse - y) / (1.0 + std::abs(y));
  } catch (const DivergenceError&) {
    return HUGE_VAL;
  }
}

RefineConfig default_inverse_refine() { return RefineConfig{}; }

InverseResult inverse(const Integrand& g, const SolverConfig& cfg, double y, const RefineConfig& refine) {
  if (cfg.direction != Direction::Reverse) throw ConfigError("inverse() needs a Reverse solver config");
  refine.validate();
  const SolverConfig fwd = cfg.reversed();
  InverseResult out;
  MapResult rev;
  try {
    rev = integrate(g, cfg, y);
  } catch (const DivergenceError&) {
    if (refine.method == RefineMethod::ReverseIntegrationOnly) throw;
    // The reverse march can overshoot where q is very steep. A finer reverse
    // march only supplies the starting point; refinement still targets the
    // forward map at cfg.steps.
    bool found = false;
    for (int factor = 4; factor <= 256 && !found; factor *= 4) {
      SolverConfig fine = cfg;
      fine.steps = cfg.steps * factor;
      try {
        rev = integrate(g, fine, y);
        found = true;
      } catch (const DivergenceError&) {
      }
    }
    if (!found) {
      const RefineResult rr = bisection_refine(g, fwd, y, y, refine);
      out.x = rr.x;
      out.reverse_log_deriv = std::numeric_limits<double>::quiet_NaN();
      out.residual = rr.residual;
      out.iterations = rr.steps;
      out.converged = rr.converged;
      return out;
    }
  }
  out.reverse_log_deriv = rev.log_deriv;
  switch (refine.method) {
    case RefineMethod::ReverseIntegrationOnly: {
      out.x = rev.y;
      out.residual = std::abs(forward(g, fwd, rev.y).y - y);
      out.converged = out.residual <= refine.tolerance;
      return out;
    }
    case RefineMethod::FixedPoint:
    case RefineMethod::Bisection: {
      const RefineResult rr = refine.method == RefineMethod::FixedPoint
                                  ? fixedpoint_refine(g, fwd, y, rev.y, refine)
                                  : bisection_refine(g, fwd, y, rev.y, refine);
      out.x = rr.x;
      out.residual = rr.residual;
      out.iterations = rr.steps;
      out.converged = rr.converged;
      return out;
    }
  }
  return out;
}

Sensitivity integrate_vjp(const Integrand& g, const SolverConfig& cfg, double start, double cot_y,
                          double cot_logdet) {
  const MapResult fwd = integrate(g, cfg, start, /*keep_trajectory=*/true);
  const double h = cfg.step();
  const double lbar = cot_logdet;  // the log-derivative state feeds nothing back
  double vbar = cot_y;
  Grad3 pbar{0.0, 0.0, 0.0};

  auto add_param = [&pbar](const Grad3& dg, const Grad3& dgv, double cv, double cl) {
    for (int j = 0; j < 3; ++j) pbar[j] += cv * dg[j] + cl * dgv[j];
  };

  for (int i = cfg.steps - 1; i >= 0; --i) {
    const double t = cfg.node_time(i);
    const double v = fwd.trajectory[static_cast<std::size_t>(i)];
    if (cfg.scheme == Scheme::Euler) {
      const double cv = h * vbar, cl = h * lbar;
      add_param(g.dparams(v, t), g.dv_dparams(v, t), cv, cl);
      vbar += cv * g.dv(v, t) + cl * g.dvv(v, t);
      continue;
    }
    const double tm = t + 0.5 * h;
    const double t1 = cfg.node_time(i + 1);
    const double k1 = g.value(v, t);
    const double v2 = v + 0.5 * h * k1;
    const double k2 = g.value(v2, tm);
    const double v3 = v + 0.5 * h * k2;
    const double k3 = g.value(v3, tm);
    const double v4 = v + h * k3;
    const double stage_v[4] = {v, v2, v3, v4};
    const double stage_t[4] = {t, tm, tm, t1};
    // How much each stage slope feeds into the next stage's state.
    const double feed[4] = {0.0, 0.5 * h, 0.5 * h, h};

    double kbar[4], klbar[4];
    for (int s = 0; s < 4; ++s) {
      kbar[s] = kRk4Weights[s] * h / 6.0 * vbar;
      klbar[s] = kRk4Weights[s] * h / 6.0 * lbar;
    }
    double vacc = 0.0;
    for (int s = 3; s >= 0; --s) {
      const double sv = stage_v[s], st = stage_t[s];
      const double stage_bar = kbar[s] * g.dv(sv, st) + klbar[s] * g.dvv(sv, st);
      add_param(g.dparams(sv, st), g.dv_dparams(sv, st), kbar[s], klbar[s]);
      vacc += stage_bar;
      if (s > 0) kbar[s - 1] += feed[s] * stage_bar;
    }
    vbar += vacc;
  }
  return {vbar, pbar};
}

Sensitivity forward_vjp(const Integrand& g, const SolverConfig& cfg, double x, double cot_y,
                        double cot_logdet) {
  if (cfg.direction != Direction::Forward) throw ConfigError("forward_vjp() needs a Forward solver config");
  return integrate_vjp(g, cfg, x, cot_y, cot_logdet);
}

}  // namespace autm
