#include "autm/universality.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <sstream>

#include "autm/dataset.hpp"
#include "autm/error.hpp"

namespace autm {

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Affine: return "affine";
    case TargetKind::SoftplusShift: return "softplus";
    case TargetKind::ArctanBlend: return "arctan";
    case TargetKind::Custom: return "custom";
  }
  return "unknown";
}

MonotoneTarget MonotoneTarget::affine(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw ConfigError("affine target needs a finite alpha > 0 and finite beta");
  std::ostringstream d;
  d << "phi(x) = " << alpha << " x + " << beta;
  return {TargetKind::Affine, [alpha, beta](double x) { return alpha * x + beta; }, alpha, d.str()};
}

MonotoneTarget MonotoneTarget::softplus_shift() {
  return {TargetKind::SoftplusShift,
          [](double x) { return (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x))) + 0.5; }, 1.0,
          "phi(x) = log(1 + e^x) + 1/2"};
}

MonotoneTarget MonotoneTarget::arctan_blend() {
  return {TargetKind::ArctanBlend, [](double x) { return 0.5 * x + std::atan(2.0 * x); }, 2.5,
          "phi(x) = x/2 + atan(2x)"};
}

MonotoneTarget MonotoneTarget::custom(std::function<double(double)> phi, double lipschitz, std::string description) {
  if (!phi) throw ConfigError("custom target needs a callable");
  return {TargetKind::Custom, std::move(phi), lipschitz, std::move(description)};
}

bool MonotoneTarget::increasing_on(double lo, double hi, int n) const {
  double prev = phi(lo);
  for (int i = 1; i < n; ++i) {
    const double cur = phi(lo + (hi - lo) * i / (n - 1));
    if (!(cur > prev)) return false;
    prev = cur;
  }
  return true;
}

std::string_view to_string(KernelKind kind) { return kind == KernelKind::Constant ? "constant" : "gaussian"; }

KernelKind parse_kernel(std::string_view name) {
  if (name == "constant") return KernelKind::Constant;
  if (name == "gaussian") return KernelKind::GaussianNormalized;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

Kernel Kernel::constant(double s) { return {KernelKind::Constant, s, 1.0}; }

Kernel Kernel::gaussian(double s) {
  if (!(s > 0.0)) throw ConfigError("kernel scale must be positive");
  const double mass = 0.5 * std::sqrt(std::numbers::pi * s) * std::erf(1.0 / std::sqrt(s));
  return {KernelKind::GaussianNormalized, s, 1.0 / mass};
}

Kernel Kernel::make(KernelKind kind, double s) { return kind == KernelKind::Constant ? constant(s) : gaussian(s); }

double Kernel::operator()(double t) const {
  return kind == KernelKind::Constant ? 1.0 : norm * std::exp(-t * t / s);
}

double Kernel::cumulative(double tau) const {
  if (kind == KernelKind::Constant) return tau;
  return norm * 0.5 * std::sqrt(std::numbers::pi * s) * std::erf(tau / std::sqrt(s));
}

void PicardConfig::validate() const {
  if (iterations < 1) throw ConfigError("Picard iterations must be >= 1");
  if (quadrature_nodes < 2 || inner_nodes < 2) throw ConfigError("node counts must be >= 2");
  if (!(inner_ratio > 1.0)) throw ConfigError("inner grid ratio must exceed 1");
}

namespace {

// v on [0, eps] stored as x + F(x) K(tau) + delta(tau), delta interpolated
// by the cubic through the four nearest grid nodes.
struct InnerSolution {
  std::vector<double> tau;
  std::vector<double> delta;
  double x = 0.0;
  double f0 = 0.0;
  const Kernel* kernel = nullptr;

  double operator()(double t) const {
    double d = 0.0;
    if (t >= tau.back()) {
      d = delta.back();
    } else if (t > 0.0) {
      const auto it = std::upper_bound(tau.begin(), tau.end(), t);
      const auto n = tau.size();
      const auto j = static_cast<std::size_t>(it - tau.begin());
      std::size_t lo = j >= 2 ? j - 2 : 0;
      if (lo + 4 > n) lo = n >= 4 ? n - 4 : 0;
      const std::size_t hi = std::min(n, lo + 4);
      for (std::size_t a = lo; a < hi; ++a) {
        double w = 1.0;
        for (std::size_t b = lo; b < hi; ++b)
          if (b != a) w *= (t - tau[b]) / (tau[a] - tau[b]);
        d += w * delta[a];
      }
    }
    return x + f0 * kernel->cumulative(t) + d;
  }
};

}  // namespace

QsResult qs_eval_detailed(const MonotoneTarget& target, double s, KernelKind kernel_kind, double x,
                          const PicardConfig& cfg) {
  if (!(s > 0.0)) throw ConfigError("scale s must be positive");
  if (!std::isfinite(x)) throw ConfigError("x must be finite");
  cfg.validate();
  QsResult out;
  const double phi_x = target(x);
  const double eps = std::exp(-1.0 / s);
  if (eps < DBL_MIN) {
    out.value = phi_x;
    out.fast_path = true;
    return out;
  }

  const Kernel kernel = Kernel::make(kernel_kind, s);
  auto F = [&](double v) { return target(v) - v; };

  InnerSolution v;
  v.x = x;
  v.f0 = phi_x - x;
  v.kernel = &kernel;
  const auto M = static_cast<std::size_t>(cfg.inner_nodes);
  v.tau.assign(M, 0.0);
  for (std::size_t j = 1; j < M; ++j)
    v.tau[j] = eps * std::pow(cfg.inner_ratio, -static_cast<double>(M - 1 - j));
  v.delta.assign(M, 0.0);

  // Sweep 1 from v = x is exact: x + F(x) K(tau).
  out.iterate_diffs.push_back(std::abs(v.f0) * kernel.cumulative(eps));

  auto h = [&](double z) { return kernel(z) * (F(v(z * eps)) - v.f0); };
  std::vector<double> next(M, 0.0);
  for (int sweep = 2; sweep <= cfg.iterations; ++sweep) {
    for (std::size_t j = 1; j < M; ++j) {
      const double a = v.tau[j - 1], b = v.tau[j];
      next[j] = next[j - 1] + (b - a) / 6.0 * (h(a) + 4.0 * h(0.5 * (a + b)) + h(b));
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < M; ++j) diff = std::max(diff, std::abs(next[j] - v.delta[j]));
    v.delta.swap(next);
    out.iterate_diffs.push_back(diff);
  }

  // q_s(x) - phi(x) = int_0^1 kappa(t) [F(v(t eps)) - F(x)] dt, using int kappa = 1.
  const int n = cfg.quadrature_nodes;
  const double dt = 1.0 / (n - 1);
  double dev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    dev += w * h(i * dt);
  }
  out.value = phi_x + dt * dev;
  if (!std::isfinite(out.value)) throw NumericalError("q_s evaluation is not finite");
  return out;
}

double qs_eval(const MonotoneTarget& target, double s, KernelKind kernel, double x, const PicardConfig& cfg) {
  return qs_eval_detailed(target, s, kernel, x, cfg).value;
}

StudyResult convergence_study(const MonotoneTarget& target, double lo, double hi, int grid,
                              const std::vector<double>& s_list, KernelKind kernel, const PicardConfig& cfg) {
  if (s_list.size() < 4) throw ConfigError("convergence study needs at least 4 values of s");
  if (!(hi > lo) || grid < 2) throw ConfigError("study interval must satisfy lo < hi with >= 2 grid points");
  if (!target.increasing_on(lo, hi, grid)) throw ConfigError("target is not strictly increasing on the interval");

  StudyResult out;
  for (double s : s_list) {
    StudyRow row;
    row.s = s;
    row.inv_s = 1.0 / s;
    for (int i = 0; i < grid; ++i) {
      const double x = lo + (hi - lo) * i / (grid - 1);
      row.sup_error = std::max(row.sup_error, std::abs(qs_eval(target, s, kernel, x, cfg) - target(x)));
    }
    row.log_error = std::log(row.sup_error);
    out.rows.push_back(row);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (!(out.rows[i].sup_error < out.rows[i - 1].sup_error)) out.non_monotone = true;

  const bool any_zero = std::any_of(out.rows.begin(), out.rows.end(), [](const StudyRow& r) { return r.sup_error == 0.0; });
  if (any_zero) {
    out.notes.push_back("some errors are exactly zero; slope undefined");
  } else {
    double mx = 0.0, my = 0.0;
    for (const auto& r : out.rows) {
      mx += r.inv_s;
      my += r.log_error;
    }
    const auto n = static_cast<double>(out.rows.size());
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : out.rows) {
      sxy += (r.inv_s - mx) * (r.log_error - my);
      sxx += (r.inv_s - mx) * (r.inv_s - mx);
    }
    if (sxx > 0.0) {
      out.slope = -sxy / sxx;
      out.intercept = my + *out.slope * mx;
    } else {
      out.notes.push_back("all s values coincide; slope undefined");
    }
  }
  if (out.non_monotone && !any_zero)
    out.notes.push_back("errors do not decrease monotonically; quadrature floor likely reached");
  return out;
}

void write_study_csv(std::ostream& out, const StudyResult& study) {
  out << "s,inv_s,sup_error,log_error\n";
  for (const auto& r : study.rows)
    out << format_double(r.s) << ',' << format_double(r.inv_s) << ',' << format_double(r.sup_error) << ','
        << format_double(r.log_error) << '\n';
}

std::string study_summary(const StudyResult& study) {
  std::ostringstream s;
  if (study.slope)
    s << "fitted slope b = " << *study.slope << " (log err ~ " << study.intercept << " - b/s)";
  else
    s << "fitted slope b = undefined";
  for (const auto& note : study.notes) s << "; " << note;
  return s.str();
}

}  // namespace autm
