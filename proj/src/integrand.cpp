#include "autm/integrand.hpp"

#include <cmath>
#include <string>

#include "autm/error.hpp"

namespace autm {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Quadratic: return "quadratic";
    case Family::Cubic: return "cubic";
    case Family::SigmoidAffine: return "sigmoid";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "quadratic") return Family::Quadratic;
  if (name == "cubic") return Family::Cubic;
  if (name == "sigmoid" || name == "sigmoid_affine") return Family::SigmoidAffine;
  throw ConfigError("unknown integrand family '" + std::string(name) + "'");
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

namespace {

void check_finite(const Coeffs& c) {
  if (!std::isfinite(c.a) || !std::isfinite(c.b) || !std::isfinite(c.c))
    throw ConfigError("integrand coefficients must be finite");
}

}  // namespace

Integrand::Integrand(Family family, Coeffs coeffs) : family_(family), coeffs_(coeffs) {
  if (family == Family::Custom) throw ConfigError("custom integrands need callbacks");
  check_finite(coeffs_);
}

Integrand::Integrand(std::shared_ptr<const CustomIntegrand> custom, Coeffs coeffs)
    : family_(Family::Custom), coeffs_(coeffs), custom_(std::move(custom)) {
  if (!custom_ || !custom_->value || !custom_->dv)
    throw ConfigError("custom integrand requires value and dv callbacks");
  check_finite(coeffs_);
}

// The built-in families share the form a v + b + c h(v); only h differs.

double Integrand::value(double v, double t) const {
  const auto& [a, b, c] = coeffs_;
  switch (family_) {
    case Family::Quadratic: return a * v + b + c * v * v;
    case Family::Cubic: return a * v + b + c * v * v * v;
    case Family::SigmoidAffine: return a * v + b + c * sigmoid(v);
    case Family::Custom: return custom_->value(v, t, coeffs_);
  }
  return 0.0;
}

double Integrand::dv(double v, double t) const {
  const auto& [a, b, c] = coeffs_;
  switch (family_) {
    case Family::Quadratic: return a + 2.0 * c * v;
    case Family::Cubic: return a + 3.0 * c * v * v;
    case Family::SigmoidAffine: {
      const double s = sigmoid(v);
      return a + c * s * (1.0 - s);
    }
    case Family::Custom: return custom_->dv(v, t, coeffs_);
  }
  return 0.0;
}

double Integrand::dvv(double v, double t) const {
  const double c = coeffs_.c;
  switch (family_) {
    case Family::Quadratic: return 2.0 * c;
    case Family::Cubic: return 6.0 * c * v;
    case Family::SigmoidAffine: {
      const double s = sigmoid(v);
      return c * s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Family::Custom:
      if (!custom_->dvv) throw ConfigError("custom integrand lacks dvv callback");
      return custom_->dvv(v, t, coeffs_);
  }
  return 0.0;
}

Grad3 Integrand::dparams(double v, double t) const {
  switch (family_) {
    case Family::Quadratic: return {v, 1.0, v * v};
    case Family::Cubic: return {v, 1.0, v * v * v};
    case Family::SigmoidAffine: return {v, 1.0, sigmoid(v)};
    case Family::Custom:
      if (!custom_->dparams) throw ConfigError("custom integrand lacks dparams callback");
      return custom_->dparams(v, t, coeffs_);
  }
  return {};
}

Grad3 Integrand::dv_dparams(double v, double t) const {
  switch (family_) {
    case Family::Quadratic: return {1.0, 0.0, 2.0 * v};
    case Family::Cubic: return {1.0, 0.0, 3.0 * v * v};
    case Family::SigmoidAffine: {
      const double s = sigmoid(v);
      return {1.0, 0.0, s * (1.0 - s)};
    }
    case Family::Custom:
      if (!custom_->dv_dparams) throw ConfigError("custom integrand lacks dv_dparams callback");
      return custom_->dv_dparams(v, t, coeffs_);
  }
  return {};
}

double eval_integrand(const Integrand& g, double v, double t) {
  const double r = g.value(v, t);
  if (!std::isfinite(r)) throw NumericalError("integrand value is not finite");
  return r;
}

double eval_integrand_dv(const Integrand& g, double v, double t) {
  const double r = g.dv(v, t);
  if (!std::isfinite(r)) throw NumericalError("integrand derivative is not finite");
  return r;
}

}  // namespace autm
