#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string_view>

namespace autm {

/// Parametric form of the latent velocity g(v, t).
///
///   Quadratic      g = a v + b + c v^2
///   Cubic          g = a v + b + c v^3
///   SigmoidAffine  g = a v + b + c sigmoid(v)
///   Custom         user callbacks
enum class Family { Quadratic, Cubic, SigmoidAffine, Custom };

std::string_view to_string(Family family);
/// Accepts "quadratic", "cubic", "sigmoid"/"sigmoid_affine". Throws ConfigError otherwise.
Family parse_family(std::string_view name);

struct Coeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

using Grad3 = std::array<double, 3>;

/// Callbacks for a user-supplied integrand. value and dv are required; the
/// remaining three are only needed by the sensitivity (vjp) routines.
struct CustomIntegrand {
  using Scalar = std::function<double(double v, double t, const Coeffs&)>;
  using Vector = std::function<Grad3(double v, double t, const Coeffs&)>;

  Scalar value;
  Scalar dv;
  Scalar dvv;
  Vector dparams;
  Vector dv_dparams;
};

/// Immutable integrand: family plus coefficient triple.
class Integrand {
 public:
  /// Built-in family. Throws ConfigError for Family::Custom or non-finite coefficients.
  Integrand(Family family, Coeffs coeffs);
  Integrand(std::shared_ptr<const CustomIntegrand> custom, Coeffs coeffs);

  static Integrand quadratic(double a, double b, double c) { return {Family::Quadratic, {a, b, c}}; }
  static Integrand cubic(double a, double b, double c) { return {Family::Cubic, {a, b, c}}; }
  static Integrand sigmoid_affine(double a, double b, double c) { return {Family::SigmoidAffine, {a, b, c}}; }

  Family family() const { return family_; }
  const Coeffs& coeffs() const { return coeffs_; }
  /// Built-in families are explicit in v only.
  bool time_dependent() const { return family_ == Family::Custom; }

  double value(double v, double t) const;
  double dv(double v, double t) const;
  double dvv(double v, double t) const;
  /// (dg/da, dg/db, dg/dc)
  Grad3 dparams(double v, double t) const;
  /// d/d(a,b,c) of dg/dv
  Grad3 dv_dparams(double v, double t) const;

 private:
  Family family_;
  Coeffs coeffs_;
  std::shared_ptr<const CustomIntegrand> custom_;
};

/// g(v, t), throwing NumericalError when the result is not finite.
double eval_integrand(const Integrand& g, double v, double t);
/// dg/dv(v, t), same error behaviour as eval_integrand.
double eval_integrand_dv(const Integrand& g, double v, double t);

/// Numerically stable logistic function.
double sigmoid(double v);

}  // namespace autm
