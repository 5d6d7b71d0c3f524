#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace autm {

enum class TargetKind { Affine, SoftplusShift, ArctanBlend, Custom };
std::string_view to_string(TargetKind kind);

/// A strictly increasing continuous target phi with a Lipschitz constant.
struct MonotoneTarget {
  TargetKind kind = TargetKind::Affine;
  std::function<double(double)> phi;
  double lipschitz = 1.0;
  std::string description;

  double operator()(double x) const { return phi(x); }

  /// phi(x) = alpha x + beta, alpha > 0.
  static MonotoneTarget affine(double alpha, double beta);
  /// phi(x) = log(1 + e^x) + 1/2.
  static MonotoneTarget softplus_shift();
  /// phi(x) = x / 2 + atan(2 x).
  static MonotoneTarget arctan_blend();
  static MonotoneTarget custom(std::function<double(double)> phi, double lipschitz, std::string description = "custom");

  /// True when phi is strictly increasing on an n-point grid over [lo, hi].
  bool increasing_on(double lo, double hi, int n = 201) const;
};

enum class KernelKind { Constant, GaussianNormalized };
std::string_view to_string(KernelKind kind);
KernelKind parse_kernel(std::string_view name);

/// Positive weight on [0, 1] with unit integral.
struct Kernel {
  KernelKind kind = KernelKind::Constant;
  double s = 1.0;
  /// Gaussian normalization C_s so that int_0^1 C_s e^{-t^2/s} dt = 1.
  double norm = 1.0;

  static Kernel constant(double s);
  /// C_s from the closed form int_0^1 e^{-t^2/s} dt = sqrt(pi s)/2 erf(1/sqrt(s)).
  static Kernel gaussian(double s);
  static Kernel make(KernelKind kind, double s);

  double operator()(double t) const;
  /// K(tau) = int_0^tau kappa(z) dz.
  double cumulative(double tau) const;
};

struct PicardConfig {
  /// Picard sweeps for v; sweep 1 starts from v = x.
  int iterations = 3;
  /// Composite trapezoid nodes over t in [0, 1] for the outer integral.
  int quadrature_nodes = 257;
  /// Geometric grid on [0, e^{-1/s}]: 0 plus inner_nodes - 1 points
  /// e^{-1/s} r^{-j}, j = 0..inner_nodes - 2.
  int inner_nodes = 65;
  double inner_ratio = 1.5;

  void validate() const;
};

struct QsResult {
  double value = 0.0;
  /// Sup-norm change of v between consecutive Picard sweeps on the inner grid.
  std::vector<double> iterate_diffs;
  /// e^{-1/s} underflowed and phi(x) was returned as the exact limit.
  bool fast_path = false;
};

/// q_s(x) = x + int_0^1 kappa_s(t) [phi(v(t e)) - v(t e)] dt with e = e^{-1/s},
/// where v(t) = x + int_0^t kappa_s(z) [phi(v(z e)) - v(z e)] dz is solved by
/// Picard iteration.
QsResult qs_eval_detailed(const MonotoneTarget& target, double s, KernelKind kernel, double x,
                          const PicardConfig& cfg = {});
double qs_eval(const MonotoneTarget& target, double s, KernelKind kernel, double x, const PicardConfig& cfg = {});

struct StudyRow {
  double s = 0.0;
  double inv_s = 0.0;
  double sup_error = 0.0;
  double log_error = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  /// b in log err ~ a - b / s; empty when some error is zero.
  std::optional<double> slope;
  double intercept = 0.0;
  /// Errors did not decrease along the s list (quadrature floor reached).
  bool non_monotone = false;
  std::vector<std::string> notes;
};

/// Sup error of q_s - phi over a grid of `grid` points on [lo, hi] for each s,
/// and the least-squares rate b.
StudyResult convergence_study(const MonotoneTarget& target, double lo, double hi, int grid,
                              const std::vector<double>& s_list, KernelKind kernel, const PicardConfig& cfg = {});

/// s,inv_s,sup_error,log_error
void write_study_csv(std::ostream& out, const StudyResult& study);
std::string study_summary(const StudyResult& study);

}  // namespace autm
