#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace autm {

struct GradcheckReport {
  std::string suite;
  int cases = 0;
  /// Gradient entries compared.
  long entries = 0;
  double max_rel_error = 0.0;
  /// Random cases redrawn because the trajectory left the guard box.
  int redrawn = 0;
};

/// |a - b| / max(|a|, |b|, 1e-4).
double relative_error(double a, double b);

/// forward_vjp (dx and the three parameter sensitivities of y and of
/// log_deriv) against central differences on random integrands.
GradcheckReport gradcheck_core(std::uint64_t seed, int cases = 100);
/// Conditioner vjp (inputs and parameters) on random plain and masked nets.
GradcheckReport gradcheck_conditioner(std::uint64_t seed, int cases = 50);
/// nll_and_grad on random small coupling and autoregressive flows.
GradcheckReport gradcheck_training(std::uint64_t seed, int cases = 20);

std::vector<GradcheckReport> gradcheck_all(std::uint64_t seed);

}  // namespace autm
