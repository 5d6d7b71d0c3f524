#pragma once

#include <string_view>

namespace autm {

enum class Scheme { RK4, Euler };
enum class Direction { Forward, Reverse };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

/// Fixed-step integration over the unit latent-time interval.
///
/// Forward runs t: 0 -> 1, Reverse runs t: 1 -> 0 with the same nodes, so the
/// two directions share one discretization and differ only in the sign of h.
struct SolverConfig {
  Scheme scheme = Scheme::RK4;
  int steps = 16;
  Direction direction = Direction::Forward;
  /// Guard box: |v| > guard aborts with DivergenceError.
  double guard = 1e6;

  /// Signed step size, +-1/steps.
  double step() const { return (direction == Direction::Forward ? 1.0 : -1.0) / steps; }
  /// Latent time of node i (0 <= i <= steps).
  double node_time(int i) const {
    return direction == Direction::Forward ? static_cast<double>(i) / steps
                                           : static_cast<double>(steps - i) / steps;
  }
  SolverConfig reversed() const {
    SolverConfig r = *this;
    r.direction = direction == Direction::Forward ? Direction::Reverse : Direction::Forward;
    return r;
  }
  SolverConfig with_direction(Direction d) const {
    SolverConfig r = *this;
    r.direction = d;
    return r;
  }
  /// Throws ConfigError unless steps >= 1 and guard > 0.
  void validate() const;
};

}  // namespace autm
