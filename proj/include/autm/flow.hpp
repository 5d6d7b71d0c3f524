#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "autm/conditioner.hpp"
#include "autm/integrand.hpp"
#include "autm/map.hpp"
#include "autm/matrix.hpp"
#include "autm/solver.hpp"

namespace autm {

/// Which block a coupling layer transforms. With split d:
///   Upper: y[0:d] = x[0:d], y[d:D] = q(x[d:D]; theta(x[0:d]))
///   Lower: y[0:d] = q(x[0:d]; theta(x[d:D])), y[d:D] = x[d:D]
enum class CouplingSide { Upper, Lower };

struct CouplingLayer {
  int dim = 0;
  int split = 0;
  CouplingSide side = CouplingSide::Upper;
  Family family = Family::Quadratic;
  SolverConfig solver;
  /// When positive, the net's third output r becomes c = c_bound tanh(r / c_bound).
  double c_bound = 0.0;
  /// pass-through block -> 3 coefficients (a, b, c) per transformed coordinate
  ConditionerNet net;

  std::vector<int> pass_indices() const;
  std::vector<int> transformed_indices() const;
};

/// Coordinate k is transformed with coefficients from output block k of a
/// masked net, which only sees coordinates 0..k-1.
struct AutoregressiveLayer {
  int dim = 0;
  Family family = Family::Quadratic;
  SolverConfig solver;
  double c_bound = 0.0;
  ConditionerNet net;
};

/// y[i] = x[perm[i]], perm zero-based.
struct PermutationLayer {
  std::vector<int> perm;
};

using Layer = std::variant<CouplingLayer, AutoregressiveLayer, PermutationLayer>;

/// Composition of layers applied in order to a standard-normal base sample.
struct FlowModel {
  int dim = 0;
  std::vector<Layer> layers;

  /// Conditioner parameters of every parametrized layer, in layer order.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::size_t num_params() const;
  /// Throws ConfigError when a layer disagrees with dim or is malformed.
  void validate() const;
};

enum class LayerKind { Coupling, Autoregressive };
std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// Recipe for build_flow().
struct Architecture {
  LayerKind kind = LayerKind::Coupling;
  int autm_layers = 4;
  Family family = Family::Quadratic;
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::Tanh;
  SolverConfig solver;
  /// Coupling split d; 0 picks floor(D / 2).
  int split = 0;
  /// Insert a seeded random permutation between consecutive AUTM layers.
  bool permutations = true;
  /// Bound on |c| for every AUTM layer (0 leaves c unbounded). Quadratic and
  /// cubic fields with large |c| are not onto R, and data beyond their range
  /// make the reverse solve leave the guard box.
  double c_bound = 0.1;
};

CouplingLayer make_coupling_layer(int dim, int split, CouplingSide side, Family family, const std::vector<int>& hidden,
                                  Activation activation, const SolverConfig& solver, std::uint64_t seed);
AutoregressiveLayer make_autoregressive_layer(int dim, Family family, const std::vector<int>& hidden,
                                              Activation activation, const SolverConfig& solver, std::uint64_t seed);
PermutationLayer make_permutation_layer(int dim, std::uint64_t seed);

/// Coupling layers alternate Upper/Lower sides. Every conditioner starts with
/// a zero output layer, so the initial flow only permutes coordinates (it is
/// the identity without permutations) and its density is the base density.
FlowModel build_flow(int dim, const Architecture& arch, std::uint64_t seed);

struct LayerOutput {
  std::vector<double> values;
  /// log|det J| of the map that produced `values`.
  double logdet = 0.0;
};

/// y = F(x) and log|det dF/dx|.
LayerOutput layer_forward(const Layer& layer, std::span<const double> x);

struct LayerInverse {
  std::vector<double> x;
  bool converged = true;
  std::vector<int> unconverged_coordinates;
  int max_iterations = 0;
};

/// x = F^{-1}(y) by reverse-time integration plus refinement per coordinate.
LayerInverse layer_inverse(const Layer& layer, std::span<const double> y,
                           const RefineConfig& refine = default_inverse_refine());

/// Reverse-time integration only: x and log|det dx/dy| accumulated along the
/// reverse trajectories. This is the path used for densities and training.
LayerOutput layer_reverse(const Layer& layer, std::span<const double> y);

/// Reverse-mode gradient of layer_reverse. Adds cot_x . dx/dy + cot_logdet *
/// dlogdet/dy into cot_y and the parameter gradient into dparams (empty span
/// for permutation layers).
void layer_reverse_vjp(const Layer& layer, std::span<const double> y, std::span<const double> cot_x,
                       double cot_logdet, std::span<double> cot_y, std::span<double> dparams);

/// Full forward pass; logdet is the sum of per-layer logdets.
LayerOutput flow_forward(const FlowModel& model, std::span<const double> x);

struct FlowInverse {
  std::vector<double> x;
  bool converged = true;
  int max_iterations = 0;
};
FlowInverse flow_inverse(const FlowModel& model, std::span<const double> y,
                         const RefineConfig& refine = default_inverse_refine());

enum class DensityPath {
  /// Pull back with refined inverses, then re-evaluate forward logdets. This
  /// is the density of sample(); points outside the image of the forward map
  /// fail to invert and raise NumericalError.
  Refined,
  /// Pull back by reverse-time integration; log-determinants from the
  /// reverse trajectories (one solve per coordinate per layer). This is the
  /// training objective. It agrees with Refined to discretization accuracy
  /// inside the image but assigns spurious mass near its boundary.
  ReverseIntegration,
};

double standard_normal_log_density(std::span<const double> x);

/// log p_Y(y) = log N(x; 0, I) + log|det dx/dy|.
double log_density(const FlowModel& model, std::span<const double> y, DensityPath path = DensityPath::Refined);

/// n seeded standard-normal draws pushed through the forward map.
Matrix sample(const FlowModel& model, std::size_t n, std::uint64_t seed);

/// The n x D base draws sample() would use for this seed.
Matrix base_draws(int dim, std::size_t n, std::uint64_t seed);

}  // namespace autm
