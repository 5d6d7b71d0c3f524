#include "autm/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "autm/error.hpp"

namespace autm {

std::string_view to_string(LayerKind kind) { return kind == LayerKind::Coupling ? "coupling" : "autoregressive"; }

LayerKind parse_layer_kind(std::string_view name) {
  if (name == "coupling") return LayerKind::Coupling;
  if (name == "autoregressive" || name == "ar") return LayerKind::Autoregressive;
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

std::vector<int> CouplingLayer::pass_indices() const {
  std::vector<int> idx;
  const bool upper = side == CouplingSide::Upper;
  for (int i = 0; i < dim; ++i)
    if ((i < split) == upper) idx.push_back(i);
  return idx;
}

std::vector<int> CouplingLayer::transformed_indices() const {
  std::vector<int> idx;
  const bool upper = side == CouplingSide::Upper;
  for (int i = 0; i < dim; ++i)
    if ((i < split) != upper) idx.push_back(i);
  return idx;
}

namespace {

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

double bounded_c(double raw, double bound) { return bound > 0.0 ? bound * std::tanh(raw / bound) : raw; }

double bounded_c_slope(double raw, double bound) {
  if (!(bound > 0.0)) return 1.0;
  const double t = std::tanh(raw / bound);
  return 1.0 - t * t;
}

Integrand coordinate_integrand(Family family, double c_bound, std::span<const double> theta, std::size_t block) {
  const double a = theta[3 * block], b = theta[3 * block + 1], c = theta[3 * block + 2];
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
    throw NumericalError("conditioner produced non-finite integrand coefficients");
  return Integrand(family, Coeffs{a, b, bounded_c(c, c_bound)});
}

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void check_size(std::size_t got, int dim, const char* what) {
  if (static_cast<int>(got) != dim)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(dim) + " values, got " + std::to_string(got));
}

std::vector<double> gather(std::span<const double> v, const std::vector<int>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = v[static_cast<std::size_t>(idx[k])];
  return out;
}

// Runs fn and tags any divergence with the coordinate index.
template <class Fn>
auto on_coordinate(int coordinate, Fn&& fn) {
  try {
    return fn();
  } catch (DivergenceError& e) {
    e.set_coordinate(coordinate);
    throw;
  }
}

}  // namespace

CouplingLayer make_coupling_layer(int dim, int split, CouplingSide side, Family family, const std::vector<int>& hidden,
                                  Activation activation, const SolverConfig& solver, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("coupling layers need dim >= 2");
  if (split < 1 || split >= dim) throw ConfigError("coupling split must satisfy 1 <= d < D");
  CouplingLayer layer;
  layer.dim = dim;
  layer.split = split;
  layer.side = side;
  layer.family = family;
  layer.solver = solver.with_direction(Direction::Forward);
  const int n_pass = side == CouplingSide::Upper ? split : dim - split;
  const int n_trans = dim - n_pass;
  layer.net = ConditionerNet(with_io(n_pass, hidden, 3 * n_trans), activation);
  layer.net.initialize(seed);
  return layer;
}

AutoregressiveLayer make_autoregressive_layer(int dim, Family family, const std::vector<int>& hidden,
                                              Activation activation, const SolverConfig& solver, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("autoregressive layers need dim >= 1");
  AutoregressiveLayer layer;
  layer.dim = dim;
  layer.family = family;
  layer.solver = solver.with_direction(Direction::Forward);
  const auto ordering = identity_ordering(dim);
  layer.net = ConditionerNet(with_io(dim, hidden, 3 * dim), activation, build_masks(dim, hidden, ordering));
  layer.net.initialize(seed);
  return layer;
}

PermutationLayer make_permutation_layer(int dim, std::uint64_t seed) {
  PermutationLayer layer;
  layer.perm.resize(static_cast<std::size_t>(dim));
  std::iota(layer.perm.begin(), layer.perm.end(), 0);
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates so the result does not depend on the library's shuffle.
  for (int i = dim - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(layer.perm[static_cast<std::size_t>(i)], layer.perm[static_cast<std::size_t>(pick(rng))]);
  }
  return layer;
}

FlowModel build_flow(int dim, const Architecture& arch, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("flow dimension must be >= 1");
  if (arch.autm_layers < 0) throw ConfigError("number of AUTM layers must be >= 0");
  if (arch.kind == LayerKind::Coupling && dim < 2) throw ConfigError("coupling flows need dim >= 2");
  arch.solver.validate();
  if (!(arch.c_bound >= 0.0) || !std::isfinite(arch.c_bound)) throw ConfigError("c bound must be finite and >= 0");
  const int split = arch.split > 0 ? arch.split : dim / 2;

  FlowModel model;
  model.dim = dim;
  std::mt19937_64 seeds(seed);
  for (int l = 0; l < arch.autm_layers; ++l) {
    if (l > 0 && arch.permutations) model.layers.emplace_back(make_permutation_layer(dim, seeds()));
    if (arch.kind == LayerKind::Coupling) {
      const CouplingSide side = l % 2 == 0 ? CouplingSide::Upper : CouplingSide::Lower;
      CouplingLayer layer =
          make_coupling_layer(dim, split, side, arch.family, arch.hidden, arch.activation, arch.solver, seeds());
      layer.c_bound = arch.c_bound;
      model.layers.emplace_back(std::move(layer));
    } else {
      AutoregressiveLayer layer =
          make_autoregressive_layer(dim, arch.family, arch.hidden, arch.activation, arch.solver, seeds());
      layer.c_bound = arch.c_bound;
      model.layers.emplace_back(std::move(layer));
    }
  }
  return model;
}

std::vector<std::span<double>> FlowModel::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& layer : layers) {
    if (auto* c = std::get_if<CouplingLayer>(&layer)) blocks.push_back(c->net.params());
    if (auto* a = std::get_if<AutoregressiveLayer>(&layer)) blocks.push_back(a->net.params());
  }
  return blocks;
}

std::vector<std::span<const double>> FlowModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& layer : layers) {
    if (const auto* c = std::get_if<CouplingLayer>(&layer)) blocks.push_back(c->net.params());
    if (const auto* a = std::get_if<AutoregressiveLayer>(&layer)) blocks.push_back(a->net.params());
  }
  return blocks;
}

std::size_t FlowModel::num_params() const {
  std::size_t n = 0;
  for (auto b : parameter_blocks()) n += b.size();
  return n;
}

void FlowModel::validate() const {
  if (dim < 1) throw ConfigError("flow dimension must be >= 1");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string where = "layer " + std::to_string(l) + ": ";
    std::visit(Overloaded{
                   [&](const CouplingLayer& c) {
                     if (c.dim != dim) throw ConfigError(where + "dimension mismatch");
                     if (c.split < 1 || c.split >= dim) throw ConfigError(where + "split out of range");
                     if (!(c.c_bound >= 0.0) || !std::isfinite(c.c_bound)) throw ConfigError(where + "bad c bound");
                     if (c.family == Family::Custom) throw ConfigError(where + "custom family not allowed in layers");
                     if (c.net.input_dim() != static_cast<int>(c.pass_indices().size()) ||
                         c.net.output_dim() != 3 * static_cast<int>(c.transformed_indices().size()))
                       throw ConfigError(where + "conditioner shape does not match the split");
                     c.solver.validate();
                   },
                   [&](const AutoregressiveLayer& a) {
                     if (a.dim != dim) throw ConfigError(where + "dimension mismatch");
                     if (a.family == Family::Custom) throw ConfigError(where + "custom family not allowed in layers");
                     if (!(a.c_bound >= 0.0) || !std::isfinite(a.c_bound)) throw ConfigError(where + "bad c bound");
                     if (!a.net.masked()) throw ConfigError(where + "autoregressive layers require masked conditioners");
                     if (a.net.input_dim() != dim || a.net.output_dim() != 3 * dim)
                       throw ConfigError(where + "conditioner shape does not match dim");
                     const BinaryMatrix conn = connectivity(a.net.masks());
                     for (int o = 0; o < conn.rows; ++o)
                       for (int i = 0; i < conn.cols; ++i)
                         if (conn(o, i) && i >= o / 3) throw ConfigError(where + "masks are not autoregressive");
                     a.solver.validate();
                   },
                   [&](const PermutationLayer& p) {
                     if (static_cast<int>(p.perm.size()) != dim) throw ConfigError(where + "permutation length");
                     std::vector<bool> seen(static_cast<std::size_t>(dim), false);
                     for (int i : p.perm) {
                       if (i < 0 || i >= dim || seen[static_cast<std::size_t>(i)])
                         throw ConfigError(where + "permutation is not a bijection");
                       seen[static_cast<std::size_t>(i)] = true;
                     }
                   },
               },
               layers[l]);
  }
}

LayerOutput layer_forward(const Layer& layer, std::span<const double> x) {
  return std::visit(
      Overloaded{
          [&](const CouplingLayer& c) {
            check_size(x.size(), c.dim, "coupling forward");
            LayerOutput out{{x.begin(), x.end()}, 0.0};
            const auto trans = c.transformed_indices();
            const auto theta = c.net.eval(gather(x, c.pass_indices()));
            for (std::size_t k = 0; k < trans.size(); ++k) {
              const int i = trans[k];
              const MapResult r = on_coordinate(i, [&] {
                return forward(coordinate_integrand(c.family, c.c_bound, theta, k), c.solver, x[static_cast<std::size_t>(i)]);
              });
              out.values[static_cast<std::size_t>(i)] = r.y;
              out.logdet += r.log_deriv;
            }
            return out;
          },
          [&](const AutoregressiveLayer& a) {
            check_size(x.size(), a.dim, "autoregressive forward");
            LayerOutput out{{x.begin(), x.end()}, 0.0};
            const auto theta = a.net.eval(x);
            for (int k = 0; k < a.dim; ++k) {
              const MapResult r = on_coordinate(k, [&] {
                return forward(coordinate_integrand(a.family, a.c_bound, theta, static_cast<std::size_t>(k)), a.solver,
                               x[static_cast<std::size_t>(k)]);
              });
              out.values[static_cast<std::size_t>(k)] = r.y;
              out.logdet += r.log_deriv;
            }
            return out;
          },
          [&](const PermutationLayer& p) {
            check_size(x.size(), static_cast<int>(p.perm.size()), "permutation forward");
            LayerOutput out{std::vector<double>(x.size()), 0.0};
            for (std::size_t i = 0; i < p.perm.size(); ++i) out.values[i] = x[static_cast<std::size_t>(p.perm[i])];
            return out;
          },
      },
      layer);
}

LayerInverse layer_inverse(const Layer& layer, std::span<const double> y, const RefineConfig& refine) {
  auto invert_coordinate = [&](LayerInverse& out, Family family, double c_bound, const SolverConfig& solver,
                               std::span<const double> theta, std::size_t block, int i) {
    const InverseResult r = on_coordinate(i, [&] {
      return inverse(coordinate_integrand(family, c_bound, theta, block), solver.with_direction(Direction::Reverse),
                     y[static_cast<std::size_t>(i)], refine);
    });
    out.x[static_cast<std::size_t>(i)] = r.x;
    out.max_iterations = std::max(out.max_iterations, r.iterations);
    if (!r.converged) {
      out.converged = false;
      out.unconverged_coordinates.push_back(i);
    }
  };

  return std::visit(Overloaded{
                        [&](const CouplingLayer& c) {
                          check_size(y.size(), c.dim, "coupling inverse");
                          LayerInverse out;
                          out.x.assign(y.begin(), y.end());
                          const auto trans = c.transformed_indices();
                          const auto theta = c.net.eval(gather(y, c.pass_indices()));
                          for (std::size_t k = 0; k < trans.size(); ++k)
                            invert_coordinate(out, c.family, c.c_bound, c.solver, theta, k, trans[k]);
                          return out;
                        },
                        [&](const AutoregressiveLayer& a) {
                          check_size(y.size(), a.dim, "autoregressive inverse");
                          LayerInverse out;
                          // Unknown coordinates stay zero; the masks keep them out of block k.
                          out.x.assign(y.size(), 0.0);
                          for (int k = 0; k < a.dim; ++k) {
                            const auto theta = a.net.eval(out.x);
                            invert_coordinate(out, a.family, a.c_bound, a.solver, theta, static_cast<std::size_t>(k), k);
                          }
                          return out;
                        },
                        [&](const PermutationLayer& p) {
                          check_size(y.size(), static_cast<int>(p.perm.size()), "permutation inverse");
                          LayerInverse out;
                          out.x.assign(y.size(), 0.0);
                          for (std::size_t i = 0; i < p.perm.size(); ++i) out.x[static_cast<std::size_t>(p.perm[i])] = y[i];
                          return out;
                        },
                    },
                    layer);
}

LayerOutput layer_reverse(const Layer& layer, std::span<const double> y) {
  return std::visit(
      Overloaded{
          [&](const CouplingLayer& c) {
            check_size(y.size(), c.dim, "coupling reverse");
            LayerOutput out{{y.begin(), y.end()}, 0.0};
            const auto trans = c.transformed_indices();
            const auto theta = c.net.eval(gather(y, c.pass_indices()));
            const SolverConfig rev = c.solver.with_direction(Direction::Reverse);
            for (std::size_t k = 0; k < trans.size(); ++k) {
              const int i = trans[k];
              const MapResult r = on_coordinate(
                  i, [&] { return integrate(coordinate_integrand(c.family, c.c_bound, theta, k), rev, y[static_cast<std::size_t>(i)]); });
              out.values[static_cast<std::size_t>(i)] = r.y;
              out.logdet += r.log_deriv;
            }
            return out;
          },
          [&](const AutoregressiveLayer& a) {
            check_size(y.size(), a.dim, "autoregressive reverse");
            LayerOutput out{std::vector<double>(y.size(), 0.0), 0.0};
            const SolverConfig rev = a.solver.with_direction(Direction::Reverse);
            for (int k = 0; k < a.dim; ++k) {
              const auto theta = a.net.eval(out.values);
              const MapResult r = on_coordinate(k, [&] {
                return integrate(coordinate_integrand(a.family, a.c_bound, theta, static_cast<std::size_t>(k)), rev,
                                 y[static_cast<std::size_t>(k)]);
              });
              out.values[static_cast<std::size_t>(k)] = r.y;
              out.logdet += r.log_deriv;
            }
            return out;
          },
          [&](const PermutationLayer& p) {
            check_size(y.size(), static_cast<int>(p.perm.size()), "permutation reverse");
            LayerOutput out{std::vector<double>(y.size(), 0.0), 0.0};
            for (std::size_t i = 0; i < p.perm.size(); ++i) out.values[static_cast<std::size_t>(p.perm[i])] = y[i];
            return out;
          },
      },
      layer);
}

void layer_reverse_vjp(const Layer& layer, std::span<const double> y, std::span<const double> cot_x, double cot_logdet,
                       std::span<double> cot_y, std::span<double> dparams) {
  if (cot_x.size() != y.size() || cot_y.size() != y.size()) throw DimensionError("layer vjp: cotangent size mismatch");
  std::visit(Overloaded{
                 [&](const CouplingLayer& c) {
                   check_size(y.size(), c.dim, "coupling vjp");
                   const auto pass = c.pass_indices();
                   const auto trans = c.transformed_indices();
                   const auto y_pass = gather(y, pass);
                   const auto theta = c.net.eval(y_pass);
                   const SolverConfig rev = c.solver.with_direction(Direction::Reverse);
                   std::vector<double> cot_theta(theta.size(), 0.0);
                   for (std::size_t k = 0; k < trans.size(); ++k) {
                     const auto i = static_cast<std::size_t>(trans[k]);
                     const Sensitivity s = on_coordinate(trans[k], [&] {
                       return integrate_vjp(coordinate_integrand(c.family, c.c_bound, theta, k), rev, y[i], cot_x[i], cot_logdet);
                     });
                     cot_y[i] += s.dx;
                     for (std::size_t j = 0; j < 3; ++j) cot_theta[3 * k + j] = s.dparams[j];
                     cot_theta[3 * k + 2] *= bounded_c_slope(theta[3 * k + 2], c.c_bound);
                   }
                   std::vector<double> d_pass(pass.size(), 0.0);
                   c.net.vjp_accumulate(y_pass, cot_theta, d_pass, dparams);
                   for (std::size_t k = 0; k < pass.size(); ++k) {
                     const auto i = static_cast<std::size_t>(pass[k]);
                     cot_y[i] += cot_x[i] + d_pass[k];
                   }
                 },
                 [&](const AutoregressiveLayer& a) {
                   check_size(y.size(), a.dim, "autoregressive vjp");
                   const LayerOutput fwd = layer_reverse(layer, y);
                   const auto& x = fwd.values;
                   // Block k of the net only reads x[0:k], so one evaluation at the
                   // final x reproduces every coefficient used during the solve.
                   const auto theta = a.net.eval(x);
                   const SolverConfig rev = a.solver.with_direction(Direction::Reverse);
                   std::vector<double> cot(cot_x.begin(), cot_x.end());
                   std::vector<double> cot_theta(theta.size(), 0.0);
                   std::vector<double> d_in(x.size(), 0.0);
                   for (int k = a.dim - 1; k >= 0; --k) {
                     const auto kk = static_cast<std::size_t>(k);
                     const Sensitivity s = on_coordinate(k, [&] {
                       return integrate_vjp(coordinate_integrand(a.family, a.c_bound, theta, kk), rev, y[kk], cot[kk], cot_logdet);
                     });
                     cot_y[kk] += s.dx;
                     std::fill(cot_theta.begin(), cot_theta.end(), 0.0);
                     for (std::size_t j = 0; j < 3; ++j) cot_theta[3 * kk + j] = s.dparams[j];
                     cot_theta[3 * kk + 2] *= bounded_c_slope(theta[3 * kk + 2], a.c_bound);
                     std::fill(d_in.begin(), d_in.end(), 0.0);
                     a.net.vjp_accumulate(x, cot_theta, d_in, dparams);
                     for (std::size_t j = 0; j < kk; ++j) cot[j] += d_in[j];
                   }
                 },
                 [&](const PermutationLayer& p) {
                   check_size(y.size(), static_cast<int>(p.perm.size()), "permutation vjp");
                   for (std::size_t i = 0; i < p.perm.size(); ++i) cot_y[i] += cot_x[static_cast<std::size_t>(p.perm[i])];
                 },
             },
             layer);
}

namespace {

template <class Fn>
auto on_layer(std::size_t layer, Fn&& fn) {
  try {
    return fn();
  } catch (DivergenceError& e) {
    e.set_layer(static_cast<int>(layer));
    throw;
  }
}

}  // namespace

LayerOutput flow_forward(const FlowModel& model, std::span<const double> x) {
  check_size(x.size(), model.dim, "flow forward");
  LayerOutput out{{x.begin(), x.end()}, 0.0};
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    LayerOutput step = on_layer(l, [&] { return layer_forward(model.layers[l], out.values); });
    out.values = std::move(step.values);
    out.logdet += step.logdet;
  }
  return out;
}

FlowInverse flow_inverse(const FlowModel& model, std::span<const double> y, const RefineConfig& refine) {
  check_size(y.size(), model.dim, "flow inverse");
  FlowInverse out;
  out.x.assign(y.begin(), y.end());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    LayerInverse step = on_layer(l, [&] { return layer_inverse(model.layers[l], out.x, refine); });
    out.x = std::move(step.x);
    out.converged = out.converged && step.converged;
    out.max_iterations = std::max(out.max_iterations, step.max_iterations);
  }
  return out;
}

double standard_normal_log_density(std::span<const double> x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  return -0.5 * sq - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

double log_density(const FlowModel& model, std::span<const double> y, DensityPath path) {
  check_size(y.size(), model.dim, "log_density");
  std::vector<double> cur(y.begin(), y.end());
  double log_jac = 0.0;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    if (path == DensityPath::ReverseIntegration) {
      LayerOutput step = on_layer(l, [&] { return layer_reverse(model.layers[l], cur); });
      cur = std::move(step.values);
      log_jac += step.logdet;
    } else {
      LayerInverse inv = on_layer(l, [&] { return layer_inverse(model.layers[l], cur); });
      if (!inv.converged)
        throw NumericalError("layer " + std::to_string(l) + ": inverse refinement did not converge");
      const LayerOutput fwd = on_layer(l, [&] { return layer_forward(model.layers[l], inv.x); });
      log_jac -= fwd.logdet;
      cur = std::move(inv.x);
    }
  }
  return standard_normal_log_density(cur) + log_jac;
}

Matrix base_draws(int dim, std::size_t n, std::uint64_t seed) {
  Matrix m(n, static_cast<std::size_t>(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.data) v = normal(rng);
  return m;
}

Matrix sample(const FlowModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  Matrix m = base_draws(model.dim, n, seed);
  for (std::size_t i = 0; i < n; ++i) {
    const LayerOutput out = flow_forward(model, m.row(i));
    std::copy(out.values.begin(), out.values.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace autm
