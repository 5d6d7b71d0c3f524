#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "autm/error.hpp"
#include "autm/flow.hpp"
#include "oracles.hpp"

using namespace autm;

namespace {

// D = 2, d = 1, Upper: the conditioner is one linear layer 1 -> 3 whose
// outputs are (a, b, c) = w * x1 + bias.
CouplingLayer linear_coupling(std::array<double, 3> w, std::array<double, 3> bias, CouplingSide side = CouplingSide::Upper) {
  CouplingLayer l;
  l.dim = 2;
  l.split = 1;
  l.side = side;
  l.family = Family::Quadratic;
  l.solver.steps = 16;
  l.c_bound = 0.0;
  l.net = ConditionerNet({1, 3}, Activation::Tanh);
  for (int i = 0; i < 3; ++i) {
    l.net.params()[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)];
    l.net.params()[static_cast<std::size_t>(3 + i)] = bias[static_cast<std::size_t>(i)];
  }
  return l;
}

FlowModel shift_model(double b) {
  FlowModel m;
  m.dim = 2;
  m.layers.emplace_back(linear_coupling({0, 0, 0}, {0, b, 0}, CouplingSide::Upper));
  m.layers.emplace_back(linear_coupling({0, 0, 0}, {0, b, 0}, CouplingSide::Lower));
  return m;
}

Architecture small_arch(LayerKind kind, int layers) {
  Architecture a;
  a.kind = kind;
  a.autm_layers = layers;
  a.hidden = {6};
  a.solver.steps = 16;
  return a;
}

FlowModel random_model(int dim, LayerKind kind, int layers, std::uint64_t seed, double scale = 0.3) {
  FlowModel m = build_flow(dim, small_arch(kind, layers), seed);
  std::uint64_t s = seed * 131 + 7;
  for (auto& layer : m.layers) {
    if (auto* c = std::get_if<CouplingLayer>(&layer)) c->net.randomize(s++, scale);
    if (auto* a = std::get_if<AutoregressiveLayer>(&layer)) a->net.randomize(s++, scale);
  }
  return m;
}

std::vector<double> forward_values(const Layer& layer, const std::vector<double>& x) {
  return layer_forward(layer, x).values;
}

}  // namespace

TEST_CASE("zero conditioner output gives the identity layer") {
  const Layer l = linear_coupling({0, 0, 0}, {0, 0, 0});
  const LayerOutput out = layer_forward(l, std::vector<double>{0.3, -1.2});
  CHECK(out.values == std::vector<double>{0.3, -1.2});
  CHECK(out.logdet == 0.0);
  CHECK(layer_inverse(l, std::vector<double>{0.3, -1.2}).x == std::vector<double>{0.3, -1.2});
}

TEST_CASE("shift coupling") {
  const Layer l = linear_coupling({0, 1, 0}, {0, 0, 0});
  const LayerOutput out = layer_forward(l, std::vector<double>{1.5, 2.0});
  CHECK(out.values[0] == 1.5);
  CHECK(out.values[1] == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(out.logdet == 0.0);
  const LayerInverse inv = layer_inverse(l, std::vector<double>{1.0, 3.0});
  CHECK(inv.x[0] == 1.0);
  CHECK(inv.x[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("linear coupling has logdet a") {
  for (double a : {-0.7, 0.2, 1.3}) {
    const Layer l = linear_coupling({0, 0, 0}, {a, 0, 0});
    const LayerOutput out = layer_forward(l, std::vector<double>{0.4, 0.9});
    CHECK(out.logdet == doctest::Approx(a).epsilon(1e-14));
    CHECK(out.values[1] == forward(Integrand::quadratic(a, 0, 0), SolverConfig{}, 0.9).y);
    CHECK(std::abs(out.values[1] - 0.9 * std::exp(a)) < 1e-5);
  }
}

TEST_CASE("lower side transforms the leading block") {
  const Layer l = linear_coupling({0, 1, 0}, {0, 0, 0}, CouplingSide::Lower);
  const LayerOutput out = layer_forward(l, std::vector<double>{1.0, 2.0});
  CHECK(out.values[0] == doctest::Approx(3.0));
  CHECK(out.values[1] == 2.0);
}

TEST_CASE("c bound squashes the third output") {
  CouplingLayer l = linear_coupling({0, 0, 0}, {0, 0, 5.0});
  l.c_bound = 0.1;
  const double x2 = 0.8;
  const LayerOutput out = layer_forward(Layer(l), std::vector<double>{0.0, x2});
  SolverConfig cfg;
  cfg.steps = 16;
  const double c = 0.1 * std::tanh(5.0 / 0.1);
  CHECK(out.values[1] == doctest::Approx(forward(Integrand::quadratic(0, 0, c), cfg, x2).y).epsilon(1e-15));
}

TEST_CASE("permutation layer") {
  const Layer p = PermutationLayer{{2, 0, 1}};
  const LayerOutput out = layer_forward(p, std::vector<double>{10, 20, 30});
  CHECK(out.values == std::vector<double>{30, 10, 20});
  CHECK(out.logdet == 0.0);
  CHECK(layer_inverse(p, out.values).x == std::vector<double>{10, 20, 30});
  const PermutationLayer seeded = make_permutation_layer(7, 3);
  std::vector<int> sorted = seeded.perm;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 7; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
  CHECK(make_permutation_layer(7, 3).perm == seeded.perm);
}

TEST_CASE("layer logdet equals log|det| of the finite-difference Jacobian") {
  for (int trial = 0; trial < 6; ++trial) {
    const LayerKind kind = trial % 2 ? LayerKind::Autoregressive : LayerKind::Coupling;
    const FlowModel m = random_model(3, kind, 2, static_cast<std::uint64_t>(trial), 0.5);
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> n01;
    for (const Layer& layer : m.layers) {
      std::vector<double> x{n01(rng), n01(rng), n01(rng)};
      const auto J = oracle::fd_jacobian([&](const std::vector<double>& v) { return forward_values(layer, v); }, x);
      CHECK(layer_forward(layer, x).logdet == doctest::Approx(std::log(std::abs(oracle::determinant(J)))).epsilon(1e-6));
    }
  }
}

TEST_CASE("autoregressive Jacobian is lower triangular") {
  for (int trial = 0; trial < 20; ++trial) {
    const FlowModel m = random_model(4, LayerKind::Autoregressive, 1, static_cast<std::uint64_t>(100 + trial), 0.6);
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> n01;
    std::vector<double> x(4);
    for (double& v : x) v = n01(rng);
    const auto J = oracle::fd_jacobian([&](const std::vector<double>& v) { return forward_values(m.layers[0], v); }, x);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) CHECK(J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] == 0.0);
  }
}

TEST_CASE("layer inverse round trip") {
  for (auto kind : {LayerKind::Coupling, LayerKind::Autoregressive}) {
    const FlowModel m = random_model(3, kind, 3, 9, 0.5);
    const std::vector<double> x{0.4, -1.1, 0.7};
    const LayerOutput y = flow_forward(m, x);
    const FlowInverse inv = flow_inverse(m, y.values);
    CHECK(inv.converged);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(inv.x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) < 1e-8);
  }
}

TEST_CASE("layer_reverse agrees with the refined inverse to discretization accuracy") {
  const FlowModel m = random_model(2, LayerKind::Coupling, 1, 4, 0.5);
  const std::vector<double> y{0.3, 0.8};
  const LayerOutput r = layer_reverse(m.layers[0], y);
  const LayerInverse inv = layer_inverse(m.layers[0], y);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(r.values[static_cast<std::size_t>(i)] - inv.x[static_cast<std::size_t>(i)]) < 1e-5);
  CHECK(r.logdet == doctest::Approx(-layer_forward(m.layers[0], inv.x).logdet).epsilon(1e-4));
}

TEST_CASE("layer_reverse_vjp matches finite differences") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (auto kind : {LayerKind::Coupling, LayerKind::Autoregressive}) {
    FlowModel m = random_model(3, kind, 2, 31, 0.5);
    for (Layer& layer : m.layers) {
      std::vector<double> y(3), cot(3);
      for (double& v : y) v = n01(rng);
      for (double& v : cot) v = n01(rng);
      const double cot_ld = n01(rng);
      auto objective = [&](const Layer& l, const std::vector<double>& yy) {
        const LayerOutput r = layer_reverse(l, yy);
        double s = cot_ld * r.logdet;
        for (std::size_t i = 0; i < 3; ++i) s += cot[i] * r.values[i];
        return s;
      };
      std::span<double> params;
      if (auto* c = std::get_if<CouplingLayer>(&layer)) params = c->net.params();
      if (auto* a = std::get_if<AutoregressiveLayer>(&layer)) params = a->net.params();
      std::vector<double> cot_y(3, 0.0), dparams(params.size(), 0.0);
      layer_reverse_vjp(layer, y, cot, cot_ld, cot_y, dparams);
      for (std::size_t j = 0; j < 3; ++j) {
        auto f = [&](double v) {
          auto yy = y;
          yy[j] = v;
          return objective(layer, yy);
        };
        worst = std::max(worst, oracle::rel_err(cot_y[j], oracle::central_diff(f, y[j])));
      }
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double base = params[p];
        auto f = [&](double v) {
          params[p] = v;
          const double r = objective(layer, y);
          params[p] = base;
          return r;
        };
        worst = std::max(worst, oracle::rel_err(dparams[p], oracle::central_diff(f, base)));
      }
    }
  }
  MESSAGE("max relative error " << worst);
  CHECK(worst < 1e-5);
}

TEST_CASE("log density of the identity and shift models") {
  Architecture a = small_arch(LayerKind::Coupling, 2);
  a.permutations = false;
  const FlowModel id = build_flow(2, a, 1);
  CHECK(log_density(id, std::vector<double>{0.0, 0.0}) == doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-15));
  CHECK(flow_forward(id, std::vector<double>{0.5, -0.25}).values == std::vector<double>{0.5, -0.25});
  const FlowModel sh = shift_model(1.5);
  const std::vector<double> y{0.2, 2.9};
  const std::vector<double> x{y[0] - 1.5, y[1] - 1.5};
  CHECK(log_density(sh, y) == doctest::Approx(oracle::log_std_normal(x)).epsilon(1e-12));
  CHECK(log_density(sh, y, DensityPath::Refined) == doctest::Approx(oracle::log_std_normal(x)).epsilon(1e-12));
}

TEST_CASE("log density against the change-of-variables oracle") {
  for (int trial = 0; trial < 5; ++trial) {
    const FlowModel m = random_model(2, LayerKind::Coupling, 2, static_cast<std::uint64_t>(50 + trial), 0.5);
    const std::vector<double> x{0.3 * trial - 0.5, 0.7};
    const std::vector<double> y = flow_forward(m, x).values;
    const auto J = oracle::fd_jacobian([&](const std::vector<double>& v) { return flow_forward(m, v).values; }, x);
    const double want = oracle::log_std_normal(x) - std::log(std::abs(oracle::determinant(J)));
    CHECK(std::abs(log_density(m, y) - want) < 1e-4);
    CHECK(std::abs(log_density(m, y, DensityPath::Refined) - want) < 1e-6);
  }
}

TEST_CASE("sampling") {
  Architecture a = small_arch(LayerKind::Coupling, 2);
  a.permutations = false;
  const FlowModel id = build_flow(2, a, 1);
  CHECK(sample(id, 50, 9).data == base_draws(2, 50, 9).data);
  const FlowModel sh = shift_model(-0.75);
  const Matrix s1 = sample(sh, 10000, 4), s2 = sample(sh, 10000, 4);
  CHECK(s1.data == s2.data);
  for (std::size_t j = 0; j < 2; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < s1.rows; ++i) mean += s1(i, j);
    mean /= static_cast<double>(s1.rows);
    CHECK(std::abs(mean + 0.75) < 4.0 / std::sqrt(10000.0));
  }
  CHECK_THROWS_AS(sample(sh, 0, 1), ConfigError);
}

TEST_CASE("model validation") {
  FlowModel m = shift_model(1.0);
  CHECK_NOTHROW(m.validate());
  FlowModel bad_perm = m;
  bad_perm.layers.emplace_back(PermutationLayer{{0, 0}});
  CHECK_THROWS_AS(bad_perm.validate(), ConfigError);
  FlowModel bad_dim = m;
  bad_dim.dim = 3;
  CHECK_THROWS(bad_dim.validate());
  FlowModel ar = build_flow(3, small_arch(LayerKind::Autoregressive, 1), 2);
  auto& layer = std::get<AutoregressiveLayer>(ar.layers[0]);
  layer.net = ConditionerNet({3, 6, 9}, Activation::Tanh);
  CHECK_THROWS_AS(ar.validate(), ConfigError);
  CHECK_THROWS(layer_forward(m.layers[0], std::vector<double>{1.0}));
  CHECK_THROWS_AS(parse_layer_kind("conv"), ConfigError);
  CHECK(parse_layer_kind("ar") == LayerKind::Autoregressive);
}
