#include "autm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "autm/error.hpp"
#include "autm/flow.hpp"
#include "autm/map.hpp"
#include "autm/training.hpp"

namespace autm {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

namespace {

constexpr double kStep = 1e-5;

template <class Fn>
double central(Fn&& f, double x) {
  return (f(x + kStep) - f(x - kStep)) / (2.0 * kStep);
}

Family pick_family(std::mt19937_64& rng) {
  static constexpr Family families[] = {Family::Quadratic, Family::Cubic, Family::SigmoidAffine};
  return families[std::uniform_int_distribution<int>(0, 2)(rng)];
}

}  // namespace

GradcheckReport gradcheck_core(std::uint64_t seed, int cases) {
  GradcheckReport rep{"autm-core", 0, 0, 0.0, 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), unif_x(-2.0, 2.0);
  const SolverConfig cfg;
  while (rep.cases < cases) {
    const Family fam = pick_family(rng);
    const Coeffs c{coef(rng), coef(rng), coef(rng)};
    const double x = unif_x(rng);
    const Integrand g(fam, c);
    try {
      for (int output = 0; output < 2; ++output) {
        const double cy = output == 0 ? 1.0 : 0.0;
        const double cl = 1.0 - cy;
        const Sensitivity s = forward_vjp(g, cfg, x, cy, cl);
        auto value = [&](const Integrand& gi, double xi) {
          const MapResult r = forward(gi, cfg, xi);
          return cy * r.y + cl * r.log_deriv;
        };
        rep.max_rel_error = std::max(rep.max_rel_error, relative_error(s.dx, central([&](double v) { return value(g, v); }, x)));
        for (int p = 0; p < 3; ++p) {
          auto shifted = [&](double theta) {
            Coeffs cc = c;
            (p == 0 ? cc.a : p == 1 ? cc.b : cc.c) = theta;
            return value(Integrand(fam, cc), x);
          };
          const double base = p == 0 ? c.a : p == 1 ? c.b : c.c;
          rep.max_rel_error = std::max(rep.max_rel_error, relative_error(s.dparams[static_cast<std::size_t>(p)], central(shifted, base)));
        }
        rep.entries += 4;
      }
      ++rep.cases;
    } catch (const DivergenceError&) {
      ++rep.redrawn;
    }
  }
  return rep;
}

GradcheckReport gradcheck_conditioner(std::uint64_t seed, int cases) {
  GradcheckReport rep{"conditioner", 0, 0, 0.0, 0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (; rep.cases < cases; ++rep.cases) {
    const int dim = std::uniform_int_distribution<int>(1, 4)(rng);
    const std::vector<int> hidden{std::uniform_int_distribution<int>(2, 6)(rng), std::uniform_int_distribution<int>(2, 6)(rng)};
    const bool masked = rep.cases % 2 == 1;
    const Activation act = rep.cases % 4 < 2 ? Activation::Tanh : Activation::ReLU;
    std::vector<int> dims{dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(3 * dim);
    ConditionerNet net(dims, act, masked ? build_masks(dim, hidden, identity_ordering(dim)) : std::vector<BinaryMatrix>{});
    net.randomize(rng(), 0.8);
    std::vector<double> input(static_cast<std::size_t>(dim)), cot(static_cast<std::size_t>(3 * dim));
    for (double& v : input) v = unif(rng);
    for (double& v : cot) v = unif(rng);

    const auto grad = net.vjp(input, cot);
    auto contracted = [&](const ConditionerNet& n, const std::vector<double>& in) {
      const auto out = n.eval(in);
      double acc = 0.0;
      for (std::size_t k = 0; k < out.size(); ++k) acc += cot[k] * out[k];
      return acc;
    };
    for (std::size_t i = 0; i < input.size(); ++i) {
      auto f = [&](double v) {
        auto in = input;
        in[i] = v;
        return contracted(net, in);
      };
      rep.max_rel_error = std::max(rep.max_rel_error, relative_error(grad.dinput[i], central(f, input[i])));
      ++rep.entries;
    }
    for (std::size_t p = 0; p < net.num_params(); ++p) {
      auto f = [&](double v) {
        ConditionerNet n = net;
        n.params()[p] = v;
        return contracted(n, input);
      };
      rep.max_rel_error = std::max(rep.max_rel_error, relative_error(grad.dparams[p], central(f, net.params()[p])));
      ++rep.entries;
    }
  }
  return rep;
}

GradcheckReport gradcheck_training(std::uint64_t seed, int cases) {
  GradcheckReport rep{"training", 0, 0, 0.0, 0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  while (rep.cases < cases) {
    const int dim = rep.cases % 2 == 0 ? 2 : 3;
    Architecture arch;
    arch.kind = rep.cases % 4 < 2 ? LayerKind::Coupling : LayerKind::Autoregressive;
    arch.autm_layers = 2;
    arch.family = pick_family(rng);
    arch.hidden = {5};
    arch.solver.steps = 8;
    FlowModel model = build_flow(dim, arch, rng());
    std::vector<double> params = get_params(model);
    std::uniform_real_distribution<double> unif(-0.3, 0.3);
    for (double& p : params) p = unif(rng);
    set_params(model, params);
    Matrix batch(4, static_cast<std::size_t>(dim));
    for (double& v : batch.data) v = normal(rng);

    try {
      const NllGrad g = nll_and_grad(model, batch);
      FlowModel probe = model;
      double worst = 0.0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        auto f = [&](double v) {
          std::vector<double> q = params;
          q[p] = v;
          set_params(probe, q);
          return nll(probe, batch);
        };
        worst = std::max(worst, relative_error(g.grad[p], central(f, params[p])));
      }
      rep.max_rel_error = std::max(rep.max_rel_error, worst);
      rep.entries += static_cast<long>(params.size());
      ++rep.cases;
    } catch (const NumericalError&) {
      ++rep.redrawn;
    }
  }
  return rep;
}

std::vector<GradcheckReport> gradcheck_all(std::uint64_t seed) {
  return {gradcheck_core(seed), gradcheck_conditioner(seed + 1), gradcheck_training(seed + 2)};
}

}  // namespace autm
