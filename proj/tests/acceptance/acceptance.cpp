// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "autm/conditioner.hpp"
#include "autm/error.hpp"
#include "autm/flow.hpp"
#include "autm/gradcheck.hpp"
#include "autm/invbench.hpp"
#include "autm/map.hpp"
#include "autm/training.hpp"
#include "autm/universality.hpp"
#include "oracles.hpp"

using namespace autm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SolverConfig rk4(int n) {
  SolverConfig c;
  c.steps = n;
  return c;
}

// The identity holds for the exact flow; both sides are compared once the
// step count resolves the trajectory (N doubled from 64 until q_N and q_2N
// agree to 1e-10 relative).
Outcome derivative_identity() {
  std::mt19937_64 rng(101);
  int redrawn = 0, max_steps = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = oracle::draw_resolved_case(rng, 1.0, 2.0, rk4(64), redrawn);
    SolverConfig cfg = rk4(64);
    while (cfg.steps < 4096 && resolution_gap(c.g, cfg, c.x) > 1e-10) cfg.steps *= 2;
    max_steps = std::max(max_steps, cfg.steps);
    const double fd = oracle::central_diff([&](double x) { return forward(c.g, cfg, x).y; }, c.x);
    worst = std::max(worst, oracle::rel_err(derivative(c.g, cfg, c.x), fd));
  }
  return {worst < 1e-5, fmt("max rel err %.3e (limit 1e-5), 100 cases, RK4 N=64..%d, %d redrawn", worst, max_steps,
                            redrawn)};
}

Outcome monotonicity() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> p(-2.0, 2.0), ux(-5.0, 5.0);
  const SolverConfig cfg = rk4(64);
  int violations = 0, redrawn = 0, done = 0;
  while (done < 10000) {
    const Integrand g(static_cast<Family>(done % 3), {p(rng), p(rng), p(rng)});
    double x0 = ux(rng), x1 = ux(rng);
    if (x0 == x1) continue;
    if (x0 > x1) std::swap(x0, x1);
    try {
      const double q0 = forward(g, cfg, x0).y, q1 = forward(g, cfg, x1).y;
      if (!(q0 < q1)) ++violations;
      ++done;
    } catch (const DivergenceError&) {
      ++redrawn;
    }
  }
  return {violations == 0, fmt("%d violations in 10000 cases (params in [-2,2]^3, x in [-5,5], RK4 N=64, %d guard-box draws redrawn)",
                               violations, redrawn)};
}

Outcome round_trip() {
  std::mt19937_64 rng(303);
  const SolverConfig cfg = rk4(16);
  int redrawn = 0, worst_iters = 0, unconverged = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto c = oracle::draw_resolved_case(rng, 1.0, 2.0, cfg, redrawn);
    const double y = forward(c.g, cfg, c.x).y;
    const InverseResult r = inverse(c.g, cfg.reversed(), y);
    if (!r.converged) ++unconverged;
    worst = std::max(worst, std::abs(r.x - c.x));
    worst_iters = std::max(worst_iters, r.iterations);
  }
  return {worst < 1e-8 && worst_iters <= 15 && unconverged == 0,
          fmt("max |x' - x| %.3e (limit 1e-8), max refinement iterations %d (limit 15), %d unconverged, %d redrawn",
              worst, worst_iters, unconverged, redrawn)};
}

Outcome closed_form() {
  const Integrand g = Integrand::quadratic(1, 0, 0);
  const MapResult r = forward(g, rk4(64), 1.0);
  const double err = std::abs(r.y - std::numbers::e);
  const double ld_err = std::abs(r.log_deriv - 1.0);
  const std::vector<int> ns{8, 16, 32, 64};
  double mx = 0, my = 0;
  std::vector<double> lx, ly;
  for (int n : ns) {
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(std::abs(forward(g, rk4(n), 1.0).y - std::numbers::e)));
    mx += lx.back();
    my += ly.back();
  }
  mx /= 4;
  my /= 4;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double order = -sxy / sxx;
  return {err < 1e-8 && ld_err < 1e-12 && std::abs(order - 4.0) <= 0.2,
          fmt("|y - e| %.3e (limit 1e-8), |log_deriv - 1| %.1e, RK4 order %.3f (4.0 +- 0.2)", err, ld_err, order)};
}

Outcome universality_rate() {
  const MonotoneTarget phi = MonotoneTarget::affine(2.0, 1.0);
  const std::vector<double> s_list{1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5};
  const StudyResult c = convergence_study(phi, -1.0, 1.0, 41, s_list, KernelKind::Constant);
  const StudyResult g = convergence_study(phi, -1.0, 1.0, 41, s_list, KernelKind::GaussianNormalized);
  const bool ok = c.slope && g.slope && *c.slope >= 0.9 && *c.slope <= 1.1 && *g.slope >= 0.9 && *g.slope <= 1.2;
  return {ok, fmt("constant-kernel slope %.4f (in [0.9,1.1]), Gaussian slope %.4f (in [0.9,1.2])", c.slope.value_or(NAN),
                  g.slope.value_or(NAN))};
}

Outcome inversion_benchmark() {
  const BenchReport rep = run_bench(BenchConfig{});
  double worst_ratio = 0.0;
  std::string ratios;
  for (double tol : rep.config.tolerances) {
    worst_ratio = std::max(worst_ratio, rep.ratio(tol));
    ratios += fmt("%s%.3f", ratios.empty() ? "" : "/", rep.ratio(tol));
  }
  const double growth = rep.bisection_growth_per_decade();
  return {worst_ratio <= 0.65 && std::abs(growth - 3.3) <= 0.5,
          fmt("fixed-point/bisection ratios %s (limit 0.65), bisection growth %.3f steps/decade (3.3 +- 0.5)",
              ratios.c_str(), growth)};
}

FlowModel random_two_layer_model(std::uint64_t seed) {
  Architecture a;
  a.autm_layers = 2;
  a.hidden = {8};
  FlowModel m = build_flow(2, a, seed);
  std::uint64_t s = seed * 7919 + 1;
  for (auto& layer : m.layers)
    if (auto* c = std::get_if<CouplingLayer>(&layer)) c->net.randomize(s++, 0.3);
  return m;
}

Outcome exact_log_density() {
  double worst = 0.0, worst_mass = 0.0;
  long outside = 0;
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    const FlowModel m = random_two_layer_model(static_cast<std::uint64_t>(trial + 1));
    std::mt19937_64 rng(static_cast<std::uint64_t>(500 + trial));
    for (int k = 0; k < 5; ++k) {
      const std::vector<double> x{n01(rng), n01(rng)};
      const std::vector<double> y = flow_forward(m, x).values;
      const auto J = oracle::fd_jacobian([&](const std::vector<double>& v) { return flow_forward(m, v).values; }, x);
      const double want = oracle::log_std_normal(x) - std::log(std::abs(oracle::determinant(J)));
      worst = std::max(worst, std::abs(log_density(m, y) - want));
      worst = std::max(worst, std::abs(log_density(m, y, DensityPath::ReverseIntegration) - want));
    }
    // Trapezoid rule on [-8, 8]^2. Points outside the image of the flow
    // cannot be pulled back and carry zero density.
    const int n = 321;
    const double h = 16.0 / (n - 1);
    double mass = 0.0;
    std::vector<double> y(2);
    for (int i = 0; i < n; ++i) {
      y[0] = -8.0 + h * i;
      const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      for (int j = 0; j < n; ++j) {
        y[1] = -8.0 + h * j;
        const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        try {
          mass += wi * wj * std::exp(log_density(m, y));
        } catch (const NumericalError&) {
          ++outside;
        }
      }
    }
    worst_mass = std::max(worst_mass, std::abs(mass * h * h - 1.0));
  }
  return {worst < 1e-4 && worst_mass < 0.02,
          fmt("max |log p - (log N(x) - log|det J_fd|)| %.3e (limit 1e-4), max |mass - 1| %.3e (limit 0.02), "
              "10 models, %ld grid points outside the image",
              worst, worst_mass, outside)};
}

Outcome training_gradients() {
  const GradcheckReport r = gradcheck_training(808, 20);
  return {r.cases == 20 && r.max_rel_error < 1e-4,
          fmt("max rel err %.3e (limit 1e-4) over %ld entries in %d models, %d redrawn", r.max_rel_error, r.entries,
              r.cases, r.redrawn)};
}

Outcome density_estimation() {
  const Dataset data = toy2d(Toy::TwoGaussians, 5000, 909);
  Architecture a;  // 4 coupling layers, quadratic family, hidden (32, 32), c bound 0.1
  FlowModel model = build_flow(2, a, 909);
  const double identity_nll = nll(model, data.val);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 256;
  cfg.learning_rate = 5e-3;
  cfg.patience = 0;
  cfg.seed = 909;
  const TrainResult r = train(model, data, cfg);
  if (r.error) return {false, "training aborted: " + *r.error};
  const double val = nll(model, data.val);
  const Matrix s = sample(model, 10000, 910);
  double pos[2] = {0, 0}, neg[2] = {0, 0};
  double np = 0, nn = 0;
  for (std::size_t i = 0; i < s.rows; ++i) {
    double* acc = s(i, 0) > 0 ? pos : neg;
    (s(i, 0) > 0 ? np : nn) += 1;
    acc[0] += s(i, 0);
    acc[1] += s(i, 1);
  }
  for (int k = 0; k < 2; ++k) {
    pos[k] /= np;
    neg[k] /= nn;
  }
  const double dp = std::hypot(pos[0] - 2.0, pos[1]), dn = std::hypot(neg[0] + 2.0, neg[1]);
  const double gain = identity_nll - val;
  return {gain >= 0.3 && dp <= 0.3 && dn <= 0.3,
          fmt("val NLL %.4f vs identity %.4f (gain %.3f, need >= 0.3); sample means (%.3f, %.3f) and (%.3f, %.3f), "
              "distances %.3f, %.3f to (+-2, 0) (limit 0.3); %zu epochs",
              val, identity_nll, gain, pos[0], pos[1], neg[0], neg[1], dp, dn, r.history.size())};
}

Outcome autoregressive_masking() {
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<int> dim_d(2, 6), width(3, 16), depth(1, 2);
  std::normal_distribution<double> n01;
  double worst_masked = 0.0, min_diag = HUGE_VAL;
  int redrawn = 0;
  for (int trial = 0; trial < 20;) {
    const int D = dim_d(rng);
    std::vector<int> hidden;
    for (int l = depth(rng); l > 0; --l) hidden.push_back(width(rng));
    AutoregressiveLayer layer = make_autoregressive_layer(D, static_cast<Family>(trial % 3), hidden, Activation::Tanh,
                                                          rk4(16), static_cast<std::uint64_t>(trial));
    layer.c_bound = 0.1;
    layer.net.randomize(rng(), 0.5);
    const Layer l = layer;
    std::vector<double> x(static_cast<std::size_t>(D));
    for (double& v : x) v = n01(rng);
    std::vector<std::vector<double>> J;
    try {
      J = oracle::fd_jacobian([&](const std::vector<double>& v) { return layer_forward(l, v).values; }, x);
    } catch (const DivergenceError&) {
      ++redrawn;
      continue;
    }
    ++trial;
    for (int i = 0; i < D; ++i) {
      min_diag = std::min(min_diag, J[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)]);
      for (int j = i + 1; j < D; ++j)
        worst_masked = std::max(worst_masked, std::abs(J[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
  }
  return {worst_masked <= 1e-12 && min_diag > 0.0,
          fmt("max |J_ij| above the diagonal %.3e (limit 1e-12), min diagonal %.3f, 20 layers, %d guard-box draws redrawn",
              worst_masked, min_diag, redrawn)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "derivative identity", 5.0, derivative_identity},
      {2, "monotonicity", 10.0, monotonicity},
      {3, "inverse round trip", 5.0, round_trip},
      {4, "closed-form oracle", 5.0, closed_form},
      {5, "universality rate", 30.0, universality_rate},
      {6, "inversion benchmark", 60.0, inversion_benchmark},
      {7, "exact log-density", 60.0, exact_log_density},
      {8, "training gradients", 120.0, training_gradients},
      {9, "desk-scale density estimation", 600.0, density_estimation},
      {10, "autoregressive masking", 5.0, autoregressive_masking},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit_s;
    if (!pass) ++failed;
    std::printf("%s  %2d %-30s %s; %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.limit_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
