#include "run_config.hpp"

#include <cmath>

#include "autm/error.hpp"
#include "autm/universality.hpp"

namespace autm::cli {

namespace {

template <class Fn>
void check(std::vector<std::string>& problems, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    problems.emplace_back(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  if (command == "train") {
    const auto& t = train;
    const auto& m = t.model;
    check(problems, [&] { parse_layer_kind(m.kind); });
    check(problems, [&] { parse_family(m.family); });
    check(problems, [&] { parse_activation(m.activation); });
    check(problems, [&] { parse_scheme(m.scheme); });
    check(problems, [&] { make_fractions(t.fractions); });
    need(m.layers >= 1, "--layers must be >= 1");
    need(m.steps >= 1, "--steps must be >= 1");
    need(m.hidden_mult >= 0, "--hidden-mult must be >= 0");
    for (int h : m.hidden) need(h >= 1, "--hidden widths must be positive");
    need(m.split >= 0, "--split-d must be >= 0");
    need(m.c_bound >= 0.0, "--c-bound must be >= 0");
    if (m.kind == "autoregressive" && m.split != 0) problems.push_back("--split-d applies to coupling layers only");
    need(t.n >= 1, "--n must be >= 1");
    need(t.dataset.rfind("toy:", 0) == 0 || t.dataset.rfind("csv:", 0) == 0,
         "--dataset must be toy:<name> or csv:<path>");
    if (t.dataset.rfind("toy:", 0) == 0) check(problems, [&] { parse_toy(t.dataset.substr(4)); });
    TrainConfig tc;
    tc.epochs = t.epochs;
    tc.batch_size = t.batch;
    tc.learning_rate = t.lr;
    tc.lr_decay = t.lr_decay;
    tc.decay_every = t.decay_every;
    tc.patience = t.patience;
    check(problems, [&] { tc.validate(); });
  } else if (command == "density-grid" || command == "sample") {
    need(!checkpoint.empty(), "--checkpoint is required");
    if (command == "density-grid") {
      need(hi > lo, "--hi must exceed --lo");
      need(grid >= 2, "--grid must be >= 2");
      need(density_path == "reverse" || density_path == "refined", "--path must be reverse or refined");
    } else {
      need(samples >= 1, "--n must be >= 1");
    }
  } else if (command == "invert-bench") {
    need(coeffs.size() == 3, "--coeffs needs exactly three values a,b,c");
    need(!tolerances.empty(), "--tolerances must not be empty");
    for (double t : tolerances) need(t > 0.0, "--tolerances must be positive");
    need(bench_inputs >= 1, "--n must be >= 1");
    need(damping > 0.0 && damping <= 1.0, "--damping must lie in (0, 1]");
    need(steps >= 1, "--steps must be >= 1");
    check(problems, [&] { parse_scheme(scheme); });
  } else if (command == "universality") {
    need(target == "affine" || target == "softplus" || target == "arctan", "--target must be affine, softplus or arctan");
    if (target == "affine") need(alpha > 0.0, "--alpha must be positive");
    check(problems, [&] { parse_kernel(kernel); });
    need(s_list.size() >= 4, "--s needs at least four values");
    for (double s : s_list) need(s > 0.0, "--s values must be positive");
    need(k_hi > k_lo, "--hi must exceed --lo");
    need(k_grid >= 2, "--grid must be >= 2");
    need(picard_iterations >= 1, "--iterations must be >= 1");
    need(quadrature_nodes >= 2, "--nodes must be >= 2");
    need(expect_slope.empty() || expect_slope.size() == 2, "--expect-slope takes LO,HI");
  } else if (command == "gradcheck" || command == "roundtrip") {
    need(threshold >= 0.0, "--threshold must be non-negative");
    need(cases >= 1, "--cases must be >= 1");
  }

  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

SplitFractions make_fractions(const std::vector<double>& f) {
  if (f.size() != 3) throw ConfigError("--split needs three fractions train,val,test");
  SplitFractions s{f[0], f[1], f[2]};
  s.validate();
  return s;
}

Architecture make_architecture(const ModelOptions& m, int dim) {
  Architecture a;
  a.kind = parse_layer_kind(m.kind);
  a.autm_layers = m.layers;
  a.family = parse_family(m.family);
  a.hidden = m.hidden;
  if (m.hidden_mult > 0)
    for (int& h : a.hidden) h = m.hidden_mult * dim;
  a.activation = parse_activation(m.activation);
  a.solver.scheme = parse_scheme(m.scheme);
  a.solver.steps = m.steps;
  a.split = m.split;
  a.permutations = !m.no_permutations;
  a.c_bound = m.c_bound;
  return a;
}

Dataset load_dataset(const TrainOptions& t, std::uint64_t seed) {
  const SplitFractions f = make_fractions(t.fractions);
  if (t.dataset.rfind("toy:", 0) == 0) return toy2d(parse_toy(t.dataset.substr(4)), t.n, seed, f);
  return load_csv(t.dataset.substr(4), f, seed);
}

}  // namespace autm::cli
