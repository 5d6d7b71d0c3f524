#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <json.hpp>

#include "autm/checkpoint.hpp"
#include "autm/error.hpp"
#include "autm/gradcheck.hpp"
#include "autm/invbench.hpp"
#include "autm/map.hpp"
#include "autm/universality.hpp"
#include "autm/version.hpp"

namespace autm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& argv, const std::string& resolved) {
  json j{{"command", cfg.command},
         {"argv", argv},
         {"seed", cfg.seed},
         {"resolved_options", resolved},
         {"versions", {{"autm", AUTM_VERSION}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}}}};
  write_json(out_path(cfg, "manifest.json"), j);
}

int run_train(const RunConfig& cfg) {
  const Dataset data = load_dataset(cfg.train, cfg.seed);
  const int dim = data.dim();
  FlowModel model = cfg.train.init.empty() ? build_flow(dim, make_architecture(cfg.train.model, dim), cfg.seed)
                                           : load_checkpoint(cfg.train.init);
  if (model.dim != dim) throw ConfigError("initial checkpoint dimension does not match the data");
  std::cout << "dataset " << data.name << ": train " << data.train.rows << ", val " << data.val.rows << ", test "
            << data.test.rows << ", D=" << dim << "; model has " << model.num_params() << " parameters\n";
  save_checkpoint(model, out_path(cfg, "initial_checkpoint.json"));

  TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch;
  tc.learning_rate = cfg.train.lr;
  tc.lr_decay = cfg.train.lr_decay;
  tc.decay_every = cfg.train.decay_every;
  tc.patience = cfg.train.patience;
  tc.seed = cfg.seed;
  const TrainResult res = train(model, data, tc, [](const EpochRecord& r) {
    std::cout << "epoch " << r.epoch << "  train " << r.train_nll << "  val " << r.val_nll << "\n";
  });

  write_history_csv(out_path(cfg, "history.csv"), res.history);
  save_checkpoint(model, out_path(cfg, "checkpoint.json"));
  json summary{{"dataset", data.name},
               {"epochs_run", res.history.size()},
               {"best_epoch", res.best_epoch},
               {"best_val_nll", res.best_val},
               {"initial_val_nll", res.initial_val},
               {"early_stopped", res.early_stopped}};
  if (!data.test.empty() && !res.error) summary["test_nll"] = nll(model, data.test);
  if (res.error) summary["error"] = *res.error;
  write_json(out_path(cfg, "summary.json"), summary);
  std::cout << "best val NLL " << res.best_val << " at epoch " << res.best_epoch << "\n";
  if (res.error) {
    std::cerr << "training stopped: " << *res.error << "\n";
    return kNumerical;
  }
  return kOk;
}

int run_density_grid(const RunConfig& cfg) {
  const FlowModel model = load_checkpoint(cfg.checkpoint);
  if (model.dim != 2) throw ConfigError("density-grid needs a two-dimensional model");
  const DensityPath path = cfg.density_path == "reverse" ? DensityPath::ReverseIntegration : DensityPath::Refined;
  auto out = open_out(out_path(cfg, "density_grid.csv"));
  out << "x,y,log_density\n";
  long outside = 0;
  for (int i = 0; i < cfg.grid; ++i) {
    const double x = cfg.lo + (cfg.hi - cfg.lo) * i / (cfg.grid - 1);
    for (int j = 0; j < cfg.grid; ++j) {
      const double y = cfg.lo + (cfg.hi - cfg.lo) * j / (cfg.grid - 1);
      const double pt[2] = {x, y};
      // Points the flow cannot pull back lie outside its image: zero density.
      double ld = -HUGE_VAL;
      try {
        ld = log_density(model, pt, path);
      } catch (const NumericalError&) {
        ++outside;
      }
      out << format_double(x) << ',' << format_double(y) << ',' << format_double(ld) << '\n';
    }
  }
  std::cout << "wrote " << cfg.grid * cfg.grid << " grid points";
  if (outside > 0) std::cout << " (" << outside << " outside the image, log_density -inf)";
  std::cout << "\n";
  return kOk;
}

int run_sample(const RunConfig& cfg) {
  const FlowModel model = load_checkpoint(cfg.checkpoint);
  const Matrix s = sample(model, cfg.samples, cfg.seed);
  std::vector<std::string> header;
  for (int d = 1; d <= model.dim; ++d) header.push_back("x" + std::to_string(d));
  write_matrix_csv(out_path(cfg, "samples.csv"), s, header);
  std::cout << "wrote " << s.rows << " samples\n";
  return kOk;
}

int run_invert_bench(const RunConfig& cfg) {
  BenchConfig bc;
  bc.coeffs = {cfg.coeffs[0], cfg.coeffs[1], cfg.coeffs[2]};
  bc.solver.scheme = parse_scheme(cfg.scheme);
  bc.solver.steps = cfg.steps;
  bc.tolerances = cfg.tolerances;
  bc.n_inputs = cfg.bench_inputs;
  bc.seed = cfg.seed;
  bc.damping = cfg.damping;
  const BenchReport report = run_bench(bc);
  auto csv = open_out(out_path(cfg, "invbench.csv"));
  write_bench_csv(csv, report);
  const std::string summary = bench_summary(report);
  open_out(out_path(cfg, "invbench_summary.txt")) << summary;
  std::cout << summary;
  return kOk;
}

int run_universality(const RunConfig& cfg) {
  const MonotoneTarget target = cfg.target == "affine"     ? MonotoneTarget::affine(cfg.alpha, cfg.beta)
                                : cfg.target == "softplus" ? MonotoneTarget::softplus_shift()
                                                           : MonotoneTarget::arctan_blend();
  PicardConfig pc;
  pc.iterations = cfg.picard_iterations;
  pc.quadrature_nodes = cfg.quadrature_nodes;
  const StudyResult study =
      convergence_study(target, cfg.k_lo, cfg.k_hi, cfg.k_grid, cfg.s_list, parse_kernel(cfg.kernel), pc);
  auto csv = open_out(out_path(cfg, "universality.csv"));
  write_study_csv(csv, study);
  write_study_csv(std::cout, study);
  const std::string summary = study_summary(study);
  std::cout << target.description << ", kernel " << cfg.kernel << ": " << summary << "\n";
  if (cfg.expect_slope.size() == 2) {
    if (!study.slope || *study.slope < cfg.expect_slope[0] || *study.slope > cfg.expect_slope[1]) {
      std::cerr << "slope outside [" << cfg.expect_slope[0] << ", " << cfg.expect_slope[1] << "]\n";
      return kCheckFailed;
    }
  }
  return kOk;
}

int run_gradcheck(const RunConfig& cfg) {
  const double threshold = cfg.threshold > 0.0 ? cfg.threshold : 1e-4;
  const auto reports = gradcheck_all(cfg.seed);
  auto csv = open_out(out_path(cfg, "gradcheck.csv"));
  csv << "suite,cases,entries,max_rel_error,redrawn\n";
  double worst = 0.0;
  for (const auto& r : reports) {
    csv << r.suite << ',' << r.cases << ',' << r.entries << ',' << format_double(r.max_rel_error) << ',' << r.redrawn
        << '\n';
    std::cout << r.suite << ": " << r.cases << " cases, " << r.entries << " entries, max relative error "
              << r.max_rel_error << " (" << r.redrawn << " redrawn)\n";
    worst = std::max(worst, r.max_rel_error);
  }
  std::cout << "overall max relative error " << worst << (worst < threshold ? " < " : " >= ") << threshold << "\n";
  return worst < threshold ? kOk : kCheckFailed;
}

int run_roundtrip(const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  auto csv = open_out(out_path(cfg, "roundtrip.csv"));
  double worst = 0.0;
  int worst_iters = 0;
  bool all_converged = true;

  if (!cfg.checkpoint.empty()) {
    const double threshold = cfg.threshold > 0.0 ? cfg.threshold : 1e-6;
    const FlowModel model = load_checkpoint(cfg.checkpoint);
    const Matrix x = base_draws(model.dim, static_cast<std::size_t>(cfg.cases), cfg.seed);
    csv << "case,max_abs_error,max_iterations,converged\n";
    for (std::size_t i = 0; i < x.rows; ++i) {
      const LayerOutput y = flow_forward(model, x.row(i));
      const FlowInverse inv = flow_inverse(model, y.values);
      double err = 0.0;
      for (std::size_t d = 0; d < x.cols; ++d) err = std::max(err, std::abs(inv.x[d] - x(i, d)));
      csv << i << ',' << format_double(err) << ',' << inv.max_iterations << ',' << inv.converged << '\n';
      worst = std::max(worst, err);
      worst_iters = std::max(worst_iters, inv.max_iterations);
      all_converged = all_converged && inv.converged;
    }
    std::cout << "flow round trip over " << cfg.cases << " points: max error " << worst << ", max iterations "
              << worst_iters << "\n";
    return worst < threshold && all_converged ? kOk : kCheckFailed;
  }

  const double threshold = cfg.threshold > 0.0 ? cfg.threshold : 1e-8;
  SolverConfig fwd;
  fwd.scheme = parse_scheme(cfg.scheme);
  fwd.steps = cfg.steps;
  std::uniform_real_distribution<double> coef(-1.0, 1.0), unif_x(-2.0, 2.0);
  std::uniform_int_distribution<int> fam(0, 2);
  csv << "case,family,a,b,c,x,x_recovered,abs_error,iterations\n";
  for (int i = 0; i < cfg.cases;) {
    const Family f = static_cast<Family>(fam(rng));
    const Coeffs c{coef(rng), coef(rng), coef(rng)};
    const double x = unif_x(rng);
    const Integrand g(f, c);
    // Redraw maps whose trajectory the step count does not resolve (near blow-up).
    if (resolution_gap(g, fwd, x) > 1e-3) continue;
    const double y = forward(g, fwd, x).y;
    const InverseResult r = inverse(g, fwd.with_direction(Direction::Reverse), y);
    const double err = std::abs(r.x - x);
    csv << i << ',' << to_string(f) << ',' << format_double(c.a) << ',' << format_double(c.b) << ','
        << format_double(c.c) << ',' << format_double(x) << ',' << format_double(r.x) << ',' << format_double(err)
        << ',' << r.iterations << '\n';
    worst = std::max(worst, err);
    worst_iters = std::max(worst_iters, r.iterations);
    all_converged = all_converged && r.converged;
    ++i;
  }
  std::cout << "scalar round trip over " << cfg.cases << " cases: max error " << worst << ", max iterations "
            << worst_iters << "\n";
  return worst < threshold && all_converged ? kOk : kCheckFailed;
}

}  // namespace autm::cli
