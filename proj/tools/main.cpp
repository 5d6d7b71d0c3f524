#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autm/error.hpp"
#include "autm/version.hpp"
#include "commands.hpp"
#include "run_config.hpp"

using namespace autm::cli;

namespace {

const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad value)\n"
    "  3  invalid configuration\n"
    "  4  numerical failure (divergence, non-finite values)\n"
    "  5  I/O or input file error\n"
    "  6  a check did not pass (gradcheck, roundtrip, universality --expect-slope)\n";

void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--kind", m.kind, "coupling or autoregressive")->capture_default_str();
  sub->add_option("--layers", m.layers, "number of AUTM layers")->capture_default_str();
  sub->add_option("--family", m.family, "quadratic, cubic or sigmoid")->capture_default_str();
  sub->add_option("--hidden", m.hidden, "conditioner hidden widths")->delimiter(',')->capture_default_str();
  sub->add_option("--hidden-mult", m.hidden_mult, "if > 0, every hidden width becomes this times D")
      ->capture_default_str();
  sub->add_option("--activation", m.activation, "tanh or relu")->capture_default_str();
  sub->add_option("--scheme", m.scheme, "rk4 or euler")->capture_default_str();
  sub->add_option("--steps", m.steps, "solver steps over the unit interval")->capture_default_str();
  sub->add_option("--split-d", m.split, "coupling split d (0 = floor(D/2))")->capture_default_str();
  sub->add_option("--c-bound", m.c_bound, "bound on |c| via c = B tanh(r / B); 0 leaves c unbounded")
      ->capture_default_str();
  sub->add_flag("--no-permutations", m.no_permutations, "do not insert permutations between AUTM layers");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"AUTM monotone maps and flows (version " AUTM_VERSION ")", "autm"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();

  auto* train = app.add_subcommand("train", "fit a flow by maximum likelihood");
  train->add_option("--dataset", cfg.train.dataset, "toy:<two_moons|rings|checkerboard|two_gaussians> or csv:<path>")
      ->capture_default_str();
  train->add_option("--n", cfg.train.n, "toy dataset size")->capture_default_str();
  train->add_option("--split", cfg.train.fractions, "train,val,test fractions")->delimiter(',')->capture_default_str();
  add_model_options(train, cfg.train.model);
  train->add_option("--epochs", cfg.train.epochs)->capture_default_str();
  train->add_option("--batch", cfg.train.batch)->capture_default_str();
  train->add_option("--lr", cfg.train.lr)->capture_default_str();
  train->add_option("--lr-decay", cfg.train.lr_decay, "multiplier applied every --decay-every epochs")
      ->capture_default_str();
  train->add_option("--decay-every", cfg.train.decay_every, "0 disables decay")->capture_default_str();
  train->add_option("--patience", cfg.train.patience, "early-stop patience in epochs (0 disables)")
      ->capture_default_str();
  train->add_option("--init", cfg.train.init, "start from this checkpoint instead of a fresh model");

  auto* grid = app.add_subcommand("density-grid", "log-density of a 2-D model on a square grid");
  grid->add_option("--checkpoint", cfg.checkpoint)->required();
  grid->add_option("--lo", cfg.lo)->capture_default_str();
  grid->add_option("--hi", cfg.hi)->capture_default_str();
  grid->add_option("--grid", cfg.grid, "points per axis")->capture_default_str();
  grid->add_option("--path", cfg.density_path, "reverse or refined")->capture_default_str();

  auto* samp = app.add_subcommand("sample", "draw samples from a model");
  samp->add_option("--checkpoint", cfg.checkpoint)->required();
  samp->add_option("--n", cfg.samples)->capture_default_str();

  auto* bench = app.add_subcommand("invert-bench", "bisection vs fixed-point inversion step counts");
  bench->add_option("--coeffs", cfg.coeffs, "quadratic integrand a,b,c")->delimiter(',')->capture_default_str();
  bench->add_option("--tolerances", cfg.tolerances)->delimiter(',')->capture_default_str();
  bench->add_option("--n", cfg.bench_inputs, "number of uniform inputs")->capture_default_str();
  bench->add_option("--damping", cfg.damping, "initial fixed-point damping")->capture_default_str();
  bench->add_option("--steps", cfg.steps)->capture_default_str();
  bench->add_option("--scheme", cfg.scheme)->capture_default_str();

  auto* univ = app.add_subcommand("universality", "convergence of q_s to a monotone target");
  univ->add_option("--target", cfg.target, "affine, softplus or arctan")->capture_default_str();
  univ->add_option("--alpha", cfg.alpha)->capture_default_str();
  univ->add_option("--beta", cfg.beta)->capture_default_str();
  univ->add_option("--s", cfg.s_list, "decreasing scales")->delimiter(',')->capture_default_str();
  univ->add_option("--kernel", cfg.kernel, "constant or gaussian")->capture_default_str();
  univ->add_option("--lo", cfg.k_lo)->capture_default_str();
  univ->add_option("--hi", cfg.k_hi)->capture_default_str();
  univ->add_option("--grid", cfg.k_grid)->capture_default_str();
  univ->add_option("--iterations", cfg.picard_iterations)->capture_default_str();
  univ->add_option("--nodes", cfg.quadrature_nodes)->capture_default_str();
  univ->add_option("--expect-slope", cfg.expect_slope, "LO,HI: exit 6 unless the fitted slope lies inside")
      ->delimiter(',')
      ->expected(2);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of every gradient");
  grad->add_option("--threshold", cfg.threshold, "maximum relative error (default 1e-4)");

  auto* rt = app.add_subcommand("roundtrip", "inverse(forward(x)) on random scalar maps or a checkpoint");
  rt->add_option("--checkpoint", cfg.checkpoint, "check a flow instead of scalar maps");
  rt->add_option("--cases", cfg.cases)->capture_default_str();
  rt->add_option("--threshold", cfg.threshold, "maximum error (default 1e-8 scalar, 1e-6 flow)");
  rt->add_option("--steps", cfg.steps)->capture_default_str();
  rt->add_option("--scheme", cfg.scheme)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
    cfg.validate();
    write_manifest(cfg, args, app.config_to_str(true, false));
    if (cfg.command == "train") return run_train(cfg);
    if (cfg.command == "density-grid") return run_density_grid(cfg);
    if (cfg.command == "sample") return run_sample(cfg);
    if (cfg.command == "invert-bench") return run_invert_bench(cfg);
    if (cfg.command == "universality") return run_universality(cfg);
    if (cfg.command == "gradcheck") return run_gradcheck(cfg);
    if (cfg.command == "roundtrip") return run_roundtrip(cfg);
    std::cerr << "unknown command\n";
    return kUsage;
  } catch (const autm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const autm::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const autm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const autm::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const autm::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
