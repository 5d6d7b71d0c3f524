#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autm/dataset.hpp"
#include "autm/flow.hpp"
#include "autm/training.hpp"

namespace autm::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kNumerical = 4,
  kIo = 5,
  kCheckFailed = 6,
};

struct ModelOptions {
  std::string kind = "coupling";
  int layers = 4;
  std::string family = "quadratic";
  std::vector<int> hidden{32, 32};
  /// When > 0, every hidden width becomes hidden_mult * D.
  int hidden_mult = 0;
  std::string activation = "tanh";
  std::string scheme = "rk4";
  int steps = 16;
  int split = 0;
  bool no_permutations = false;
  double c_bound = 0.1;
};

struct TrainOptions {
  std::string dataset = "toy:two_gaussians";
  std::size_t n = 5000;
  std::vector<double> fractions{0.8, 0.1, 0.1};
  ModelOptions model;
  int epochs = 100;
  std::size_t batch = 256;
  double lr = 1e-2;
  double lr_decay = 1.0;
  int decay_every = 0;
  int patience = 20;
  std::string init;
};

/// Everything a subcommand needs, after flags and config file are merged.
struct RunConfig {
  std::string command;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  TrainOptions train;

  /// density-grid / sample / roundtrip
  std::string checkpoint;
  double lo = -4.0;
  double hi = 4.0;
  int grid = 101;
  std::string density_path = "refined";
  std::size_t samples = 1000;

  /// invert-bench
  std::vector<double> coeffs{0.5, 0.1, 0.2};
  std::vector<double> tolerances{1e-3, 1e-4, 1e-5, 1e-6};
  std::size_t bench_inputs = 1000;
  double damping = 0.5;

  /// universality
  std::string target = "affine";
  double alpha = 2.0;
  double beta = 1.0;
  std::vector<double> s_list{0.5, 1.0 / 3.0, 0.25, 0.2};
  std::string kernel = "constant";
  double k_lo = -1.0;
  double k_hi = 1.0;
  int k_grid = 201;
  int picard_iterations = 3;
  int quadrature_nodes = 257;
  std::vector<double> expect_slope;

  /// gradcheck / roundtrip; 0 picks the command's own default.
  double threshold = 0.0;
  int cases = 100;

  int steps = 16;
  std::string scheme = "rk4";

  /// Throws ConfigError listing every problem found.
  void validate() const;
};

Architecture make_architecture(const ModelOptions& m, int dim);
Dataset load_dataset(const TrainOptions& t, std::uint64_t seed);
SplitFractions make_fractions(const std::vector<double>& f);

}  // namespace autm::cli
