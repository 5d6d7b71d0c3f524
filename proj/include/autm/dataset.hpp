#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "autm/matrix.hpp"

namespace autm {

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
  /// Throws ConfigError unless all are >= 0, train > 0 and they sum to 1.
  void validate() const;
};

struct Dataset {
  std::string name;
  Matrix train;
  Matrix val;
  Matrix test;
  SplitFractions fractions;
  /// Per-column statistics used for standardization (train split).
  std::vector<double> mean;
  std::vector<double> std;

  int dim() const { return static_cast<int>(train.cols); }
};

enum class Toy { TwoMoons, Rings, Checkerboard, TwoGaussians };
std::string_view to_string(Toy toy);
Toy parse_toy(std::string_view name);

/// Seeded samplers, n rows each:
///   TwoMoons      t ~ U(0, pi); upper moon (cos t, sin t), lower moon
///                 (1 - cos t, 0.5 - sin t), chosen with probability 1/2,
///                 plus N(0, 0.1^2) noise per coordinate.
///   Rings         radius 1 or 2 with probability 1/2, angle ~ U(0, 2 pi),
///                 radius jittered by N(0, 0.1^2).
///   Checkerboard  x1 ~ U(-2, 2); x2 ~ U(0, 1) - 2 k with k ~ {0, 1}, then
///                 x2 += floor(x1) mod 2, giving 8 unit squares in [-2, 2]^2.
///   TwoGaussians  centres (+2, 0) and (-2, 0) with probability 1/2, isotropic
///                 standard deviation 0.5.
Matrix toy2d_rows(Toy toy, std::size_t n, std::uint64_t seed);

/// toy2d_rows split into train/val/test (rows are already in random order).
/// Toy data is left unstandardized; mean/std are recorded as 0/1.
Dataset toy2d(Toy toy, std::size_t n, std::uint64_t seed, const SplitFractions& fractions = {});

/// Reads a numeric comma-separated file. A first line that does not parse as
/// numbers is taken as a header. Rows are shuffled with the seed, split, and
/// every column standardized with the train split's mean and population std.
/// Throws ParseError (with line numbers) on bad input and ConfigError on a
/// constant column.
Dataset load_csv(const std::filesystem::path& path, const SplitFractions& fractions, std::uint64_t seed);

/// Same as load_csv, from already-loaded text.
Dataset parse_csv(std::string_view text, const SplitFractions& fractions, std::uint64_t seed,
                  std::string name = "csv");

/// Writes a header row and then one CSV row per matrix row.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header);

/// Round-trip decimal form of a double, as used in every CSV output.
std::string format_double(double v);

}  // namespace autm
