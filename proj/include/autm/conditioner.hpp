#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace autm {

enum class Activation { Tanh, ReLU };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

/// Row-major 0/1 matrix; rows index outputs, columns inputs.
struct BinaryMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;

  BinaryMatrix() = default;
  BinaryMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}
  std::uint8_t& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

/// MADE-style masks for a net with `dim` inputs, the given hidden widths and
/// `outputs_per_coord * dim` outputs.
///
/// ordering[i] is the degree (1..dim) of input i. Hidden units get degrees
/// 1..dim-1 round-robin (degree 0 when dim == 1). Output unit j belongs to
/// coordinate j / outputs_per_coord and inherits that coordinate's degree.
/// Hidden masks connect when degree(out) >= degree(in); the output mask
/// when degree(out) > degree(in).
std::vector<BinaryMatrix> build_masks(int dim, const std::vector<int>& hidden, std::span<const int> ordering,
                                      int outputs_per_coord = 3);

/// Identity ordering 1..dim.
std::vector<int> identity_ordering(int dim);

/// Boolean product masks[L-1] * ... * masks[0]: entry (o, i) is 1 iff some
/// path connects input i to output o.
BinaryMatrix connectivity(const std::vector<BinaryMatrix>& masks);

/// Fully connected feed-forward net: affine + activation on every layer but
/// the last, which is affine only. All weights and biases live in one flat
/// parameter vector, layer by layer, each layer storing its row-major weight
/// matrix (out x in) followed by its bias.
class ConditionerNet {
 public:
  ConditionerNet() = default;
  /// Throws ConfigError on fewer than two dims or non-positive widths, and
  /// DimensionError on mask shapes that do not match the weights.
  ConditionerNet(std::vector<int> layer_dims, Activation activation, std::vector<BinaryMatrix> masks = {});

  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<int>& layer_dims() const { return dims_; }
  Activation activation() const { return activation_; }
  bool masked() const { return !masks_.empty(); }
  const std::vector<BinaryMatrix>& masks() const { return masks_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::span<const double> weights(int layer) const;
  std::span<const double> biases(int layer) const;
  std::size_t weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  std::size_t bias_offset(int layer) const;

  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights and zero biases, with the
  /// final layer all zeros so the net starts out emitting zeros.
  void initialize(std::uint64_t seed);
  /// Every parameter (final layer included) uniform in [-scale, scale].
  void randomize(std::uint64_t seed, double scale);

  std::vector<double> eval(std::span<const double> input) const;

  struct Gradient {
    std::vector<double> dinput;
    std::vector<double> dparams;
  };
  Gradient vjp(std::span<const double> input, std::span<const double> cotangent) const;
  /// Accumulating form: adds into dinput (size input_dim) and dparams (size num_params).
  void vjp_accumulate(std::span<const double> input, std::span<const double> cotangent, std::span<double> dinput,
                      std::span<double> dparams) const;

 private:
  std::vector<int> dims_;
  Activation activation_ = Activation::Tanh;
  std::vector<BinaryMatrix> masks_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
};

}  // namespace autm
