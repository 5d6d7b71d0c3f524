#include "autm/conditioner.hpp"

#include <cmath>
#include <random>
#include <string>

#include "autm/error.hpp"

namespace autm {

std::string_view to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::ReLU;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::vector<int> identity_ordering(int dim) {
  std::vector<int> ord(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) ord[static_cast<std::size_t>(i)] = i + 1;
  return ord;
}

std::vector<BinaryMatrix> build_masks(int dim, const std::vector<int>& hidden, std::span<const int> ordering,
                                      int outputs_per_coord) {
  if (dim < 1) throw ConfigError("mask dimension must be >= 1");
  if (static_cast<int>(ordering.size()) != dim) throw DimensionError("ordering length must equal dim");
  if (outputs_per_coord < 1) throw ConfigError("outputs_per_coord must be >= 1");
  {
    std::vector<bool> seen(static_cast<std::size_t>(dim) + 1, false);
    for (int d : ordering) {
      if (d < 1 || d > dim || seen[static_cast<std::size_t>(d)]) throw ConfigError("ordering must permute 1..dim");
      seen[static_cast<std::size_t>(d)] = true;
    }
  }

  std::vector<int> prev(ordering.begin(), ordering.end());
  std::vector<BinaryMatrix> masks;
  for (int width : hidden) {
    if (width < 1) throw ConfigError("hidden widths must be positive");
    std::vector<int> deg(static_cast<std::size_t>(width));
    for (int j = 0; j < width; ++j) deg[static_cast<std::size_t>(j)] = dim > 1 ? 1 + j % (dim - 1) : 0;
    BinaryMatrix m(width, static_cast<int>(prev.size()));
    for (int o = 0; o < width; ++o)
      for (int i = 0; i < m.cols; ++i) m(o, i) = deg[static_cast<std::size_t>(o)] >= prev[static_cast<std::size_t>(i)];
    masks.push_back(std::move(m));
    prev = std::move(deg);
  }
  const int outputs = outputs_per_coord * dim;
  BinaryMatrix out(outputs, static_cast<int>(prev.size()));
  for (int o = 0; o < outputs; ++o) {
    const int deg = ordering[static_cast<std::size_t>(o / outputs_per_coord)];
    for (int i = 0; i < out.cols; ++i) out(o, i) = deg > prev[static_cast<std::size_t>(i)];
  }
  masks.push_back(std::move(out));
  return masks;
}

BinaryMatrix connectivity(const std::vector<BinaryMatrix>& masks) {
  if (masks.empty()) throw ConfigError("connectivity of an empty mask list");
  BinaryMatrix acc = masks.front();
  for (std::size_t l = 1; l < masks.size(); ++l) {
    const BinaryMatrix& m = masks[l];
    if (m.cols != acc.rows) throw DimensionError("mask shapes do not chain");
    BinaryMatrix next(m.rows, acc.cols);
    for (int o = 0; o < m.rows; ++o)
      for (int k = 0; k < m.cols; ++k)
        if (m(o, k))
          for (int i = 0; i < acc.cols; ++i) next(o, i) |= acc(k, i);
    acc = std::move(next);
  }
  return acc;
}

ConditionerNet::ConditionerNet(std::vector<int> layer_dims, Activation activation, std::vector<BinaryMatrix> masks)
    : dims_(std::move(layer_dims)), activation_(activation), masks_(std::move(masks)) {
  if (dims_.size() < 2) throw ConfigError("conditioner needs at least input and output dims");
  for (int d : dims_)
    if (d < 1) throw ConfigError("conditioner layer dims must be positive");
  if (!masks_.empty()) {
    if (static_cast<int>(masks_.size()) != num_layers()) throw DimensionError("one mask per layer required");
    for (int l = 0; l < num_layers(); ++l) {
      const auto& m = masks_[static_cast<std::size_t>(l)];
      if (m.rows != dims_[static_cast<std::size_t>(l) + 1] || m.cols != dims_[static_cast<std::size_t>(l)])
        throw DimensionError("mask shape does not match layer " + std::to_string(l));
    }
  }
  std::size_t total = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(total);
    const auto in = static_cast<std::size_t>(dims_[static_cast<std::size_t>(l)]);
    const auto out = static_cast<std::size_t>(dims_[static_cast<std::size_t>(l) + 1]);
    total += out * in + out;
  }
  params_.assign(total, 0.0);
}

std::size_t ConditionerNet::bias_offset(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return offsets_[l] + static_cast<std::size_t>(dims_[l + 1]) * static_cast<std::size_t>(dims_[l]);
}

std::span<const double> ConditionerNet::weights(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return std::span<const double>(params_).subspan(offsets_[l],
                                                  static_cast<std::size_t>(dims_[l + 1]) * static_cast<std::size_t>(dims_[l]));
}

std::span<const double> ConditionerNet::biases(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return std::span<const double>(params_).subspan(bias_offset(layer), static_cast<std::size_t>(dims_[l + 1]));
}

void ConditionerNet::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (int l = 0; l + 1 < num_layers(); ++l) {
    const int in = dims_[static_cast<std::size_t>(l)];
    const int out = dims_[static_cast<std::size_t>(l) + 1];
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t off = offsets_[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < static_cast<std::size_t>(in) * static_cast<std::size_t>(out); ++k) params_[off + k] = u(rng);
  }
}

void ConditionerNet::randomize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& p : params_) p = u(rng);
}

namespace {

inline double activate(Activation act, double z) { return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0); }

// Derivative expressed through the activation output a and pre-activation z.
inline double activate_grad(Activation act, double z, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (z > 0.0 ? 1.0 : 0.0);
}

}  // namespace

std::vector<double> ConditionerNet::eval(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != input_dim())
    throw DimensionError("conditioner expects " + std::to_string(input_dim()) + " inputs, got " +
                         std::to_string(input.size()));
  std::vector<double> a(input.begin(), input.end());
  for (int l = 0; l < num_layers(); ++l) {
    const int in = dims_[static_cast<std::size_t>(l)];
    const int out = dims_[static_cast<std::size_t>(l) + 1];
    const double* w = params_.data() + offsets_[static_cast<std::size_t>(l)];
    const double* b = params_.data() + bias_offset(l);
    const BinaryMatrix* mask = masked() ? &masks_[static_cast<std::size_t>(l)] : nullptr;
    const bool last = l + 1 == num_layers();
    std::vector<double> z(static_cast<std::size_t>(out));
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i)
        if (!mask || (*mask)(o, i)) s += row[i] * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = last ? s : activate(activation_, s);
    }
    a = std::move(z);
  }
  return a;
}

ConditionerNet::Gradient ConditionerNet::vjp(std::span<const double> input, std::span<const double> cotangent) const {
  Gradient g;
  g.dinput.assign(static_cast<std::size_t>(input_dim()), 0.0);
  g.dparams.assign(params_.size(), 0.0);
  vjp_accumulate(input, cotangent, g.dinput, g.dparams);
  return g;
}

void ConditionerNet::vjp_accumulate(std::span<const double> input, std::span<const double> cotangent,
                                    std::span<double> dinput, std::span<double> dparams) const {
  if (static_cast<int>(input.size()) != input_dim()) throw DimensionError("conditioner vjp: input size mismatch");
  if (static_cast<int>(cotangent.size()) != output_dim()) throw DimensionError("conditioner vjp: cotangent size mismatch");
  if (static_cast<int>(dinput.size()) != input_dim() || dparams.size() != params_.size())
    throw DimensionError("conditioner vjp: gradient buffer size mismatch");

  // Forward pass keeping layer inputs and pre-activations.
  const int L = num_layers();
  std::vector<std::vector<double>> acts(static_cast<std::size_t>(L) + 1);
  std::vector<std::vector<double>> pre(static_cast<std::size_t>(L));
  acts[0].assign(input.begin(), input.end());
  for (int l = 0; l < L; ++l) {
    const int in = dims_[static_cast<std::size_t>(l)];
    const int out = dims_[static_cast<std::size_t>(l) + 1];
    const double* w = params_.data() + offsets_[static_cast<std::size_t>(l)];
    const double* b = params_.data() + bias_offset(l);
    const BinaryMatrix* mask = masked() ? &masks_[static_cast<std::size_t>(l)] : nullptr;
    auto& z = pre[static_cast<std::size_t>(l)];
    auto& a = acts[static_cast<std::size_t>(l) + 1];
    z.assign(static_cast<std::size_t>(out), 0.0);
    a.assign(static_cast<std::size_t>(out), 0.0);
    const auto& prev = acts[static_cast<std::size_t>(l)];
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i)
        if (!mask || (*mask)(o, i)) s += row[i] * prev[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = s;
      a[static_cast<std::size_t>(o)] = l + 1 == L ? s : activate(activation_, s);
    }
  }

  std::vector<double> delta(cotangent.begin(), cotangent.end());
  for (int l = L - 1; l >= 0; --l) {
    const int in = dims_[static_cast<std::size_t>(l)];
    const int out = dims_[static_cast<std::size_t>(l) + 1];
    const double* w = params_.data() + offsets_[static_cast<std::size_t>(l)];
    double* dw = dparams.data() + offsets_[static_cast<std::size_t>(l)];
    double* db = dparams.data() + bias_offset(l);
    const BinaryMatrix* mask = masked() ? &masks_[static_cast<std::size_t>(l)] : nullptr;
    const auto& prev = acts[static_cast<std::size_t>(l)];
    std::vector<double> back(static_cast<std::size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      db[o] += d;
      if (d == 0.0) continue;
      const std::size_t row = static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        if (mask && !(*mask)(o, i)) continue;
        dw[row + i] += d * prev[static_cast<std::size_t>(i)];
        back[static_cast<std::size_t>(i)] += w[row + i] * d;
      }
    }
    if (l == 0) {
      for (int i = 0; i < in; ++i) dinput[static_cast<std::size_t>(i)] += back[static_cast<std::size_t>(i)];
    } else {
      const auto& z = pre[static_cast<std::size_t>(l) - 1];
      const auto& a = acts[static_cast<std::size_t>(l)];
      for (int i = 0; i < in; ++i)
        back[static_cast<std::size_t>(i)] *= activate_grad(activation_, z[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]);
      delta = std::move(back);
    }
  }
}

}  // namespace autm
