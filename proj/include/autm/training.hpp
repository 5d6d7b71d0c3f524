#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autm/dataset.hpp"
#include "autm/flow.hpp"
#include "autm/matrix.hpp"

namespace autm {

/// All conditioner parameters of the model, concatenated in layer order.
std::vector<double> get_params(const FlowModel& model);
void set_params(FlowModel& model, std::span<const double> params);

/// Mean negative log-likelihood (nats per example) on the given rows, on the
/// reverse-integration path that nll_and_grad differentiates. Failing rows are collected and reported together as a BatchError.
double nll(const FlowModel& model, const Matrix& data);

struct NllGrad {
  double loss = 0.0;
  /// Gradient with respect to get_params(model).
  std::vector<double> grad;
};

/// Loss and its exact gradient on rows[indices] (all rows when empty).
NllGrad nll_and_grad(const FlowModel& model, const Matrix& data, std::span<const std::size_t> indices = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 256;
  double learning_rate = 1e-2;
  /// lr is multiplied by lr_decay every decay_every epochs (0 disables).
  double lr_decay = 1.0;
  int decay_every = 0;
  std::uint64_t seed = 0;
  /// Stop after this many epochs without a validation improvement (0 disables).
  int patience = 20;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  /// 0 when no epoch improved on the initial model.
  int best_epoch = 0;
  double best_val = 0.0;
  double initial_val = 0.0;
  bool early_stopped = false;
  /// Set when a batch failed; history holds the epochs completed before it.
  std::optional<std::string> error;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam on the train split. The model is left at the parameters
/// with the best validation NLL (the train split stands in when val is empty).
TrainResult train(FlowModel& model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// epoch,train_nll,val_nll
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace autm
