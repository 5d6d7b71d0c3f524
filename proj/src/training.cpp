#include "autm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "autm/error.hpp"

namespace autm {

std::vector<double> get_params(const FlowModel& model) {
  std::vector<double> out;
  for (auto block : model.parameter_blocks()) out.insert(out.end(), block.begin(), block.end());
  return out;
}

void set_params(FlowModel& model, std::span<const double> params) {
  if (params.size() != model.num_params()) throw DimensionError("parameter vector has the wrong length");
  std::size_t off = 0;
  for (auto block : model.parameter_blocks()) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(off), block.size(), block.begin());
    off += block.size();
  }
}

namespace {

void check_width(const FlowModel& model, const Matrix& data) {
  if (data.cols != static_cast<std::size_t>(model.dim))
    throw DimensionError("data has " + std::to_string(data.cols) + " columns, model expects " +
                         std::to_string(model.dim));
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

double nll(const FlowModel& model, const Matrix& data) {
  check_width(model, data);
  if (data.empty()) throw ConfigError("nll of an empty data set");
  double total = 0.0;
  std::vector<std::size_t> failed;
  std::string first;
  for (std::size_t i = 0; i < data.rows; ++i) {
    try {
      total -= log_density(model, data.row(i), DensityPath::ReverseIntegration);
    } catch (const NumericalError& e) {
      if (failed.empty()) first = e.what();
      failed.push_back(i);
    }
  }
  if (!failed.empty()) throw BatchError(std::move(failed), first);
  return total / static_cast<double>(data.rows);
}

NllGrad nll_and_grad(const FlowModel& model, const Matrix& data, std::span<const std::size_t> indices) {
  check_width(model, data);
  std::vector<std::size_t> owned;
  if (indices.empty()) {
    owned = all_rows(data.rows);
    indices = owned;
  }
  if (indices.empty()) throw ConfigError("nll_and_grad needs a nonempty batch");

  const std::size_t L = model.layers.size();
  std::vector<std::size_t> offsets(L, 0);
  std::size_t total_params = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offsets[l] = total_params;
    if (const auto* c = std::get_if<CouplingLayer>(&model.layers[l])) total_params += c->net.num_params();
    if (const auto* a = std::get_if<AutoregressiveLayer>(&model.layers[l])) total_params += a->net.num_params();
  }
  auto block_of = [&](std::size_t l, std::vector<double>& g) -> std::span<double> {
    const std::size_t end = l + 1 < L ? offsets[l + 1] : total_params;
    return {g.data() + offsets[l], end - offsets[l]};
  };

  const double scale = 1.0 / static_cast<double>(indices.size());
  NllGrad out;
  out.grad.assign(total_params, 0.0);
  std::vector<double> example_grad(total_params);
  std::vector<std::size_t> failed;
  std::string first;

  // inputs[l] is what layer l's reverse map receives; inputs[L] = y.
  std::vector<std::vector<double>> inputs(L + 1);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t row = indices[b];
    try {
      const auto y = data.row(row);
      inputs[L].assign(y.begin(), y.end());
      double logdet = 0.0;
      for (std::size_t l = L; l-- > 0;) {
        LayerOutput step;
        try {
          step = layer_reverse(model.layers[l], inputs[l + 1]);
        } catch (DivergenceError& e) {
          e.set_layer(static_cast<int>(l));
          throw;
        }
        logdet += step.logdet;
        inputs[l] = std::move(step.values);
      }
      const double loss = -(standard_normal_log_density(inputs[0]) + logdet);
      if (!std::isfinite(loss)) throw NumericalError("non-finite log-density");

      std::fill(example_grad.begin(), example_grad.end(), 0.0);
      std::vector<double> cot(inputs[0].begin(), inputs[0].end());
      for (double& c : cot) c *= scale;
      for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> cot_in(cot.size(), 0.0);
        layer_reverse_vjp(model.layers[l], inputs[l + 1], cot, -scale, cot_in, block_of(l, example_grad));
        cot = std::move(cot_in);
      }
      out.loss += scale * loss;
      for (std::size_t k = 0; k < total_params; ++k) out.grad[k] += example_grad[k];
    } catch (const NumericalError& e) {
      if (failed.empty()) first = e.what();
      failed.push_back(row);
    }
  }
  if (!failed.empty()) throw BatchError(std::move(failed), first);
  return out;
}

void adam_step(AdamState& s, std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size())
    throw DimensionError("adam_step: parameter, gradient and moment sizes differ");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grads[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr decay must lie in (0, 1]");
  if (decay_every < 0) throw ConfigError("decay interval must be >= 0");
  if (patience < 0) throw ConfigError("patience must be >= 0");
}

TrainResult train(FlowModel& model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw ConfigError("training split is empty");
  const Matrix& val = data.val.empty() ? data.train : data.val;

  TrainResult result;
  result.initial_val = nll(model, val);
  result.best_val = result.initial_val;
  std::vector<double> params = get_params(model);
  std::vector<double> best = params;
  AdamState adam(params.size());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = all_rows(data.train.rows);
  double lr = cfg.learning_rate;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i-- > 1;) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    try {
      double weighted = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t count = std::min(cfg.batch_size, order.size() - start);
        const NllGrad g = nll_and_grad(model, data.train, std::span(order).subspan(start, count));
        weighted += g.loss * static_cast<double>(count);
        adam_step(adam, params, g.grad, lr);
        set_params(model, params);
      }
      rec.train_nll = weighted / static_cast<double>(order.size());
      rec.val_nll = nll(model, val);
    } catch (const NumericalError& e) {
      result.error = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_nll < result.best_val) {
      result.best_val = rec.val_nll;
      result.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
    if (cfg.decay_every > 0 && epoch % cfg.decay_every == 0) lr *= cfg.lr_decay;
  }
  set_params(model, best);
  return result;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_nll,val_nll\n";
  for (const auto& r : history)
    out << r.epoch << ',' << format_double(r.train_nll) << ',' << format_double(r.val_nll) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace autm
