#include "passnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "passnet/errors.hpp"

namespace passnet {

void TrainConfig::validate() const {
  if (!(nu_target > 0.0)) throw ConfigError("train: nu_target must be positive");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be positive");
  if (patience == 0) throw ConfigError("train: patience must be at least 1");
}

AdamState AdamState::for_model(const MlpModel& model, const AdamConfig& cfg) {
  AdamState s;
  s.first_moment = ModelGrads::zeros_like(model);
  s.second_moment = ModelGrads::zeros_like(model);
  s.config = cfg;
  return s;
}

PenaltyResult iifp_penalty(const MlpModel& model, double nu_target) {
  PenaltyResult result;
  result.entry_grad.assign(model.layer_count(), 0.0);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const LayerParams& layer = model.layers[l];
    const double n_prev = static_cast<double>(layer.weights.cols);
    const double constant_term = n_prev * nu_target / model.slope_a;
    const double weight_sum =
        std::accumulate(layer.weights.values.begin(), layer.weights.values.end(), 0.0);
    const double term = constant_term - weight_sum;
    if (term > 0.0) {
      result.value += term;
      result.entry_grad[l] = -1.0;
    }
  }
  return result;
}

// Rescaling matches the penalty's loss contribution to the MSE; the weight is
// capped so a near-zero penalty cannot produce gradient spikes that poison
// the Adam moments.
double penalty_weight(double mse, double penalty, const TrainConfig& cfg) {
  if (cfg.penalty_rescale && penalty > 0.0) {
    return std::min(mse / std::max(penalty, 1e-12), 10.0);
  }
  return cfg.penalty_lambda;
}

LossBreakdown total_loss(const MlpModel& model, const std::vector<TrainingSample>& batch,
                         const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("total_loss: batch must not be empty");
  LossBreakdown out;
  out.mse = mean_squared_error(model, batch);
  const PenaltyResult pen = iifp_penalty(model, cfg.nu_target);
  out.penalty = pen.value;
  out.lambda = penalty_weight(out.mse, pen.value, cfg);
  out.total = out.mse + out.lambda * out.penalty;
  return out;
}

void adam_step(AdamState& state, MlpModel& model, const ModelGrads& grads) {
  if (grads.layers.size() != model.layer_count()) {
    throw std::invalid_argument("adam_step: gradient shape does not match model");
  }
  state.step_count += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));

  auto update = [&](double& param, double grad, double& m, double& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad * grad;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  };

  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    LayerParams& layer = model.layers[l];
    const LayerGrads& g = grads.layers[l];
    LayerGrads& m = state.first_moment.layers[l];
    LayerGrads& v = state.second_moment.layers[l];
    for (std::size_t i = 0; i < layer.weights.values.size(); ++i) {
      update(layer.weights.values[i], g.weights.values[i], m.weights.values[i],
             v.weights.values[i]);
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      update(layer.bias[i], g.bias[i], m.bias[i], v.bias[i]);
    }
  }
}

TrainResult train(const MlpModel& initial, const std::vector<TrainingSample>& train_set,
                  const std::vector<TrainingSample>& val_set, const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  if (train_set.empty() || val_set.empty()) {
    throw std::invalid_argument("train: train and validation splits must not be empty");
  }

  MlpModel model = initial;
  AdamState adam = AdamState::for_model(model, cfg.adam);
  Rng rng(cfg.seed);

  TrainResult result;
  result.model = model;
  double best_val = std::numeric_limits<double>::infinity();
  double best_feasible_val = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);

    const double warmup =
        cfg.penalty_warmup_epochs == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(epoch) /
                                static_cast<double>(cfg.penalty_warmup_epochs));

    double train_mse_acc = 0.0;
    double lambda_acc = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::vector<TrainingSample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);

      BatchGradients bg = mse_gradients(model, batch);
      const PenaltyResult pen = iifp_penalty(model, cfg.nu_target);
      const double lambda = warmup * penalty_weight(bg.mse, pen.value, cfg);
      const double batch_loss = bg.mse + lambda * pen.value;
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                            " (check the learning rate and input scaling)");
      }
      for (std::size_t l = 0; l < model.layer_count(); ++l) {
        const double pg = lambda * pen.entry_grad[l];
        if (pg != 0.0) {
          for (double& w : bg.grads.layers[l].weights.values) w += pg;
        }
      }
      adam_step(adam, model, bg.grads);

      train_mse_acc += bg.mse * static_cast<double>(end - start);
      lambda_acc += lambda;
      n_batches += 1;
    }

    const double val_mse = mean_squared_error(model, val_set);
    EpochLog row;
    row.epoch = epoch;
    row.train_mse = train_mse_acc / static_cast<double>(train_set.size());
    row.val_mse = val_mse;
    row.penalty = iifp_penalty(model, cfg.nu_target).value;
    row.lambda = lambda_acc / static_cast<double>(n_batches);
    result.log.push_back(row);

    const bool feasible = row.penalty == 0.0;
    if (feasible && val_mse < best_feasible_val) {
      best_feasible_val = val_mse;
      result.model = model;
      result.best_epoch = epoch;
      result.constraint_met = true;
      epochs_since_best = 0;
    } else {
      if (!result.constraint_met && val_mse < best_val) {
        best_val = val_mse;
        result.model = model;
        result.best_epoch = epoch;
      }
      // patience runs against the selection objective; before the constraint
      // is first met there is nothing to stop early for
      if (result.constraint_met) {
        epochs_since_best += 1;
        if (epochs_since_best >= cfg.patience) break;
      }
    }
  }
  return result;
}

MlpModel init_model(const std::vector<std::size_t>& widths, double slope_a, Rng& rng) {
  if (widths.size() < 4) {
    throw ConfigError("init_model: need an input width plus at least 3 layer widths");
  }
  if (!(slope_a > 0.0 && slope_a < 1.0)) {
    throw ConfigError("init_model: slope_a must lie in (0,1)");
  }
  MlpModel model;
  model.slope_a = slope_a;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    const std::size_t n_in = widths[l - 1];
    const std::size_t n_out = widths[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    LayerParams layer;
    layer.weights = Matrix(n_out, n_in);
    for (double& w : layer.weights.values) w = rng.uniform(-limit, limit);
    layer.bias = Vector(n_out, 0.0);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_training_log_csv: cannot open " + path);
  out << "epoch,train_mse,val_mse,penalty,lambda\n";
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", row.epoch, row.train_mse,
                  row.val_mse, row.penalty, row.lambda);
    out << buf;
  }
}

}  // namespace passnet
