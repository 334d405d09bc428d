#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "passnet/model.hpp"
#include "passnet/rng.hpp"

namespace passnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment mirrors of every parameter.
struct AdamState {
  ModelGrads first_moment;
  ModelGrads second_moment;
  long step_count = 0;
  AdamConfig config;

  static AdamState for_model(const MlpModel& model, const AdamConfig& cfg = {});
};

struct TrainConfig {
  double nu_target = 1.0;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  bool penalty_rescale = false;
  double penalty_lambda = 1.0;  // constant lambda when rescaling is off
  // lambda ramps linearly from 0 over the first epochs so fitting settles
  // before the weight-sum constraint hardens
  std::size_t penalty_warmup_epochs = 40;
  AdamConfig adam;

  void validate() const;
};

// Layer-wise hinge on the weight sum: sum_l max(n_{l-1} * nu / a - sum_ij w_ij, 0).
// entry_grad[l] is d(penalty)/d(w_ij), identical for every entry of layer l:
// -1 while the layer violates the constraint, 0 otherwise (including at
// equality). Biases never contribute.
struct PenaltyResult {
  double value = 0.0;
  std::vector<double> entry_grad;
};
PenaltyResult iifp_penalty(const MlpModel& model, double nu_target);

// MSE + lambda * penalty, with lambda = MSE / max(penalty, 1e-12) when
// rescaling is on and the penalty is positive; lambda is a constant for
// differentiation purposes.
struct LossBreakdown {
  double mse = 0.0;
  double penalty = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};
LossBreakdown total_loss(const MlpModel& model, const std::vector<TrainingSample>& batch,
                         const TrainConfig& cfg);

// The lambda actually applied for a given batch MSE and penalty value.
double penalty_weight(double mse, double penalty, const TrainConfig& cfg);

// Standard bias-corrected Adam update, in place.
void adam_step(AdamState& state, MlpModel& model, const ModelGrads& grads);

struct EpochLog {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double penalty = 0.0;
  double lambda = 0.0;
};

// The returned parameters are those of the best-validation epoch among the
// epochs whose penalty was zero (the constraint held); when no epoch
// satisfied the constraint, the overall best-validation epoch is returned.
struct TrainResult {
  MlpModel model;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  bool constraint_met = false;
};

TrainResult train(const MlpModel& initial, const std::vector<TrainingSample>& train_set,
                  const std::vector<TrainingSample>& val_set, const TrainConfig& cfg);

// Glorot-uniform weights, zero biases. The penalty drives the weight sums up
// to the layer condition during training; starting them there instead makes
// deep stacks blow up on the forward pass.
// widths = {input width, layer 1 width, ..., output width}.
MlpModel init_model(const std::vector<std::size_t>& widths, double slope_a, Rng& rng);

// CSV with columns epoch,train_mse,val_mse,penalty,lambda.
void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace passnet
