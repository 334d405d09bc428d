#pragma once

#include <string>
#include <vector>

#include "passnet/linalg.hpp"

namespace passnet {

struct LayerParams {
  Matrix weights;  // n_l x n_{l-1}
  Vector bias;     // n_l
};

// How the last layer is activated. The cascade certificate requires every
// layer, including the output node, to pass through the Leaky ReLU; the
// linear alternative is kept for experimentation and is rejected by certify().
enum class OutputActivation { kLeakyRelu, kLinear };

// Feed-forward Leaky-ReLU network y_l = f(W_l u_{l-1} + b_l). The output
// layer counts as a cascade element, so at least three layers are required.
struct MlpModel {
  std::vector<LayerParams> layers;
  double slope_a = 0.5;
  OutputActivation output_activation = OutputActivation::kLeakyRelu;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().weights.cols; }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().weights.rows; }

  // Throws ConfigError for a bad slope, std::invalid_argument for shape or
  // finiteness problems.
  void validate() const;
};

struct ForwardTrace {
  Vector input;
  std::vector<Vector> pre_activations;  // one per layer
  std::vector<Vector> activations;      // one per layer; back() is the network output
  const Vector& output() const { return activations.back(); }
};

// Elementwise max(x, a*x) with 0 < a < 1.
Vector leaky_relu(const Vector& v, double a);

// Slope of the Leaky ReLU at pre-activation x. Exactly zero takes slope 1 so
// that gradient checks are reproducible at the kink.
inline double leaky_relu_slope(double x, double a) { return x < 0.0 ? a : 1.0; }

ForwardTrace forward(const MlpModel& model, const Vector& input);

struct LayerGrads {
  Matrix weights;
  Vector bias;
};

struct ModelGrads {
  std::vector<LayerGrads> layers;
  static ModelGrads zeros_like(const MlpModel& model);
};

struct TrainingSample {
  Vector input;
  double target = 0.0;
};

// Mean-squared-error gradients over a batch, by backpropagation. Requires a
// single-node output layer (the regression setting). Returns the batch MSE
// from the same pass.
struct BatchGradients {
  ModelGrads grads;
  double mse = 0.0;
};
BatchGradients mse_gradients(const MlpModel& model, const std::vector<TrainingSample>& batch);

double mean_squared_error(const MlpModel& model, const std::vector<TrainingSample>& samples);

// JSON model document, schema version "1":
//   {"version":"1","slope_a":0.5,"output_activation":"leaky_relu",
//    "layers":[{"rows":R,"cols":C,"weights":[R*C row-major],"bias":[R]}]}
// The round trip is bit-exact.
std::string serialize(const MlpModel& model);
MlpModel deserialize(const std::string& text);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace passnet
