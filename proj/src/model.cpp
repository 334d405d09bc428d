#include "passnet/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "passnet/errors.hpp"

namespace passnet {

void MlpModel::validate() const {
  if (!(slope_a > 0.0 && slope_a < 1.0)) {
    throw ConfigError("model: slope_a must lie in (0,1), got " + std::to_string(slope_a));
  }
  if (layers.size() < 3) {
    throw std::invalid_argument("model: at least 3 layers are required, got " +
                                std::to_string(layers.size()));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerParams& layer = layers[l];
    if (layer.weights.values.size() != layer.weights.rows * layer.weights.cols ||
        layer.weights.rows == 0 || layer.weights.cols == 0) {
      throw std::invalid_argument("model: layer " + std::to_string(l + 1) +
                                  " has inconsistent weight storage");
    }
    if (layer.bias.size() != layer.weights.rows) {
      throw std::invalid_argument("model: layer " + std::to_string(l + 1) +
                                  " bias length does not match row count");
    }
    if (l > 0 && layer.weights.cols != layers[l - 1].weights.rows) {
      throw std::invalid_argument("model: layer " + std::to_string(l + 1) +
                                  " expects input width " + std::to_string(layer.weights.cols) +
                                  " but previous layer outputs " +
                                  std::to_string(layers[l - 1].weights.rows));
    }
    if (!all_finite(layer.weights) || !all_finite(layer.bias)) {
      throw std::invalid_argument("model: layer " + std::to_string(l + 1) +
                                  " contains non-finite parameters");
    }
  }
}

Vector leaky_relu(const Vector& v, double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw ConfigError("leaky_relu: slope must lie in (0,1), got " + std::to_string(a));
  }
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] >= 0.0 ? v[i] : a * v[i];
  }
  return out;
}

ForwardTrace forward(const MlpModel& model, const Vector& input) {
  if (input.size() != model.input_width()) {
    throw std::invalid_argument("forward: input has " + std::to_string(input.size()) +
                                " entries, model expects " +
                                std::to_string(model.input_width()));
  }
  ForwardTrace trace;
  trace.input = input;
  trace.pre_activations.reserve(model.layer_count());
  trace.activations.reserve(model.layer_count());
  const Vector* current = &input;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    Vector pre = matvec(model.layers[l].weights, *current);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += model.layers[l].bias[i];
    const bool linear_output = l + 1 == model.layer_count() &&
                               model.output_activation == OutputActivation::kLinear;
    Vector act = linear_output ? pre : leaky_relu(pre, model.slope_a);
    trace.pre_activations.push_back(std::move(pre));
    trace.activations.push_back(std::move(act));
    current = &trace.activations.back();
  }
  return trace;
}

ModelGrads ModelGrads::zeros_like(const MlpModel& model) {
  ModelGrads g;
  g.layers.reserve(model.layer_count());
  for (const LayerParams& layer : model.layers) {
    g.layers.push_back({Matrix(layer.weights.rows, layer.weights.cols, 0.0),
                        Vector(layer.bias.size(), 0.0)});
  }
  return g;
}

BatchGradients mse_gradients(const MlpModel& model, const std::vector<TrainingSample>& batch) {
  if (batch.empty()) {
    throw std::invalid_argument("mse_gradients: batch must not be empty");
  }
  if (model.output_width() != 1) {
    throw std::invalid_argument("mse_gradients: model must have a single output node");
  }
  const std::size_t n_layers = model.layer_count();
  const double inv_k = 1.0 / static_cast<double>(batch.size());

  BatchGradients result;
  result.grads = ModelGrads::zeros_like(model);

  for (const TrainingSample& sample : batch) {
    const ForwardTrace trace = forward(model, sample.input);
    const double err = trace.output()[0] - sample.target;
    result.mse += err * err * inv_k;

    // d(MSE)/d(output), then walk the layers backwards
    Vector d_act(1, 2.0 * err * inv_k);
    for (std::size_t l = n_layers; l-- > 0;) {
      const LayerParams& layer = model.layers[l];
      const Vector& pre = trace.pre_activations[l];
      const bool linear_output =
          l + 1 == n_layers && model.output_activation == OutputActivation::kLinear;
      Vector d_pre(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) {
        const double slope = linear_output ? 1.0 : leaky_relu_slope(pre[i], model.slope_a);
        d_pre[i] = d_act[i] * slope;
      }
      const Vector& upstream = l == 0 ? trace.input : trace.activations[l - 1];
      LayerGrads& lg = result.grads.layers[l];
      for (std::size_t i = 0; i < layer.weights.rows; ++i) {
        lg.bias[i] += d_pre[i];
        for (std::size_t j = 0; j < layer.weights.cols; ++j) {
          lg.weights(i, j) += d_pre[i] * upstream[j];
        }
      }
      if (l > 0) {
        Vector d_prev(layer.weights.cols, 0.0);
        for (std::size_t i = 0; i < layer.weights.rows; ++i) {
          const double dpi = d_pre[i];
          for (std::size_t j = 0; j < layer.weights.cols; ++j) {
            d_prev[j] += layer.weights(i, j) * dpi;
          }
        }
        d_act = std::move(d_prev);
      }
    }
  }
  return result;
}

double mean_squared_error(const MlpModel& model, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("mean_squared_error: sample set must not be empty");
  }
  double acc = 0.0;
  for (const TrainingSample& s : samples) {
    const ForwardTrace t = forward(model, s.input);
    const double err = t.output()[0] - s.target;
    acc += err * err;
  }
  return acc / static_cast<double>(samples.size());
}

namespace {

const char* activation_name(OutputActivation act) {
  return act == OutputActivation::kLinear ? "linear" : "leaky_relu";
}

OutputActivation activation_from_name(const std::string& name) {
  if (name == "leaky_relu") return OutputActivation::kLeakyRelu;
  if (name == "linear") return OutputActivation::kLinear;
  throw ParseError("model: unknown output_activation \"" + name + "\"");
}

}  // namespace

std::string serialize(const MlpModel& model) {
  model.validate();
  nlohmann::json doc;
  doc["version"] = "1";
  doc["slope_a"] = model.slope_a;
  doc["output_activation"] = activation_name(model.output_activation);
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerParams& layer : model.layers) {
    nlohmann::json j;
    j["rows"] = layer.weights.rows;
    j["cols"] = layer.weights.cols;
    j["weights"] = layer.weights.values;
    j["bias"] = layer.bias;
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

MlpModel deserialize(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    if (!doc.contains("version") || doc["version"].get<std::string>() != "1") {
      throw ParseError("model: missing or unsupported version field (expected \"1\")");
    }
    MlpModel model;
    model.slope_a = doc.at("slope_a").get<double>();
    if (!(model.slope_a > 0.0 && model.slope_a < 1.0)) {
      throw ConfigError("model: slope_a must lie in (0,1), got " +
                        std::to_string(model.slope_a));
    }
    if (doc.contains("output_activation")) {
      model.output_activation =
          activation_from_name(doc["output_activation"].get<std::string>());
    }
    const nlohmann::json& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty()) {
      throw ParseError("model: layers must be a non-empty array");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const nlohmann::json& j = layers[l];
      LayerParams layer;
      const std::size_t rows = j.at("rows").get<std::size_t>();
      const std::size_t cols = j.at("cols").get<std::size_t>();
      layer.weights = Matrix(rows, cols);
      const std::vector<double> w = j.at("weights").get<std::vector<double>>();
      if (w.size() != rows * cols) {
        throw ParseError("model: layer " + std::to_string(l + 1) + " declares " +
                         std::to_string(rows) + "x" + std::to_string(cols) + " but carries " +
                         std::to_string(w.size()) + " weights");
      }
      layer.weights.values = w;
      layer.bias = j.at("bias").get<std::vector<double>>();
      model.layers.push_back(std::move(layer));
    }
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << serialize(model) << "\n";
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_model: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace passnet
