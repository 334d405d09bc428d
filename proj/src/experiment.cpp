#include "passnet/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "passnet/errors.hpp"
#include "passnet/report.hpp"

namespace passnet {

void ExperimentConfig::validate() const {
  if (!(slope_a > 0.0 && slope_a < 1.0)) {
    throw ConfigError("config: slope_a must lie in (0,1), got " + std::to_string(slope_a));
  }
  if (!(nu_target > 0.0)) throw ConfigError("config: nu_target must be positive");
  if (depths.empty()) throw ConfigError("config: depths must not be empty");
  for (int d : depths) {
    if (cascade_layers(d) <= 2) {
      throw ConfigError("config: depth " + std::to_string(d) +
                        " yields a cascade of <= 2 layers; at least 2 hidden layers are needed");
    }
  }
  if (!(bound_policy.beta > 0.0)) throw ConfigError("config: beta must be positive");
  if (csv && csv->path.empty()) throw ConfigError("config: csv dataset needs a path");
  if (csv && csv->target_column.empty()) {
    throw ConfigError("config: csv dataset needs a target column");
  }
  training.validate();
  attack.validate();
}

std::size_t cascade_layers(int hidden_depth) {
  return hidden_depth < 0 ? 0 : static_cast<std::size_t>(hidden_depth) + 1;
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    if (doc.contains("dataset")) {
      const nlohmann::json& ds = doc["dataset"];
      const std::string type = ds.value("type", "synthetic");
      if (type == "csv") {
        CsvSpec spec;
        spec.path = ds.at("path").get<std::string>();
        spec.target_column = ds.at("target_column").get<std::string>();
        cfg.csv = spec;
      } else if (type == "synthetic") {
        read_if(ds, "n_samples", cfg.synthetic.n_samples);
        read_if(ds, "n_features", cfg.synthetic.n_features);
        read_if(ds, "noise_std", cfg.synthetic.noise_std);
      } else {
        throw ConfigError("config: unknown dataset type \"" + type + "\"");
      }
    }
    read_if(doc, "depths", cfg.depths);
    read_if(doc, "slope_a", cfg.slope_a);
    read_if(doc, "nu_target", cfg.nu_target);
    read_if(doc, "seed", cfg.seed);
    read_if(doc, "out_dir", cfg.out_dir);
    read_if(doc, "pca_components", cfg.pca_components);
    if (doc.contains("beta")) cfg.bound_policy.beta = doc["beta"].get<double>();
    if (doc.contains("epsilon_design") && !doc["epsilon_design"].is_null()) {
      cfg.bound_policy.epsilon_design = doc["epsilon_design"].get<double>();
    }
    if (doc.contains("epsilon_attack")) {
      cfg.attack.epsilon_attack = doc["epsilon_attack"].get<double>();
    }
    if (doc.contains("attack")) {
      const nlohmann::json& a = doc["attack"];
      read_if(a, "epsilon_attack", cfg.attack.epsilon_attack);
      read_if(a, "coarse_grid_points", cfg.attack.coarse_grid_points);
      read_if(a, "refine_iterations", cfg.attack.refine_iterations);
    }
    if (doc.contains("splits")) {
      const nlohmann::json& s = doc["splits"];
      read_if(s, "train", cfg.fractions.train);
      read_if(s, "validation", cfg.fractions.validation);
      read_if(s, "test", cfg.fractions.test);
    }
    if (doc.contains("training")) {
      const nlohmann::json& t = doc["training"];
      read_if(t, "batch_size", cfg.training.batch_size);
      read_if(t, "max_epochs", cfg.training.max_epochs);
      read_if(t, "patience", cfg.training.patience);
      read_if(t, "penalty_rescale", cfg.training.penalty_rescale);
      read_if(t, "penalty_lambda", cfg.training.penalty_lambda);
      read_if(t, "penalty_warmup_epochs", cfg.training.penalty_warmup_epochs);
      read_if(t, "learning_rate", cfg.training.adam.learning_rate);
      read_if(t, "beta1", cfg.training.adam.beta1);
      read_if(t, "beta2", cfg.training.adam.beta2);
    }
    cfg.training.nu_target = cfg.nu_target;
    cfg.training.seed = cfg.seed;
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: malformed document: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  if (cfg.csv) {
    doc["dataset"] = {{"type", "csv"}, {"path", cfg.csv->path},
                      {"target_column", cfg.csv->target_column}};
  } else {
    doc["dataset"] = {{"type", "synthetic"},
                      {"n_samples", cfg.synthetic.n_samples},
                      {"n_features", cfg.synthetic.n_features},
                      {"noise_std", cfg.synthetic.noise_std}};
  }
  doc["depths"] = cfg.depths;
  doc["slope_a"] = cfg.slope_a;
  doc["nu_target"] = cfg.nu_target;
  doc["seed"] = cfg.seed;
  doc["out_dir"] = cfg.out_dir;
  doc["pca_components"] = cfg.pca_components;
  doc["beta"] = cfg.bound_policy.beta;
  if (cfg.bound_policy.epsilon_design) {
    doc["epsilon_design"] = *cfg.bound_policy.epsilon_design;
  } else {
    doc["epsilon_design"] = nullptr;
  }
  doc["attack"] = {{"epsilon_attack", cfg.attack.epsilon_attack},
                   {"coarse_grid_points", cfg.attack.coarse_grid_points},
                   {"refine_iterations", cfg.attack.refine_iterations}};
  doc["splits"] = {{"train", cfg.fractions.train},
                   {"validation", cfg.fractions.validation},
                   {"test", cfg.fractions.test}};
  doc["training"] = {{"batch_size", cfg.training.batch_size},
                     {"max_epochs", cfg.training.max_epochs},
                     {"patience", cfg.training.patience},
                     {"penalty_rescale", cfg.training.penalty_rescale},
                     {"penalty_lambda", cfg.training.penalty_lambda},
                     {"penalty_warmup_epochs", cfg.training.penalty_warmup_epochs},
                     {"learning_rate", cfg.training.adam.learning_rate},
                     {"beta1", cfg.training.adam.beta1},
                     {"beta2", cfg.training.adam.beta2}};
  return doc.dump(2);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  Dataset raw;
  if (cfg.csv) {
    raw = load_csv(cfg.csv->path, cfg.csv->target_column);
  } else {
    raw = synthetic_regression(cfg.synthetic.n_samples, cfg.synthetic.n_features, cfg.seed,
                               cfg.synthetic.noise_std);
  }
  const DataSplits splits = split(raw, cfg.fractions, cfg.seed);
  PreparedData out;
  out.prep = fit_preprocessor(splits.train, cfg.pca_components);
  out.train = apply_preprocessor(out.prep, splits.train);
  out.validation = apply_preprocessor(out.prep, splits.validation);
  out.test = apply_preprocessor(out.prep, splits.test);
  return out;
}

MlpModel build_initial_model(const ExperimentConfig& cfg, std::size_t input_width,
                             int hidden_depth) {
  std::vector<std::size_t> widths;
  widths.push_back(input_width);
  for (int l = 0; l < hidden_depth; ++l) widths.push_back(input_width);
  widths.push_back(1);  // single-node output layer, part of the cascade
  Rng rng(cfg.seed ^ (0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(hidden_depth)));
  return init_model(widths, cfg.slope_a, rng);
}

DepthArtifacts depth_artifacts(const std::string& out_dir, int hidden_depth) {
  const std::filesystem::path base(out_dir);
  const std::string suffix = "depth" + std::to_string(hidden_depth);
  DepthArtifacts a;
  a.model_path = (base / ("model_" + suffix + ".json")).string();
  a.train_log_path = (base / ("train_log_" + suffix + ".csv")).string();
  a.certificate_path = (base / ("certificate_" + suffix + ".json")).string();
  a.evaluation_path = (base / ("evaluation_" + suffix + ".csv")).string();
  return a;
}

TrainResult run_train(const ExperimentConfig& cfg, const PreparedData& data, int hidden_depth) {
  const MlpModel initial = build_initial_model(cfg, data.train.features.cols, hidden_depth);
  TrainConfig tc = cfg.training;
  tc.nu_target = cfg.nu_target;
  tc.seed = cfg.seed ^ (0xA0761D6478BD642FULL + static_cast<std::uint64_t>(hidden_depth));
  return train(initial, to_samples(data.train), to_samples(data.validation), tc);
}

CascadeCertificate run_certify(const MlpModel& model, const ExperimentConfig& cfg) {
  return certify(model, cfg.nu_target, cfg.bound_policy);
}

EvaluationTable run_attack(const MlpModel& model, const CascadeCertificate& cert,
                           const Dataset& test, const ExperimentConfig& cfg) {
  return evaluate_dataset(model, cert, feature_rows(test), cfg.attack);
}

RunAllResult run_all(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const PreparedData data = prepare_data(cfg);
  write_dataset_csv((std::filesystem::path(cfg.out_dir) / "test_points.csv").string(),
                    data.test);

  RunAllResult result;
  for (int depth : cfg.depths) {
    const DepthArtifacts paths = depth_artifacts(cfg.out_dir, depth);
    const TrainResult trained = run_train(cfg, data, depth);
    save_model(trained.model, paths.model_path);
    write_training_log_csv(paths.train_log_path, trained.log);

    const CascadeCertificate cert = run_certify(trained.model, cfg);
    save_certificate(cert, paths.certificate_path);

    const EvaluationTable table = run_attack(trained.model, cert, data.test, cfg);
    write_evaluation_csv(paths.evaluation_path, table);

    result.total_violations += table.summary.violation_count;
    result.evaluation_csvs.push_back(paths.evaluation_path);
    result.certificate_jsons.push_back(paths.certificate_path);
  }
  write_report(result.evaluation_csvs, result.certificate_jsons, cfg.out_dir);
  return result;
}

}  // namespace passnet
