#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "passnet/attack.hpp"
#include "passnet/data.hpp"
#include "passnet/passivity.hpp"
#include "passnet/train.hpp"

namespace passnet {

struct SyntheticSpec {
  std::size_t n_samples = 2000;
  std::size_t n_features = 10;
  double noise_std = 0.05;
};

struct CsvSpec {
  std::string path;
  std::string target_column;
};

// Full experiment description. Defaults mirror the reference protocol:
// depths {2,6,12} hidden layers plus a single output node, slope 0.5,
// nu target 1, attack radius 0.5.
struct ExperimentConfig {
  std::optional<CsvSpec> csv;  // synthetic data when absent
  SyntheticSpec synthetic;
  std::vector<int> depths = {2, 6, 12};  // hidden layer counts
  double slope_a = 0.5;
  double nu_target = 1.0;
  BoundPolicy bound_policy;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t pca_components = 10;
  SplitFractions fractions;
  TrainConfig training;
  AttackConfig attack;

  void validate() const;
};

// JSON round trip of the config; every field is optional in the document and
// falls back to its default.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

struct PreparedData {
  Preprocessor prep;
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Ingest (CSV or synthetic), split, fit the preprocessor on the training
// split only, and apply it to all three.
PreparedData prepare_data(const ExperimentConfig& cfg);

// Cascade depth is hidden layers + the output node.
std::size_t cascade_layers(int hidden_depth);

MlpModel build_initial_model(const ExperimentConfig& cfg, std::size_t input_width,
                             int hidden_depth);

// Per-depth output files inside out_dir.
struct DepthArtifacts {
  std::string model_path;
  std::string train_log_path;
  std::string certificate_path;
  std::string evaluation_path;
};
DepthArtifacts depth_artifacts(const std::string& out_dir, int hidden_depth);

// Pipeline steps shared by the CLI subcommands.
TrainResult run_train(const ExperimentConfig& cfg, const PreparedData& data, int hidden_depth);
CascadeCertificate run_certify(const MlpModel& model, const ExperimentConfig& cfg);
EvaluationTable run_attack(const MlpModel& model, const CascadeCertificate& cert,
                           const Dataset& test, const ExperimentConfig& cfg);

struct RunAllResult {
  std::size_t total_violations = 0;
  std::vector<std::string> evaluation_csvs;
  std::vector<std::string> certificate_jsons;
};

// train -> certify -> attack at every configured depth, then the report.
RunAllResult run_all(const ExperimentConfig& cfg);

}  // namespace passnet
