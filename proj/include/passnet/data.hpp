#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "passnet/linalg.hpp"
#include "passnet/model.hpp"

namespace passnet {

struct Dataset {
  Matrix features;  // rows = samples
  Vector targets;
  std::vector<std::string> feature_names;

  std::size_t size() const { return features.rows; }
};

// Comma-separated numeric file with a header row. Feature columns containing
// any missing value (empty, NA, N/A, ?, nan) are dropped; a missing or
// non-numeric entry in the target column is an error.
Dataset load_csv(const std::string& path, const std::string& target_column);

struct SplitFractions {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct DataSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

// Seeded shuffle followed by contiguous slicing; the splits are disjoint and
// cover the dataset.
DataSplits split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed);

struct PcaTransform {
  Vector mean;        // of the standardized training features
  Matrix components;  // k x d, orthonormal rows, sign-fixed
};

// Standardization + PCA + target scaling, all fitted on the training split
// only.
struct Preprocessor {
  std::vector<std::size_t> retained_columns;  // zero-variance features are dropped
  Vector feature_means;
  Vector feature_stds;
  PcaTransform pca;
  double target_min = 0.0;
  double target_max = 1.0;
};

Preprocessor fit_preprocessor(const Dataset& train, std::size_t k = 10);

// Scaled targets outside [0,1] (possible on non-train splits) are clipped to
// the [-0.5, 1.5] guard band.
Dataset apply_preprocessor(const Preprocessor& prep, const Dataset& ds);

double inverse_target_scale(const Preprocessor& prep, double scaled);

// Offline stand-in for the UCI regression sets: standard-normal features,
// target = sigmoid of a random linear form plus Gaussian noise, clipped to
// [0,1].
Dataset synthetic_regression(std::size_t n_samples, std::size_t d, std::uint64_t seed,
                             double noise_std = 0.05);

std::vector<TrainingSample> to_samples(const Dataset& ds);
std::vector<Vector> feature_rows(const Dataset& ds);

// Plain CSV writer for preprocessed points (header from feature_names plus a
// final "target" column).
void write_dataset_csv(const std::string& path, const Dataset& ds);

}  // namespace passnet
