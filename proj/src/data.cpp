#include "passnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "passnet/errors.hpp"
#include "passnet/rng.hpp"

namespace passnet {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty() || t == "?") return true;
  std::string lower(t);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "n/a" || lower == "nan";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  const std::string t = trim(cell);
  try {
    std::size_t consumed = 0;
    const double v = std::stod(t, &consumed);
    if (consumed != t.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
    return v;
  } catch (const std::exception&) {
    throw ParseError("csv: unparseable cell \"" + t + "\" at data row " + std::to_string(row) +
                     ", column \"" + column + "\"");
  }
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.empty()) throw ParseError("load_csv: header row of " + path + " is empty");

  std::size_t target_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == target_column) {
      target_idx = i;
      break;
    }
  }
  if (target_idx == header.size()) {
    throw ParseError("load_csv: target column \"" + target_column + "\" not found in " + path);
  }

  std::vector<std::vector<std::string>> raw_rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("load_csv: data row " + std::to_string(raw_rows.size() + 1) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    }
    raw_rows.push_back(std::move(cells));
  }
  if (raw_rows.empty()) throw ParseError("load_csv: " + path + " has no data rows");

  // feature columns with any missing value are dropped
  std::vector<bool> has_missing(header.size(), false);
  for (const auto& cells : raw_rows) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (is_missing(cells[c])) has_missing[c] = true;
    }
  }

  std::vector<std::size_t> feature_cols;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_idx) continue;
    if (has_missing[c]) continue;
    feature_cols.push_back(c);
    ds.feature_names.push_back(trim(header[c]));
  }
  if (feature_cols.empty()) {
    throw ParseError("load_csv: no usable feature columns remain in " + path);
  }

  ds.features = Matrix(raw_rows.size(), feature_cols.size());
  ds.targets.resize(raw_rows.size());
  for (std::size_t r = 0; r < raw_rows.size(); ++r) {
    const auto& cells = raw_rows[r];
    if (is_missing(cells[target_idx])) {
      throw ParseError("csv: missing target value at data row " + std::to_string(r + 1));
    }
    ds.targets[r] = parse_cell(cells[target_idx], r + 1, trim(header[target_idx]));
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      ds.features(r, f) = parse_cell(cells[feature_cols[f]], r + 1, ds.feature_names[f]);
    }
  }
  return ds;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t begin,
                  std::size_t end) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.features = Matrix(end - begin, ds.features.cols);
  out.targets.resize(end - begin);
  for (std::size_t r = begin; r < end; ++r) {
    const std::size_t src = order[r];
    for (std::size_t c = 0; c < ds.features.cols; ++c) {
      out.features(r - begin, c) = ds.features(src, c);
    }
    out.targets[r - begin] = ds.targets[src];
  }
  return out;
}

}  // namespace

DataSplits split(const Dataset& ds, const SplitFractions& fractions, std::uint64_t seed) {
  const double total = fractions.train + fractions.validation + fractions.test;
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split: fractions must sum to 1, got " + std::to_string(total));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n = ds.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(fractions.train * n));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(fractions.validation * n));
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw ConfigError("split: every split must be non-empty (got " + std::to_string(n_train) +
                      "/" + std::to_string(n_val) + "/" + std::to_string(n_test) + ")");
  }
  DataSplits out;
  out.train = take_rows(ds, order, 0, n_train);
  out.validation = take_rows(ds, order, n_train, n_train + n_val);
  out.test = take_rows(ds, order, n_train + n_val, n);
  return out;
}

Preprocessor fit_preprocessor(const Dataset& train, std::size_t k) {
  const std::size_t n = train.size();
  const std::size_t d_all = train.features.cols;
  if (n < 2) throw ConfigError("fit_preprocessor: need at least two training rows");

  Preprocessor prep;
  for (std::size_t c = 0; c < d_all; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += train.features(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = train.features(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (var <= 0.0) {
      std::cerr << "fit_preprocessor: dropping zero-variance feature \""
                << train.feature_names[c] << "\"\n";
      continue;
    }
    prep.retained_columns.push_back(c);
    prep.feature_means.push_back(mean);
    prep.feature_stds.push_back(std::sqrt(var));
  }
  const std::size_t d = prep.retained_columns.size();
  if (d == 0) throw ConfigError("fit_preprocessor: all features have zero variance");
  if (k > d) {
    std::cerr << "fit_preprocessor: only " << d << " usable features, lowering k from " << k
              << "\n";
    k = d;
  }
  if (n <= k) {
    throw ConfigError("fit_preprocessor: need more training rows than components (" +
                      std::to_string(n) + " <= " + std::to_string(k) + ")");
  }

  // standardized training matrix
  Matrix std_features(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      std_features(r, c) =
          (train.features(r, prep.retained_columns[c]) - prep.feature_means[c]) /
          prep.feature_stds[c];
    }
  }
  prep.pca.mean.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t r = 0; r < n; ++r) prep.pca.mean[c] += std_features(r, c);
    prep.pca.mean[c] /= static_cast<double>(n);
  }

  Matrix cov(d, d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double xi = std_features(r, i) - prep.pca.mean[i];
      for (std::size_t j = i; j < d; ++j) {
        cov(i, j) += xi * (std_features(r, j) - prep.pca.mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= static_cast<double>(n - 1);
      cov(j, i) = cov(i, j);
    }
  }

  const EigenDecomposition eig = sym_eigen(cov);
  prep.pca.components = Matrix(k, d);
  for (std::size_t comp = 0; comp < k; ++comp) {
    // sign convention: the largest-magnitude coordinate is positive
    double best_abs = -1.0;
    double sign = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double v = eig.eigenvectors(i, comp);
      if (std::abs(v) > best_abs) {
        best_abs = std::abs(v);
        sign = v >= 0.0 ? 1.0 : -1.0;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      prep.pca.components(comp, i) = sign * eig.eigenvectors(i, comp);
    }
  }

  prep.target_min = *std::min_element(train.targets.begin(), train.targets.end());
  prep.target_max = *std::max_element(train.targets.begin(), train.targets.end());
  if (!(prep.target_max > prep.target_min)) {
    throw ConfigError("fit_preprocessor: training targets are constant, cannot scale to [0,1]");
  }
  return prep;
}

Dataset apply_preprocessor(const Preprocessor& prep, const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t d = prep.retained_columns.size();
  const std::size_t k = prep.pca.components.rows;
  for (std::size_t c : prep.retained_columns) {
    if (c >= ds.features.cols) {
      throw std::invalid_argument(
          "apply_preprocessor: dataset has fewer columns than the fitted preprocessor");
    }
  }
  Dataset out;
  out.features = Matrix(n, k);
  out.targets.resize(n);
  out.feature_names.reserve(k);
  for (std::size_t c = 0; c < k; ++c) out.feature_names.push_back("pc" + std::to_string(c + 1));

  Vector buffer(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      buffer[c] = (ds.features(r, prep.retained_columns[c]) - prep.feature_means[c]) /
                      prep.feature_stds[c] -
                  prep.pca.mean[c];
    }
    for (std::size_t comp = 0; comp < k; ++comp) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += prep.pca.components(comp, c) * buffer[c];
      out.features(r, comp) = acc;
    }
    const double scaled =
        (ds.targets[r] - prep.target_min) / (prep.target_max - prep.target_min);
    out.targets[r] = std::clamp(scaled, -0.5, 1.5);
  }
  return out;
}

double inverse_target_scale(const Preprocessor& prep, double scaled) {
  return prep.target_min + scaled * (prep.target_max - prep.target_min);
}

Dataset synthetic_regression(std::size_t n_samples, std::size_t d, std::uint64_t seed,
                             double noise_std) {
  if (n_samples < 50) {
    throw std::invalid_argument("synthetic_regression: need at least 50 samples");
  }
  if (d == 0) throw std::invalid_argument("synthetic_regression: need at least one feature");
  Rng rng(seed);

  Vector w(d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& x : w) x = rng.normal() * scale;
  const double bias = rng.uniform(-0.5, 0.5);

  Dataset ds;
  ds.features = Matrix(n_samples, d);
  ds.targets.resize(n_samples);
  ds.feature_names.reserve(d);
  for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c + 1));

  for (std::size_t r = 0; r < n_samples; ++r) {
    double form = bias;
    for (std::size_t c = 0; c < d; ++c) {
      const double x = rng.normal();
      ds.features(r, c) = x;
      form += w[c] * x;
    }
    double t = 1.0 / (1.0 + std::exp(-form));
    if (noise_std > 0.0) t += noise_std * rng.normal();
    ds.targets[r] = std::clamp(t, 0.0, 1.0);
  }
  return ds;
}

std::vector<TrainingSample> to_samples(const Dataset& ds) {
  std::vector<TrainingSample> samples;
  samples.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    TrainingSample s;
    s.input.resize(ds.features.cols);
    for (std::size_t c = 0; c < ds.features.cols; ++c) s.input[c] = ds.features(r, c);
    s.target = ds.targets[r];
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Vector> feature_rows(const Dataset& ds) {
  std::vector<Vector> rows;
  rows.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    Vector v(ds.features.cols);
    for (std::size_t c = 0; c < ds.features.cols; ++c) v[c] = ds.features(r, c);
    rows.push_back(std::move(v));
  }
  return rows;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
    out << ds.feature_names[c] << ",";
  }
  out << "target\n";
  char buf[40];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t c = 0; c < ds.features.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(r, c));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", ds.targets[r]);
    out << buf << "\n";
  }
}

}  // namespace passnet
