#include "passnet/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "passnet/errors.hpp"
#include "passnet/rng.hpp"

namespace passnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kRhoSlack = 1e-9;       // rho = rho_min * (1 + slack), strict inequality
constexpr double kFoundThreshold = -1e-9;
}  // namespace

double weight_sum(const LayerParams& layer) {
  return std::accumulate(layer.weights.values.begin(), layer.weights.values.end(), 0.0);
}

double extract_nu(const LayerParams& layer, double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw ConfigError("extract_nu: slope must lie in (0,1)");
  }
  if (layer.weights.cols == 0) {
    throw std::invalid_argument("extract_nu: layer has no input coordinates");
  }
  return a * weight_sum(layer) / static_cast<double>(layer.weights.cols);
}

LayerCertificate layer_certificate(const LayerParams& layer, std::size_t index_1based,
                                   double a, double nu_target) {
  LayerCertificate cert;
  cert.layer_index = index_1based;
  cert.weight_sum = weight_sum(layer);
  cert.constant_term = static_cast<double>(layer.weights.cols) * nu_target / a;
  cert.nu_extracted = extract_nu(layer, a);
  cert.satisfied = cert.weight_sum > cert.constant_term;
  return cert;
}

double rho_min(const std::vector<double>& nus) {
  const std::size_t n = nus.size();
  if (n <= 2) {
    throw std::domain_error("rho_min: cascade depth must exceed 2, got " + std::to_string(n));
  }
  double product = 1.0;
  for (double nu : nus) {
    if (!(nu > 0.0)) {
      throw std::domain_error("rho_min: certificate unavailable, nonpositive nu " +
                              std::to_string(nu));
    }
    product *= nu;
  }
  const double np1 = static_cast<double>(n + 1);
  return std::pow(std::cos(kPi / np1), np1) / product;
}

double bound_ratio(double epsilon_design, double beta, double rho) {
  if (!(beta > 0.0)) {
    throw std::domain_error("bound_ratio: beta must be positive, got " + std::to_string(beta));
  }
  const double denominator = epsilon_design - rho - 1.0 / (2.0 * beta);
  if (!(denominator > 0.0)) {
    throw std::domain_error(
        "bound_ratio: epsilon - rho - 1/(2 beta) must be positive; got epsilon=" +
        std::to_string(epsilon_design) + ", rho=" + std::to_string(rho) +
        ", beta=" + std::to_string(beta));
  }
  return beta / (2.0 * denominator);
}

CascadeCertificate certify(const MlpModel& model, double nu_target, const BoundPolicy& policy) {
  model.validate();
  if (model.output_activation != OutputActivation::kLeakyRelu) {
    throw ConfigError(
        "certify: the cascade certificate requires leaky_relu output activation; "
        "a linear output layer is not an IIFP cascade element");
  }
  if (!(nu_target > 0.0)) throw ConfigError("certify: nu_target must be positive");

  CascadeCertificate cert;
  cert.beta = policy.beta;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const LayerCertificate lc =
        layer_certificate(model.layers[l], l + 1, model.slope_a, nu_target);
    if (lc.nu_extracted <= 0.0) cert.unavailable_layers.push_back(l + 1);
    cert.per_layer.push_back(lc);
    cert.nus.push_back(std::min(nu_target, lc.nu_extracted));
  }
  if (!cert.unavailable_layers.empty()) {
    cert.certified = false;
    return cert;
  }
  cert.rho = rho_min(cert.nus) * (1.0 + kRhoSlack);
  cert.epsilon_design =
      policy.epsilon_design.value_or(2.0 * (cert.rho + 1.0 / (2.0 * cert.beta)));
  cert.bound_ratio = bound_ratio(cert.epsilon_design, cert.beta, cert.rho);
  cert.denominator = cert.epsilon_design - cert.rho - 1.0 / (2.0 * cert.beta);
  cert.certified = true;
  return cert;
}

TightBoundDiagnostic tight_bound_check(const ForwardTrace& t1, const ForwardTrace& t2,
                                       const CascadeCertificate& cert) {
  const std::size_t n_layers = t1.activations.size();
  if (t2.activations.size() != n_layers || t1.input.size() != t2.input.size()) {
    throw std::invalid_argument("tight_bound_check: traces have mismatched shapes");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (t1.activations[l].size() != t2.activations[l].size()) {
      throw std::invalid_argument("tight_bound_check: traces have mismatched shapes at layer " +
                                  std::to_string(l + 1));
    }
  }
  auto dev_sq = [&](std::size_t l) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t1.activations[l].size(); ++i) {
      const double d = t2.activations[l][i] - t1.activations[l][i];
      acc += d * d;
    }
    return acc;
  };

  TightBoundDiagnostic diag;
  double middle = 0.0;
  for (std::size_t l = 1; l + 1 < n_layers; ++l) middle += dev_sq(l);
  diag.lhs = cert.epsilon_design * middle + cert.denominator * dev_sq(n_layers - 1);

  double input_dev_sq = 0.0;
  for (std::size_t i = 0; i < t1.input.size(); ++i) {
    const double d = t2.input[i] - t1.input[i];
    input_dev_sq += d * d;
  }
  diag.rhs = cert.beta * input_dev_sq / 2.0;
  diag.satisfied = diag.lhs <= diag.rhs + 1e-12 * std::max(1.0, diag.rhs);
  return diag;
}

Matrix build_cascade_matrix(const std::vector<double>& nus, double rho) {
  const std::size_t n = nus.size();
  if (n <= 2) {
    throw std::domain_error("build_cascade_matrix: cascade depth must exceed 2");
  }
  for (double nu : nus) {
    if (!(nu > 0.0)) throw std::domain_error("build_cascade_matrix: nu must be positive");
  }
  if (!(rho > 0.0)) throw std::domain_error("build_cascade_matrix: rho must be positive");

  Matrix a(n + 1, n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = -nus[i];
  a(n, n) = -1.0;
  for (std::size_t i = 0; i + 1 <= n; ++i) a(i + 1, i) = 1.0;
  a(0, n) = -1.0 / rho;
  return a;
}

bool secant_check(const std::vector<double>& alphas, const std::vector<double>& betas) {
  const std::size_t n = alphas.size();
  if (n != betas.size()) {
    throw std::invalid_argument("secant_check: alpha and beta lists differ in length");
  }
  if (n <= 2) {
    throw std::invalid_argument("secant_check: requires more than 2 stages");
  }
  double ratio = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(alphas[i] > 0.0) || !(betas[i] > 0.0)) {
      throw std::invalid_argument("secant_check: all alpha and beta entries must be positive");
    }
    ratio *= betas[i] / alphas[i];
  }
  const double nd = static_cast<double>(n);
  const double threshold = std::pow(1.0 / std::cos(kPi / nd), nd);
  return ratio < threshold;
}

namespace {

// Largest eigenvalue of sym(DA) with D = diag(exp(logd - mean(logd))). The
// geometric-mean normalization removes the scale freedom of D.
double stability_objective(const Matrix& a, const Vector& logd) {
  const std::size_t n = a.rows;
  const double mean = std::accumulate(logd.begin(), logd.end(), 0.0) / static_cast<double>(n);
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::exp(logd[i] - mean);
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = 0.5 * (d[i] * a(i, j) + d[j] * a(j, i));
      sym(i, j) = v;
      sym(j, i) = v;
    }
  }
  return sym_eigen(sym).eigenvalues.front();
}

}  // namespace

DiagonalStabilityResult diagonal_stability_oracle(const Matrix& a) {
  if (a.rows != a.cols) {
    throw std::invalid_argument("diagonal_stability_oracle: matrix must be square");
  }
  if (a.rows == 0 || a.rows > 8) {
    throw std::invalid_argument("diagonal_stability_oracle: supported sizes are 1..8");
  }
  const std::size_t n = a.rows;
  constexpr int kStarts = 64;
  constexpr int kMaxEvals = 2000;

  DiagonalStabilityResult best;
  best.max_eigenvalue = std::numeric_limits<double>::infinity();

  for (int start = 0; start < kStarts; ++start) {
    Rng rng(0x9E3779B97F4A7C15ULL ^ (static_cast<std::uint64_t>(start) * 1000003ULL + 17ULL));
    Vector logd(n, 0.0);
    if (start > 0) {
      for (double& x : logd) x = rng.uniform(-2.0, 2.0);
    }
    double current = stability_objective(a, logd);
    int evals = 1;
    double step = 0.5;
    while (step > 1e-9 && evals < kMaxEvals) {
      bool improved = false;
      for (std::size_t i = 0; i < n && evals < kMaxEvals; ++i) {
        for (double dir : {+1.0, -1.0}) {
          Vector trial = logd;
          trial[i] += dir * step;
          const double value = stability_objective(a, trial);
          ++evals;
          if (value < current - 1e-15) {
            current = value;
            logd = std::move(trial);
            improved = true;
            break;
          }
          if (evals >= kMaxEvals) break;
        }
      }
      if (!improved) {
        // the largest-eigenvalue objective has kinks where single-coordinate
        // moves stall; paired moves cross those valleys
        for (std::size_t i = 0; i < n && !improved && evals < kMaxEvals; ++i) {
          for (std::size_t j = i + 1; j < n && !improved && evals < kMaxEvals; ++j) {
            for (auto [si, sj] : {std::pair{+1.0, +1.0},
                                  std::pair{+1.0, -1.0},
                                  std::pair{-1.0, +1.0},
                                  std::pair{-1.0, -1.0}}) {
              Vector trial = logd;
              trial[i] += si * step;
              trial[j] += sj * step;
              const double value = stability_objective(a, trial);
              ++evals;
              if (value < current - 1e-15) {
                current = value;
                logd = std::move(trial);
                improved = true;
                break;
              }
              if (evals >= kMaxEvals) break;
            }
          }
        }
      }
      if (!improved) step *= 0.5;
      if (current < kFoundThreshold) break;
    }
    if (current < best.max_eigenvalue) {
      best.max_eigenvalue = current;
      const double mean =
          std::accumulate(logd.begin(), logd.end(), 0.0) / static_cast<double>(n);
      best.diagonal.resize(n);
      for (std::size_t i = 0; i < n; ++i) best.diagonal[i] = std::exp(logd[i] - mean);
    }
    if (best.max_eigenvalue < kFoundThreshold) break;  // certificate in hand
  }
  best.found = best.max_eigenvalue < kFoundThreshold;
  return best;
}

double empirical_supply_rate(const LayerParams& layer, double a, const Vector& input,
                             double delta, double nu) {
  if (input.size() != layer.weights.cols) {
    throw std::invalid_argument("empirical_supply_rate: input width mismatch");
  }
  const std::size_t n_prev = layer.weights.cols;
  Vector shifted(input);
  for (double& x : shifted) x += delta;

  auto activate = [&](const Vector& u) {
    Vector pre = matvec(layer.weights, u);
    for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += layer.bias[i];
    return leaky_relu(pre, a);
  };
  const Vector y1 = activate(input);
  const Vector y2 = activate(shifted);

  const std::size_t overlap = std::min(y1.size(), n_prev);
  double inner = 0.0;
  for (std::size_t i = 0; i < overlap; ++i) inner += delta * (y2[i] - y1[i]);
  return inner - nu * static_cast<double>(n_prev) * delta * delta;
}

std::string certificate_to_json(const CascadeCertificate& cert) {
  nlohmann::json doc;
  doc["certified"] = cert.certified;
  nlohmann::json per_layer = nlohmann::json::array();
  for (const LayerCertificate& lc : cert.per_layer) {
    per_layer.push_back({{"layer", lc.layer_index},
                         {"nu", lc.nu_extracted},
                         {"weight_sum", lc.weight_sum},
                         {"constant_term", lc.constant_term},
                         {"satisfied", lc.satisfied}});
  }
  doc["per_layer"] = std::move(per_layer);
  doc["cascade_layers"] = cert.per_layer.size();  // hidden layers + output node
  doc["nus_used"] = cert.nus;
  doc["rho"] = cert.rho;
  doc["epsilon"] = cert.epsilon_design;
  doc["beta"] = cert.beta;
  doc["denominator"] = cert.denominator;
  doc["bound_ratio"] = cert.bound_ratio;
  doc["unavailable_layers"] = cert.unavailable_layers;
  return doc.dump(2);
}

CascadeCertificate certificate_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("certificate: invalid JSON: ") + e.what());
  }
  try {
    CascadeCertificate cert;
    cert.certified = doc.at("certified").get<bool>();
    for (const nlohmann::json& j : doc.at("per_layer")) {
      LayerCertificate lc;
      lc.layer_index = j.at("layer").get<std::size_t>();
      lc.nu_extracted = j.at("nu").get<double>();
      lc.weight_sum = j.at("weight_sum").get<double>();
      lc.constant_term = j.at("constant_term").get<double>();
      lc.satisfied = j.at("satisfied").get<bool>();
      cert.per_layer.push_back(lc);
    }
    cert.nus = doc.at("nus_used").get<std::vector<double>>();
    cert.rho = doc.at("rho").get<double>();
    cert.epsilon_design = doc.at("epsilon").get<double>();
    cert.beta = doc.at("beta").get<double>();
    cert.denominator = doc.at("denominator").get<double>();
    cert.bound_ratio = doc.at("bound_ratio").get<double>();
    cert.unavailable_layers = doc.at("unavailable_layers").get<std::vector<std::size_t>>();
    return cert;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("certificate: malformed document: ") + e.what());
  }
}

void save_certificate(const CascadeCertificate& cert, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_certificate: cannot open " + path);
  out << certificate_to_json(cert) << "\n";
}

CascadeCertificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_certificate: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return certificate_from_json(buffer.str());
}

}  // namespace passnet
