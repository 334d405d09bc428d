#include "passnet/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "passnet/errors.hpp"

namespace passnet {

void AttackConfig::validate() const {
  if (!(epsilon_attack > 0.0)) throw ConfigError("attack: epsilon_attack must be positive");
  if (coarse_grid_points < 3) throw ConfigError("attack: need at least 3 grid points");
}

Vector perturbation_vector(double delta, std::size_t n) {
  if (n == 0) throw std::invalid_argument("perturbation_vector: n must be positive");
  return Vector(n, delta);
}

AttackResult ratio_objective(const MlpModel& model, const Vector& input, double delta,
                             const AttackConfig& cfg) {
  const std::size_t n = input.size();
  if (delta == 0.0) {
    throw std::invalid_argument("ratio_objective: delta must be nonzero");
  }
  if (std::abs(delta) * std::sqrt(static_cast<double>(n)) > cfg.epsilon_attack + 1e-12) {
    throw std::invalid_argument("ratio_objective: delta lies outside the attack ball");
  }
  const ForwardTrace base = forward(model, input);
  Vector shifted(input);
  for (double& x : shifted) x += delta;
  const ForwardTrace attacked = forward(model, shifted);

  AttackResult result;
  result.delta_star = delta;
  result.input_dev_sq = static_cast<double>(n) * delta * delta;
  result.per_layer_dev_sq.reserve(model.layer_count());
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    double acc = 0.0;
    for (std::size_t i = 0; i < base.activations[l].size(); ++i) {
      const double d = attacked.activations[l][i] - base.activations[l][i];
      acc += d * d;
    }
    result.per_layer_dev_sq.push_back(acc);
  }
  result.output_dev_sq = result.per_layer_dev_sq.back();
  result.ratio = result.output_dev_sq / result.input_dev_sq;
  return result;
}

AttackResult hill_climb(const MlpModel& model, const Vector& input, const AttackConfig& cfg) {
  cfg.validate();
  const std::size_t n = input.size();
  const double radius = cfg.epsilon_attack / std::sqrt(static_cast<double>(n));
  const std::size_t grid = cfg.coarse_grid_points;
  const double spacing = 2.0 * radius / static_cast<double>(grid - 1);

  AttackResult best;
  double best_ratio = -std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;

  // below this the deviation f(u+delta) - f(u) is dominated by rounding noise
  // and the ratio is meaningless; the 0/0 limit at the origin is approached
  // from here instead
  double input_scale = 1.0;
  for (double x : input) input_scale = std::max(input_scale, std::abs(x));
  const double delta_floor =
      std::min(std::max(1e-7 * radius, 1e-9 * input_scale), 0.5 * radius);

  auto evaluate = [&](double delta) -> double {
    if (std::abs(delta) < delta_floor) return -std::numeric_limits<double>::infinity();
    const AttackResult r = ratio_objective(model, input, delta, cfg);
    if (r.ratio > best_ratio) {
      best_ratio = r.ratio;
      best = r;
    }
    return r.ratio;
  };

  std::vector<double> deltas(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    double d = -radius + spacing * static_cast<double>(i);
    // the ratio is 0/0 at the origin; nudge that grid point off it
    if (std::abs(d) < 0.5 * spacing) {
      d = d >= 0.0 ? 0.5 * spacing : -0.5 * spacing;
      if (d == 0.0) d = 0.5 * spacing;
    }
    deltas[i] = d;
  }
  std::vector<double> values(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    values[i] = evaluate(deltas[i]);
    if (values[i] == best_ratio) best_index = i;
  }

  // golden-section refinement inside the bracket around the best grid point
  double lo = deltas[best_index == 0 ? 0 : best_index - 1];
  double hi = deltas[std::min(best_index + 1, grid - 1)];
  if (lo > hi) std::swap(lo, hi);
  const double golden = 0.6180339887498949;
  double x1 = hi - golden * (hi - lo);
  double x2 = lo + golden * (hi - lo);
  double f1 = evaluate(x1);
  double f2 = evaluate(x2);
  for (std::size_t it = 0; it < cfg.refine_iterations; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = evaluate(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = evaluate(x1);
    }
  }
  return best;
}

EvaluationSummary summarize(const std::vector<EvaluationRow>& rows, bool bound_available,
                            double bound) {
  EvaluationSummary s;
  s.count = rows.size();
  s.bound_available = bound_available;
  s.bound_ratio = bound_available ? bound : 0.0;
  if (rows.empty()) return s;

  std::vector<double> ratios;
  ratios.reserve(rows.size());
  for (const EvaluationRow& row : rows) {
    ratios.push_back(row.attack.ratio);
    if (row.violated) s.violation_count += 1;
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  const bool even = n % 2 == 0;
  auto median_at = [&](std::size_t idx) {
    if (!even || idx == 0) return ratios[idx];
    return 0.5 * (ratios[idx - 1] + ratios[idx]);
  };
  s.min = ratios.front();
  s.max = ratios.back();
  s.max_ratio = ratios.back();
  s.median = median_at(n / 2);
  s.q1 = median_at(n / 4);
  s.q3 = median_at(3 * n / 4);
  return s;
}

EvaluationTable evaluate_dataset(const MlpModel& model, const CascadeCertificate& cert,
                                 const std::vector<Vector>& test_points,
                                 const AttackConfig& cfg) {
  cfg.validate();
  EvaluationTable table;
  for (std::size_t idx = 0; idx < test_points.size(); ++idx) {
    EvaluationRow row;
    row.point_index = idx;
    row.attack = hill_climb(model, test_points[idx], cfg);
    if (cert.certified) {
      row.violated = row.attack.ratio > cert.bound_ratio;
      const ForwardTrace base = forward(model, test_points[idx]);
      Vector shifted(test_points[idx]);
      for (double& x : shifted) x += row.attack.delta_star;
      row.tight_bound = tight_bound_check(base, forward(model, shifted), cert);
    }
    table.rows.push_back(std::move(row));
  }
  table.summary = summarize(table.rows, cert.certified, cert.bound_ratio);
  return table;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_evaluation_csv(const std::string& path, const EvaluationTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_evaluation_csv: cannot open " + path);
  const std::size_t n_layers =
      table.rows.empty() ? 0 : table.rows.front().attack.per_layer_dev_sq.size();
  out << "point_index,delta_star,ratio,bound_ratio,violated";
  for (std::size_t l = 1; l <= n_layers; ++l) out << ",dev_sq_" << l;
  out << "\n";
  for (const EvaluationRow& row : table.rows) {
    out << row.point_index << "," << format_double(row.attack.delta_star) << ","
        << format_double(row.attack.ratio) << ",";
    if (table.summary.bound_available) {
      out << format_double(table.summary.bound_ratio) << "," << (row.violated ? 1 : 0);
    } else {
      out << ",";
    }
    for (double dev : row.attack.per_layer_dev_sq) out << "," << format_double(dev);
    out << "\n";
  }
}

EvaluationTable read_evaluation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("read_evaluation_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("read_evaluation_csv: empty file " + path);
  if (line.rfind("point_index,delta_star,ratio,bound_ratio,violated", 0) != 0) {
    throw ParseError("read_evaluation_csv: unexpected header in " + path);
  }
  EvaluationTable table;
  bool bound_available = false;
  double bound = 0.0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (cells.size() < 5) {
      throw ParseError("read_evaluation_csv: too few columns at line " +
                       std::to_string(line_no) + " of " + path);
    }
    try {
      EvaluationRow row;
      row.point_index = static_cast<std::size_t>(std::stoull(cells[0]));
      row.attack.delta_star = std::stod(cells[1]);
      row.attack.ratio = std::stod(cells[2]);
      if (!cells[3].empty()) {
        bound_available = true;
        bound = std::stod(cells[3]);
        row.violated = !cells[4].empty() && std::stoi(cells[4]) != 0;
      }
      for (std::size_t c = 5; c < cells.size(); ++c) {
        row.attack.per_layer_dev_sq.push_back(std::stod(cells[c]));
      }
      if (!row.attack.per_layer_dev_sq.empty()) {
        row.attack.output_dev_sq = row.attack.per_layer_dev_sq.back();
      }
      table.rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ParseError("read_evaluation_csv: unparseable cell at line " +
                       std::to_string(line_no) + " of " + path);
    }
  }
  table.summary = summarize(table.rows, bound_available, bound);
  return table;
}

}  // namespace passnet
