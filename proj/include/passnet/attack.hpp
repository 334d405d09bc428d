#pragma once

#include <string>
#include <vector>

#include "passnet/model.hpp"
#include "passnet/passivity.hpp"

namespace passnet {

// Constant-entry adversary confined to an L2 ball: one scalar delta
// replicated across all input coordinates, |delta| * sqrt(n) <= epsilon.
struct AttackConfig {
  double epsilon_attack = 0.5;
  std::size_t coarse_grid_points = 201;
  std::size_t refine_iterations = 60;

  void validate() const;
};

struct AttackResult {
  double delta_star = 0.0;
  double input_dev_sq = 0.0;   // ||Delta||^2 = n * delta^2
  double output_dev_sq = 0.0;  // ||f(u+Delta) - f(u)||^2
  double ratio = 0.0;          // output_dev_sq / input_dev_sq
  std::vector<double> per_layer_dev_sq;  // activation deviation per layer
};

// Length-n vector with every entry equal to delta.
Vector perturbation_vector(double delta, std::size_t n);

// Deviation ratio for one delta, with per-layer deviations recorded for the
// layer-wise bound diagnostics. delta must be nonzero and inside the ball.
AttackResult ratio_objective(const MlpModel& model, const Vector& input, double delta,
                             const AttackConfig& cfg);

// Coarse grid over [-eps/sqrt(n), +eps/sqrt(n)] (origin skipped), then
// golden-section refinement around the best grid point. Returns the best
// ratio seen.
AttackResult hill_climb(const MlpModel& model, const Vector& input, const AttackConfig& cfg);

struct EvaluationRow {
  std::size_t point_index = 0;
  AttackResult attack;
  bool violated = false;
  TightBoundDiagnostic tight_bound;
};

struct EvaluationSummary {
  std::size_t count = 0;
  std::size_t violation_count = 0;
  bool bound_available = false;
  double bound_ratio = 0.0;
  double max_ratio = 0.0;
  // ratio quartiles for box-plot emission
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct EvaluationTable {
  std::vector<EvaluationRow> rows;
  EvaluationSummary summary;
};

// Hill-climbs every test point. With a certified certificate the rows carry
// the bound comparison and the layer-wise tight-bound diagnostic; with an
// uncertified one, ratios are still reported but no bound comparison is made.
EvaluationTable evaluate_dataset(const MlpModel& model, const CascadeCertificate& cert,
                                 const std::vector<Vector>& test_points,
                                 const AttackConfig& cfg);

// CSV columns: point_index,delta_star,ratio,bound_ratio,violated,
// dev_sq_1..dev_sq_N. bound_ratio/violated are left empty when no bound is
// available.
void write_evaluation_csv(const std::string& path, const EvaluationTable& table);
EvaluationTable read_evaluation_csv(const std::string& path);

// Quartiles by the median-of-halves rule over the row ratios.
EvaluationSummary summarize(const std::vector<EvaluationRow>& rows, bool bound_available,
                            double bound_ratio);

}  // namespace passnet
