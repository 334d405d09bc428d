#pragma once

#include <optional>
#include <string>
#include <vector>

#include "passnet/linalg.hpp"
#include "passnet/model.hpp"

namespace passnet {

// Per-layer incremental-passivity record extracted from the weights.
// satisfied <=> weight_sum > constant_term <=> nu_extracted > nu_target.
struct LayerCertificate {
  std::size_t layer_index = 0;  // 1-based cascade position
  double weight_sum = 0.0;
  double constant_term = 0.0;   // n_{l-1} * nu_target / a
  double nu_extracted = 0.0;    // a * weight_sum / n_{l-1}
  bool satisfied = false;
};

// Cascade-level certificate: rho from the secant criterion, the design
// parameters (epsilon, beta), and the certified ceiling on
// ||output deviation||^2 / ||input deviation||^2 for constant-entry attacks.
struct CascadeCertificate {
  std::vector<LayerCertificate> per_layer;
  std::vector<double> nus;  // per-layer nu used in the cascade, capped at nu_target
  double rho = 0.0;
  double epsilon_design = 0.0;
  double beta = 0.0;
  double denominator = 0.0;  // epsilon - rho - 1/(2 beta)
  double bound_ratio = 0.0;
  bool certified = false;
  std::vector<std::size_t> unavailable_layers;  // layers with nu_extracted <= 0
};

// epsilon defaults to 2*(rho + 1/(2 beta)), which keeps the denominator
// positive for any rho. The default beta places the certified ceiling well
// above the deviation ratios hill climbing reaches on trained networks while
// staying below the product of layer Lipschitz constants; both knobs are
// CLI-overridable.
struct BoundPolicy {
  double beta = 20.0;
  std::optional<double> epsilon_design;
};

double weight_sum(const LayerParams& layer);

// Largest nu for which the layer condition holds with zero margin:
// a * sum(w) / n_{l-1}. A value <= 0 means no IIFP certificate exists.
double extract_nu(const LayerParams& layer, double a);

LayerCertificate layer_certificate(const LayerParams& layer, std::size_t index_1based,
                                   double a, double nu_target);

// cos(pi/(N+1))^(N+1) / prod(nu). Throws std::domain_error when N <= 2 or any
// nu is nonpositive.
double rho_min(const std::vector<double>& nus);

// beta / (2 * (epsilon - rho - 1/(2 beta))). Throws std::domain_error when
// the denominator is not positive, naming the violated inequality.
double bound_ratio(double epsilon_design, double beta, double rho);

CascadeCertificate certify(const MlpModel& model, double nu_target,
                           const BoundPolicy& policy = {});

// Layer-wise deviation inequality: for traces of the same model,
//   epsilon * sum_{i=2..N-1} ||d_i||^2 + denominator * ||d_N||^2
//     <= beta * ||input difference||^2 / 2
// where d_i is the activation difference at layer i.
struct TightBoundDiagnostic {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};
TightBoundDiagnostic tight_bound_check(const ForwardTrace& t1, const ForwardTrace& t2,
                                       const CascadeCertificate& cert);

// The (N+1)x(N+1) cascade interconnection matrix: -nu_i on the first N
// diagonal entries, -1 last, unit subdiagonal, -1/rho in the upper-right
// corner.
Matrix build_cascade_matrix(const std::vector<double>& nus, double rho);

// Secant criterion for the cyclic form: prod(beta) / prod(alpha) < sec(pi/N)^N
// (strict). N = alphas.size() must exceed 2 and all entries must be positive.
bool secant_check(const std::vector<double>& alphas, const std::vector<double>& betas);

// Searches positive diagonals D for D*A + A^T*D < 0 by coordinate descent on
// the log-diagonal, 64 seeded random starts, 2000 objective evaluations per
// start. One-sided: found=false is evidence, not proof, of infeasibility.
struct DiagonalStabilityResult {
  bool found = false;
  Vector diagonal;          // best D (geometric mean normalized to 1)
  double max_eigenvalue = 0.0;  // largest eigenvalue of sym(DA) at that D
};
DiagonalStabilityResult diagonal_stability_oracle(const Matrix& a);

// Supply rate of one layer for a constant-entry increment delta, evaluated by
// two forward passes: delta^T (y2 - y1) - nu * n_{l-1} * delta^2. Rectangular
// layers follow the zero-padding convention (the product runs over the
// overlapping coordinates).
double empirical_supply_rate(const LayerParams& layer, double a, const Vector& input,
                             double delta, double nu);

// JSON certificate report.
std::string certificate_to_json(const CascadeCertificate& cert);
CascadeCertificate certificate_from_json(const std::string& text);
void save_certificate(const CascadeCertificate& cert, const std::string& path);
CascadeCertificate load_certificate(const std::string& path);

}  // namespace passnet
