#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hdte {

// Population parameters of the data-generating process: a categorical
// covariate X on {1..d}, a binary treatment A with per-category propensity
// pi_k, and a binary outcome Y with per-arm means mu1_k / mu0_k.
//
// Vectors are 0-indexed arrays of length d; slot j describes category j+1.
// Construction performs no validation and no renormalization; callers that
// need guarantees run validate_model first. Renormalizing silently would
// change experiments behind the caller's back, so we never do it.
struct ModelSpec {
  std::int64_t d = 0;
  std::vector<double> p;    // category probabilities, must sum to 1
  std::vector<double> pi;   // P(A=1 | X=k)
  std::vector<double> mu1;  // E[Y | X=k, A=1]
  std::vector<double> mu0;  // E[Y | X=k, A=0]
};

// Positivity margin: every propensity must lie in [epsilon, 1-epsilon].
struct ModelClassParams {
  double epsilon = 0.1;  // in (0, 1/2)
};

// Closed-form population quantities derived from a ModelSpec; these are the
// ground truth for every Monte Carlo experiment.
struct EstimandValues {
  double mean_treated = 0;    // E[Y^1]
  double mean_untreated = 0;  // E[Y^0]
  double ate = 0;             // mean_treated - mean_untreated
  std::vector<double> cate;   // per-category effect mu1_k - mu0_k
  double max_heterogeneity = 0;  // max_k |cate_k - ate|
  double eta = 0;   // E[Cov(Y, A | X)]
  double rho = 0;   // E[Var(A | X)]
  double wate = 0;  // eta / rho, defined as 0 when rho == 0
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Checks the simplex constraint (|sum p - 1| <= 1e-12), the [0,1] ranges of
// all parameter vectors, and positivity at the supplied epsilon. Reports
// violations instead of throwing so that invalid inputs can be diagnosed.
ValidationReport validate_model(const ModelSpec& model, const ModelClassParams& params);

// Requires consistent vector lengths (throws std::invalid_argument otherwise);
// assumes, without rechecking, that p is a valid simplex.
EstimandValues population_estimands(const ModelSpec& model);

// Joint cell probabilities: w_k = P(X=k, A=1), q1_k = P(X=k, A=1, Y=1),
// q0_k = P(X=k, A=0, Y=1).
struct JointCellProbs {
  std::vector<double> w, q1, q0;
};
JointCellProbs joint_cell_probs(const ModelSpec& model);

// JSON serialization with keys d, p, pi, mu1, mu0. Throws DataError on
// unreadable or malformed input.
ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& model, const std::filesystem::path& path);
ModelSpec parse_model_json(const std::string& text);
std::string model_to_json(const ModelSpec& model);

}  // namespace hdte
