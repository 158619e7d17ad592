#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdte/model.hpp"

namespace hdte {

struct BoundReport {
  std::string name;
  double value = 0;
  std::map<std::string, double> inputs;
};

// Exact finite-sample bias of the plug-in estimators of E[Y^1], E[Y^0] and
// the ATE. The bias comes entirely from categories where one arm is empty.
struct ExactBias {
  double mean_treated = 0;    // E[psi1_hat] - psi1
  double mean_untreated = 0;  // E[psi0_hat] - psi0
  double ate = 0;
};
ExactBias exact_bias(const ModelSpec& model, std::int64_t n);

// Envelope of the worst-case plug-in bias over the positivity class:
//   lower_exp <= sup |bias| <= upper,
// plus a linear-regime lower bound present only when n >= 1 + 1/epsilon.
struct WorstCaseBiasBounds {
  double lower_exp = 0;
  double upper = 0;
  std::optional<double> lower_linear;
};
WorstCaseBiasBounds worst_case_bias_bounds(double epsilon, std::int64_t n, std::int64_t d);

// Explicit variance bound for the plug-in estimator of E[Y^1]:
// (1 + 7/(2 eps))/n + 4/n + 2/(n-1). Requires n >= 2.
double plugin_variance_bound(double epsilon, std::int64_t n);

// Constants of the no-collision probability bound:
//   c1 = -log(e^{-eps^2} + e^{-eps(1-eps)} - e^{-eps})
//   c2 = c1 * eps / (2 log 2)
//   c  = min(c2 / 2, eps / 12)
struct CollisionConstants {
  double c1 = 0, c2 = 0, c = 0;
};
CollisionConstants collision_constants(double epsilon);

// Upper bound on the probability that no category contains both a treated and
// an untreated unit: 2 exp(-c(eps) n^2 / max(n, d)).
double no_collision_bound(double epsilon, std::int64_t n, std::int64_t d);

// Bias bound for the homogeneity estimator: sigma_n + no_collision_bound.
// Values >= 2 are vacuous (flagged in bound_table).
double homogeneity_bias_bound(double sigma_n, double epsilon, std::int64_t n, std::int64_t d);

// RMSE rate template C * n^(gamma/2 - 1), i.e. C * sqrt(d/n^2) at d = n^gamma.
// The constant C is user-supplied and not certified by theory.
double rate_curve(double C, double gamma, std::int64_t n);

// All bounds evaluated at one configuration, for the `bounds` CLI table.
std::vector<BoundReport> bound_table(double epsilon, std::int64_t n, std::int64_t d,
                                     double sigma_n, std::optional<double> rate_C = {},
                                     std::optional<double> gamma = {});

}  // namespace hdte
