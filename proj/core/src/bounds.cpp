#include "hdte/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdte {

ExactBias exact_bias(const ModelSpec& model, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("exact_bias: n must be >= 1");
  ExactBias bias;
  const auto exponent = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < model.p.size(); ++j) {
    const double p = model.p[j];
    const double pi = model.pi[j];
    bias.mean_treated -= model.mu1[j] * p * (1.0 - pi) * std::pow(1.0 - p * pi, exponent);
    bias.mean_untreated -= model.mu0[j] * p * pi * std::pow(1.0 - p + p * pi, exponent);
  }
  bias.ate = bias.mean_treated - bias.mean_untreated;
  return bias;
}

WorstCaseBiasBounds worst_case_bias_bounds(double epsilon, std::int64_t n, std::int64_t d) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("worst_case_bias_bounds: epsilon must lie in (0, 1/2)");
  }
  if (n < 1 || d < 1) throw std::invalid_argument("worst_case_bias_bounds: n, d must be >= 1");
  WorstCaseBiasBounds bounds;
  const auto nd = static_cast<double>(n);
  const auto dd = static_cast<double>(d);
  bounds.lower_exp = (1.0 - epsilon) * std::exp(-epsilon * (nd - 1.0) / (dd - epsilon));
  bounds.upper = (1.0 - epsilon) / epsilon * dd / nd;
  if (nd >= 1.0 + 1.0 / epsilon) {
    bounds.lower_linear =
        (1.0 - epsilon) / 8.0 * std::min((dd - 1.0) / (epsilon * (nd - 1.0)), 1.0);
  }
  return bounds;
}

double plugin_variance_bound(double epsilon, std::int64_t n) {
  if (n < 2) throw std::invalid_argument("plugin_variance_bound: n must be >= 2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("plugin_variance_bound: epsilon must be > 0");
  const auto nd = static_cast<double>(n);
  return (1.0 + 3.5 / epsilon) / nd + 4.0 / nd + 2.0 / (nd - 1.0);
}

CollisionConstants collision_constants(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("collision_constants: epsilon must lie in (0, 1/2)");
  }
  CollisionConstants constants;
  constants.c1 = -std::log(std::exp(-epsilon * epsilon) + std::exp(-epsilon * (1.0 - epsilon)) -
                           std::exp(-epsilon));
  constants.c2 = constants.c1 * epsilon / (2.0 * std::log(2.0));
  constants.c = std::min(constants.c2 / 2.0, epsilon / 12.0);
  return constants;
}

double no_collision_bound(double epsilon, std::int64_t n, std::int64_t d) {
  if (n < 1 || d < 1) throw std::invalid_argument("no_collision_bound: n, d must be >= 1");
  const auto constants = collision_constants(epsilon);
  const auto nd = static_cast<double>(n);
  const auto dd = static_cast<double>(d);
  return 2.0 * std::exp(-constants.c * nd * nd / std::max(nd, dd));
}

double homogeneity_bias_bound(double sigma_n, double epsilon, std::int64_t n, std::int64_t d) {
  if (!(sigma_n >= 0.0 && sigma_n <= 2.0)) {
    throw std::invalid_argument("homogeneity_bias_bound: sigma_n must lie in [0, 2]");
  }
  return sigma_n + no_collision_bound(epsilon, n, d);
}

double rate_curve(double C, double gamma, std::int64_t n) {
  if (!(C > 0.0)) throw std::invalid_argument("rate_curve: C must be > 0");
  if (n < 1) throw std::invalid_argument("rate_curve: n must be >= 1");
  return C * std::pow(static_cast<double>(n), gamma / 2.0 - 1.0);
}

std::vector<BoundReport> bound_table(double epsilon, std::int64_t n, std::int64_t d,
                                     double sigma_n, std::optional<double> rate_C,
                                     std::optional<double> gamma) {
  std::map<std::string, double> base{{"epsilon", epsilon},
                                     {"n", static_cast<double>(n)},
                                     {"d", static_cast<double>(d)}};
  std::vector<BoundReport> table;

  const auto worst = worst_case_bias_bounds(epsilon, n, d);
  table.push_back({"worst_case_bias_lower_exp", worst.lower_exp, base});
  table.push_back({"worst_case_bias_upper", worst.upper, base});
  if (worst.lower_linear) {
    table.push_back({"worst_case_bias_lower_linear", *worst.lower_linear, base});
  }

  if (n >= 2) {
    table.push_back({"plugin_variance_bound", plugin_variance_bound(epsilon, n), base});
  }

  table.push_back({"no_collision_bound", no_collision_bound(epsilon, n, d), base});

  auto homog_inputs = base;
  homog_inputs["sigma_n"] = sigma_n;
  const double homog = homogeneity_bias_bound(sigma_n, epsilon, n, d);
  if (homog >= 2.0) homog_inputs["vacuous"] = 1.0;
  table.push_back({"homogeneity_bias_bound", homog, std::move(homog_inputs)});

  if (rate_C && gamma) {
    auto rate_inputs = base;
    rate_inputs["C"] = *rate_C;
    rate_inputs["gamma"] = *gamma;
    table.push_back({"rate_curve", rate_curve(*rate_C, *gamma, n), std::move(rate_inputs)});
  }
  return table;
}

}  // namespace hdte
