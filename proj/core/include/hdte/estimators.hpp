#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdte/model.hpp"
#include "hdte/sampling.hpp"

namespace hdte {

// The library-wide division convention: 0/0 = 0. Every estimator ratio goes
// through this helper; the plug-in equivalence property does not hold without
// it. A zero denominator always yields 0 so that estimators stay total.
inline double guarded_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

enum class NuisanceSource { empirical, zeroed, external };

std::string to_string(NuisanceSource source);

// Per-category nuisance values: propensity, arm-wise outcome means, the
// pooled outcome mean E[Y|X=k], and the covariate probability. Stored
// sparsely: categories without an entry take the defaults (all zero for
// empirical and zeroed sources), which encodes the 0/0 = 0 convention.
class NuisanceEstimates {
 public:
  struct Values {
    double pi = 0, mu1 = 0, mu0 = 0, mu = 0, p = 0;
  };

  std::int64_t d() const { return d_; }
  NuisanceSource source() const { return source_; }
  Values at(std::int64_t category) const;
  // Number of per-category ratios that hit the 0/0 convention while building
  // empirical estimates (categories missing one arm entirely).
  std::int64_t zero_ratio_events() const { return zero_ratio_events_; }

  // Empirical averages from a count table; identical to nuisance_mle.
  static NuisanceEstimates empirical(const SufficientStats& stats);
  // pi = mu = 0 everywhere; covariate probabilities as given.
  static NuisanceEstimates zeroed_with_probs(std::int64_t d, const std::vector<double>& p);
  static NuisanceEstimates zeroed_with_uniform_probs(std::int64_t d);
  // True model quantities (known-nuisance experiments).
  static NuisanceEstimates external_truth(const ModelSpec& model);
  // Externally supplied dense vectors; mu defaults to pi*mu1 + (1-pi)*mu0.
  static NuisanceEstimates external(std::int64_t d, std::vector<double> pi,
                                    std::vector<double> mu1, std::vector<double> mu0,
                                    std::vector<double> p,
                                    std::optional<std::vector<double>> mu = {});

  static NuisanceEstimates load_json(const std::filesystem::path& path);

 private:
  std::int64_t d_ = 0;
  NuisanceSource source_ = NuisanceSource::external;
  std::vector<std::int64_t> categories_;  // sorted, 1-based
  std::vector<Values> values_;            // parallel to categories_
  Values defaults_{};
  std::int64_t zero_ratio_events_ = 0;
};

// pi_k = treated/count, mu1_k = treated_y1/treated, mu0_k = untreated_y1/untreated,
// p_k = count/n, all with 0/0 = 0.
NuisanceEstimates nuisance_mle(const SufficientStats& stats);

struct ConfidenceInterval {
  double lower = 0, upper = 0, level = 0;
};

struct EstimateResult {
  std::string estimator_id;
  double value = 0;
  std::optional<double> se;
  std::optional<ConfidenceInterval> ci;
  std::map<std::string, double> diagnostics;
};

// Plug-in estimators built from same-sample empirical nuisances.
EstimateResult plugin_ate(const SufficientStats& stats);
// arm = 1 estimates E[Y^1], arm = 0 estimates E[Y^0].
EstimateResult plugin_potential_mean(const SufficientStats& stats, int arm);

// Sample-average estimators over `data` with the supplied nuisances. With
// empirical nuisances of the same sample all three coincide with plugin_ate.
// truncate_pi, when set, clamps propensities into [eps, 1-eps] inside the
// weighting terms; this deliberately breaks the plug-in equivalence and is
// only for external-nuisance use (and the verify negative control).
EstimateResult reg_ate(const Dataset& data, const NuisanceEstimates& nuis);
EstimateResult ipw_ate(const Dataset& data, const NuisanceEstimates& nuis,
                       std::optional<double> truncate_pi = {});
EstimateResult dr_ate(const Dataset& data, const NuisanceEstimates& nuis,
                      std::optional<double> truncate_pi = {});

// Weighted average of per-category effect estimates over "collision"
// categories (those containing both arms); weights are the category
// proportions. 0/0 = 0 when no category has both arms. Diagnostics report the
// number of collision categories and the sample mass they carry.
EstimateResult homog_ate(const SufficientStats& stats);

// Second-order U-statistic estimators of eta = E[Cov(Y,A|X)] and
// rho = E[Var(A|X)]. Nuisances must come from an independent source (split
// half, zeroed, or external); every category observed in `data` must carry
// positive covariate probability, otherwise std::invalid_argument
// ("nuisance covariate mass missing") is thrown. Inputs with n < 2 are
// rejected (the U-statistic divides by n(n-1)).
EstimateResult second_order_eta(const Dataset& data, const NuisanceEstimates& nuis);
EstimateResult second_order_rho(const Dataset& data, const NuisanceEstimates& nuis);

// Second-order estimator of E[Y^1]; requires pi and p strictly positive on
// every observed category.
EstimateResult second_order_ate(const Dataset& data, const NuisanceEstimates& nuis);

// wate = eta / rho. In clamped mode the denominator is max(rho, eps(1-eps));
// otherwise rho <= 0 throws std::domain_error.
EstimateResult wate_from_moments(double eta_hat, double rho_hat, ModelClassParams params,
                                 bool clamp);

// Doubly robust point estimate with a normal-approximation interval from the
// sample standard deviation of the estimated influence function. Requires
// n >= 2 and level in (0, 1).
EstimateResult influence_ci(const Dataset& data, const NuisanceEstimates& nuis, double level);

// Inverse standard normal CDF (used for interval quantiles).
double normal_quantile(double prob);

}  // namespace hdte
