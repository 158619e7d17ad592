#include "hdte/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "hdte/errors.hpp"

namespace hdte {

std::string to_string(NuisanceSource source) {
  switch (source) {
    case NuisanceSource::empirical: return "empirical";
    case NuisanceSource::zeroed: return "zeroed";
    case NuisanceSource::external: return "external";
  }
  return "unknown";
}

NuisanceEstimates::Values NuisanceEstimates::at(std::int64_t category) const {
  auto it = std::lower_bound(categories_.begin(), categories_.end(), category);
  if (it == categories_.end() || *it != category) return defaults_;
  return values_[static_cast<std::size_t>(it - categories_.begin())];
}

NuisanceEstimates NuisanceEstimates::empirical(const SufficientStats& stats) {
  NuisanceEstimates nuis;
  nuis.d_ = stats.d;
  nuis.source_ = NuisanceSource::empirical;
  nuis.categories_.reserve(stats.cells.size());
  nuis.values_.reserve(stats.cells.size());
  const auto n = static_cast<double>(stats.n);
  for (const auto& cell : stats.cells) {
    const auto n_x = static_cast<double>(cell.n_x);
    const auto n_t = static_cast<double>(cell.n_treated);
    const auto n_u = static_cast<double>(cell.n_x - cell.n_treated);
    Values v;
    v.p = n_x / n;
    v.pi = guarded_div(n_t, n_x);
    v.mu1 = guarded_div(static_cast<double>(cell.n_treated_y1), n_t);
    v.mu0 = guarded_div(static_cast<double>(cell.n_untreated_y1), n_u);
    v.mu = guarded_div(static_cast<double>(cell.n_treated_y1 + cell.n_untreated_y1), n_x);
    if (cell.n_treated == 0) ++nuis.zero_ratio_events_;
    if (cell.n_treated == cell.n_x) ++nuis.zero_ratio_events_;
    nuis.categories_.push_back(cell.category);
    nuis.values_.push_back(v);
  }
  return nuis;
}

namespace {

void check_unit_range(const std::vector<double>& values, const char* name) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string("nuisances: ") + name + " entries must lie in [0,1]");
    }
  }
}

}  // namespace

NuisanceEstimates NuisanceEstimates::zeroed_with_probs(std::int64_t d,
                                                       const std::vector<double>& p) {
  if (p.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("nuisances: p must have length d");
  }
  check_unit_range(p, "p");
  NuisanceEstimates nuis;
  nuis.d_ = d;
  nuis.source_ = NuisanceSource::zeroed;
  nuis.categories_.resize(p.size());
  std::iota(nuis.categories_.begin(), nuis.categories_.end(), std::int64_t{1});
  nuis.values_.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) nuis.values_[j].p = p[j];
  return nuis;
}

NuisanceEstimates NuisanceEstimates::zeroed_with_uniform_probs(std::int64_t d) {
  if (d < 1) throw std::invalid_argument("nuisances: d must be >= 1");
  NuisanceEstimates nuis;
  nuis.d_ = d;
  nuis.source_ = NuisanceSource::zeroed;
  nuis.defaults_.p = 1.0 / static_cast<double>(d);
  return nuis;
}

NuisanceEstimates NuisanceEstimates::external(std::int64_t d, std::vector<double> pi,
                                              std::vector<double> mu1, std::vector<double> mu0,
                                              std::vector<double> p,
                                              std::optional<std::vector<double>> mu) {
  const auto size = static_cast<std::size_t>(d);
  if (pi.size() != size || mu1.size() != size || mu0.size() != size || p.size() != size ||
      (mu && mu->size() != size)) {
    throw std::invalid_argument("nuisances: vectors must have length d");
  }
  check_unit_range(pi, "pi");
  check_unit_range(mu1, "mu1");
  check_unit_range(mu0, "mu0");
  check_unit_range(p, "p");
  if (mu) check_unit_range(*mu, "mu");
  NuisanceEstimates nuis;
  nuis.d_ = d;
  nuis.source_ = NuisanceSource::external;
  nuis.categories_.resize(size);
  std::iota(nuis.categories_.begin(), nuis.categories_.end(), std::int64_t{1});
  nuis.values_.resize(size);
  for (std::size_t j = 0; j < size; ++j) {
    Values& v = nuis.values_[j];
    v.pi = pi[j];
    v.mu1 = mu1[j];
    v.mu0 = mu0[j];
    v.p = p[j];
    v.mu = mu ? (*mu)[j] : pi[j] * mu1[j] + (1.0 - pi[j]) * mu0[j];
  }
  return nuis;
}

NuisanceEstimates NuisanceEstimates::external_truth(const ModelSpec& model) {
  return external(model.d, model.pi, model.mu1, model.mu0, model.p);
}

NuisanceEstimates NuisanceEstimates::load_json(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) throw DataError("cannot open nuisance file: " + path.string());
  std::stringstream buffer;
  buffer << input.rdbuf();
  nlohmann::json obj = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw DataError("nuisance file: not a JSON object");
  if (!obj.contains("d") || !obj["d"].is_number_integer()) {
    throw DataError("nuisance file: missing integer 'd'");
  }
  const auto d = obj["d"].get<std::int64_t>();
  auto vec = [&obj, d](const char* key) {
    if (!obj.contains(key) || !obj[key].is_array()) {
      throw DataError(std::string("nuisance file: missing array '") + key + "'");
    }
    auto values = obj[key].get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(d)) {
      throw DataError(std::string("nuisance file: '") + key + "' has wrong length");
    }
    return values;
  };
  std::optional<std::vector<double>> mu;
  if (obj.contains("mu_hat")) mu = vec("mu_hat");
  return external(d, vec("pi_hat"), vec("mu1_hat"), vec("mu0_hat"), vec("p_hat"), std::move(mu));
}

NuisanceEstimates nuisance_mle(const SufficientStats& stats) {
  return NuisanceEstimates::empirical(stats);
}

EstimateResult plugin_potential_mean(const SufficientStats& stats, int arm) {
  if (arm != 0 && arm != 1) throw std::invalid_argument("plugin: arm must be 0 or 1");
  const auto n = static_cast<double>(stats.n);
  double total = 0;
  for (const auto& cell : stats.cells) {
    const double p_hat = static_cast<double>(cell.n_x) / n;
    const double mu_hat =
        arm == 1 ? guarded_div(static_cast<double>(cell.n_treated_y1),
                               static_cast<double>(cell.n_treated))
                 : guarded_div(static_cast<double>(cell.n_untreated_y1),
                               static_cast<double>(cell.n_x - cell.n_treated));
    total += p_hat * mu_hat;
  }
  EstimateResult result;
  result.estimator_id = arm == 1 ? "plugin_y1" : "plugin_y0";
  result.value = total;
  return result;
}

EstimateResult plugin_ate(const SufficientStats& stats) {
  const auto n = static_cast<double>(stats.n);
  double total = 0;
  std::int64_t zero_events = 0;
  for (const auto& cell : stats.cells) {
    const double p_hat = static_cast<double>(cell.n_x) / n;
    const double mu1_hat = guarded_div(static_cast<double>(cell.n_treated_y1),
                                       static_cast<double>(cell.n_treated));
    const double mu0_hat = guarded_div(static_cast<double>(cell.n_untreated_y1),
                                       static_cast<double>(cell.n_x - cell.n_treated));
    total += p_hat * (mu1_hat - mu0_hat);
    if (cell.n_treated == 0 || cell.n_treated == cell.n_x) ++zero_events;
  }
  EstimateResult result;
  result.estimator_id = "plugin";
  result.value = total;
  result.diagnostics["empty_arm_categories"] = static_cast<double>(zero_events);
  return result;
}

namespace {

void check_dims(const Dataset& data, const NuisanceEstimates& nuis, const char* name) {
  if (nuis.d() != data.d) {
    throw std::invalid_argument(std::string(name) + ": nuisance d does not match dataset d");
  }
}

double truncated(double pi, const std::optional<double>& margin) {
  if (!margin) return pi;
  return std::clamp(pi, *margin, 1.0 - *margin);
}

}  // namespace

EstimateResult reg_ate(const Dataset& data, const NuisanceEstimates& nuis) {
  check_dims(data, nuis, "reg_ate");
  double total = 0;
  for (const Record& record : data.records) {
    const auto v = nuis.at(record.x);
    total += v.mu1 - v.mu0;
  }
  EstimateResult result;
  result.estimator_id = "reg";
  result.value = total / static_cast<double>(data.n);
  return result;
}

EstimateResult ipw_ate(const Dataset& data, const NuisanceEstimates& nuis,
                       std::optional<double> truncate_pi) {
  check_dims(data, nuis, "ipw_ate");
  double total = 0;
  for (const Record& record : data.records) {
    const auto v = nuis.at(record.x);
    const double pi = truncated(v.pi, truncate_pi);
    total += guarded_div(static_cast<double>(record.a) * record.y, pi) -
             guarded_div((1.0 - record.a) * record.y, 1.0 - pi);
  }
  EstimateResult result;
  result.estimator_id = "ipw";
  result.value = total / static_cast<double>(data.n);
  return result;
}

EstimateResult dr_ate(const Dataset& data, const NuisanceEstimates& nuis,
                      std::optional<double> truncate_pi) {
  check_dims(data, nuis, "dr_ate");
  double total = 0;
  for (const Record& record : data.records) {
    const auto v = nuis.at(record.x);
    const double pi = truncated(v.pi, truncate_pi);
    const double treated_term =
        guarded_div(record.a * (record.y - v.mu1), pi) + v.mu1;
    const double control_term =
        guarded_div((1.0 - record.a) * (record.y - v.mu0), 1.0 - pi) + v.mu0;
    total += treated_term - control_term;
  }
  EstimateResult result;
  result.estimator_id = "dr";
  result.value = total / static_cast<double>(data.n);
  return result;
}

EstimateResult homog_ate(const SufficientStats& stats) {
  const auto n = static_cast<double>(stats.n);
  double numerator = 0;
  double denominator = 0;
  std::int64_t collision_categories = 0;
  for (const auto& cell : stats.cells) {
    const bool both_arms = cell.n_treated > 0 && cell.n_treated < cell.n_x;
    if (!both_arms) continue;
    ++collision_categories;
    const double weight = static_cast<double>(cell.n_x) / n;  // t_k
    const double mu1_hat = guarded_div(static_cast<double>(cell.n_treated_y1),
                                       static_cast<double>(cell.n_treated));
    const double mu0_hat = guarded_div(static_cast<double>(cell.n_untreated_y1),
                                       static_cast<double>(cell.n_x - cell.n_treated));
    numerator += weight * (mu1_hat - mu0_hat);
    denominator += weight;
  }
  EstimateResult result;
  result.estimator_id = "homog";
  result.value = guarded_div(numerator, denominator);
  result.diagnostics["collision_categories"] = static_cast<double>(collision_categories);
  result.diagnostics["collision_sample_mass"] = denominator * n;
  return result;
}

namespace {

// Indices of `data` sorted by (category, index); equal categories stay in
// record order so per-category floating sums are reproducible.
std::vector<std::int64_t> grouped_order(const Dataset& data) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(data.n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&data](std::int64_t lhs, std::int64_t rhs) {
    const auto& a = data.records[static_cast<std::size_t>(lhs)];
    const auto& b = data.records[static_cast<std::size_t>(rhs)];
    if (a.x != b.x) return a.x < b.x;
    return lhs < rhs;
  });
  return order;
}

// Shared frame for the pairwise estimators: walks categories in order and
// hands each category's record range to `per_category`. The pair sum over
// i != j inside one category reduces to S_u * S_v - sum(u_i v_i).
template <typename PerCategory>
void for_each_category(const Dataset& data, const std::vector<std::int64_t>& order,
                       PerCategory&& per_category) {
  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin;
    const std::int64_t category = data.records[static_cast<std::size_t>(order[begin])].x;
    while (end < order.size() &&
           data.records[static_cast<std::size_t>(order[end])].x == category) {
      ++end;
    }
    per_category(category, begin, end);
    begin = end;
  }
}

}  // namespace

EstimateResult second_order_eta(const Dataset& data, const NuisanceEstimates& nuis) {
  check_dims(data, nuis, "second_order_eta");
  if (data.n < 2) throw std::invalid_argument("second_order_eta: n must be >= 2");
  const auto order = grouped_order(data);
  const auto n = static_cast<double>(data.n);
  double pn_term = 0;
  double pair_term = 0;
  for_each_category(data, order, [&](std::int64_t category, std::size_t begin, std::size_t end) {
    const auto v = nuis.at(category);
    if (v.p <= 0.0) {
      throw std::invalid_argument("second_order_eta: nuisance covariate mass missing");
    }
    double sum_u = 0, sum_w = 0, sum_uw = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& record = data.records[static_cast<std::size_t>(order[i])];
      const double u = record.a - v.pi;
      const double w = record.y - v.mu;
      sum_u += u;
      sum_w += w;
      sum_uw += u * w;
    }
    pn_term += sum_uw;
    pair_term += (sum_u * sum_w - sum_uw) / v.p;
  });
  EstimateResult result;
  result.estimator_id = "eta2";
  result.value = pn_term / n - pair_term / (n * (n - 1.0));
  return result;
}

EstimateResult second_order_rho(const Dataset& data, const NuisanceEstimates& nuis) {
  check_dims(data, nuis, "second_order_rho");
  if (data.n < 2) throw std::invalid_argument("second_order_rho: n must be >= 2");
  const auto order = grouped_order(data);
  const auto n = static_cast<double>(data.n);
  double pn_term = 0;
  double pair_term = 0;
  for_each_category(data, order, [&](std::int64_t category, std::size_t begin, std::size_t end) {
    const auto v = nuis.at(category);
    if (v.p <= 0.0) {
      throw std::invalid_argument("second_order_rho: nuisance covariate mass missing");
    }
    double sum_u = 0, sum_uu = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& record = data.records[static_cast<std::size_t>(order[i])];
      const double u = record.a - v.pi;
      sum_u += u;
      sum_uu += u * u;
    }
    pn_term += sum_uu;
    pair_term += (sum_u * sum_u - sum_uu) / v.p;
  });
  EstimateResult result;
  result.estimator_id = "rho2";
  result.value = pn_term / n - pair_term / (n * (n - 1.0));
  return result;
}

EstimateResult second_order_ate(const Dataset& data, const NuisanceEstimates& nuis) {
  check_dims(data, nuis, "second_order_ate");
  if (data.n < 2) throw std::invalid_argument("second_order_ate: n must be >= 2");
  const auto order = grouped_order(data);
  const auto n = static_cast<double>(data.n);
  double pn_term = 0;
  double pair_term = 0;
  for_each_category(data, order, [&](std::int64_t category, std::size_t begin, std::size_t end) {
    const auto v = nuis.at(category);
    if (v.pi <= 0.0 || v.p <= 0.0) {
      throw std::invalid_argument(
          "second_order_ate: observed category with zero propensity or covariate mass");
    }
    double sum_u = 0, sum_t = 0, sum_ut = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& record = data.records[static_cast<std::size_t>(order[i])];
      const double residual = record.a * (record.y - v.mu1);
      pn_term += residual / v.pi + v.mu1;
      const double u = record.a / v.pi - 1.0;
      const double t = residual;
      sum_u += u;
      sum_t += t;
      sum_ut += u * t;
    }
    pair_term += (sum_u * sum_t - sum_ut) / (v.p * v.pi);
  });
  EstimateResult result;
  result.estimator_id = "ate2";
  result.value = pn_term / n - pair_term / (n * (n - 1.0));
  return result;
}

EstimateResult wate_from_moments(double eta_hat, double rho_hat, ModelClassParams params,
                                 bool clamp) {
  if (!(params.epsilon > 0.0 && params.epsilon < 0.5)) {
    throw std::invalid_argument("wate: epsilon must lie in (0, 1/2)");
  }
  if (!std::isfinite(eta_hat) || !std::isfinite(rho_hat)) {
    throw std::invalid_argument("wate: inputs must be finite");
  }
  EstimateResult result;
  result.estimator_id = "wate2";
  if (clamp) {
    const double floor = params.epsilon * (1.0 - params.epsilon);
    const double denominator = std::max(rho_hat, floor);
    result.value = eta_hat / denominator;
    result.diagnostics["denominator"] = denominator;
    result.diagnostics["clamped"] = rho_hat < floor ? 1.0 : 0.0;
  } else {
    if (rho_hat <= 0.0) throw std::domain_error("wate: rho_hat <= 0 without clamping");
    result.value = eta_hat / rho_hat;
    result.diagnostics["denominator"] = rho_hat;
    result.diagnostics["clamped"] = 0.0;
  }
  return result;
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::invalid_argument("normal_quantile: prob must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

EstimateResult influence_ci(const Dataset& data, const NuisanceEstimates& nuis, double level) {
  check_dims(data, nuis, "influence_ci");
  if (data.n < 2) throw std::invalid_argument("influence_ci: n must be >= 2");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("influence_ci: level must lie in (0, 1)");
  }
  EstimateResult result = dr_ate(data, nuis);

  const auto n = static_cast<double>(data.n);
  double sum = 0, sum_sq = 0;
  for (const Record& record : data.records) {
    const auto v = nuis.at(record.x);
    const double weight = guarded_div(static_cast<double>(record.a), v.pi) -
                          guarded_div(1.0 - record.a, 1.0 - v.pi);
    const double mu_a = record.a ? v.mu1 : v.mu0;
    const double phi = v.mu1 - v.mu0 + weight * (record.y - mu_a);
    sum += phi;
    sum_sq += phi * phi;
  }
  const double mean = sum / n;
  const double sample_var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  const double se = std::sqrt(sample_var / n);
  const double z = normal_quantile(0.5 * (1.0 + level));

  result.se = se;
  result.ci = ConfidenceInterval{result.value - z * se, result.value + z * se, level};
  return result;
}

}  // namespace hdte
