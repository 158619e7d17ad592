#include "hdte/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hdte/estimators.hpp"
#include "hdte/model.hpp"
#include "hdte/rng.hpp"
#include "hdte/sampling.hpp"

namespace hdte {

namespace {

constexpr std::uint64_t kModelPurpose = 11;
constexpr std::uint64_t kDataPurpose = 12;

// Random member of the model class. Propensities may be pushed to 0 or 1 so
// that categories with an empty arm occur often, which is where the 0/0
// convention matters.
ModelSpec random_model(Xoshiro256pp& rng, std::int64_t max_d, bool degenerate_pi_allowed) {
  ModelSpec model;
  model.d = 1 + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(max_d)));
  const auto size = static_cast<std::size_t>(model.d);
  model.p.resize(size);
  model.pi.resize(size);
  model.mu1.resize(size);
  model.mu0.resize(size);
  double total = 0;
  for (std::size_t j = 0; j < size; ++j) {
    model.p[j] = -std::log(1.0 - rng.next_unit());
    total += model.p[j];
  }
  for (std::size_t j = 0; j < size; ++j) model.p[j] /= total;
  for (std::size_t j = 0; j < size; ++j) {
    double pi = rng.next_unit();
    if (degenerate_pi_allowed) {
      const double move = rng.next_unit();
      if (move < 0.15) pi = 0.0;
      else if (move < 0.30) pi = 1.0;
    } else {
      pi = 0.1 + 0.8 * pi;
    }
    model.pi[j] = pi;
    model.mu1[j] = rng.next_unit();
    model.mu0[j] = rng.next_unit();
  }
  return model;
}

double pairwise_max_diff(std::initializer_list<double> values) {
  double lo = *values.begin(), hi = *values.begin();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

// Naive O(n^2) evaluations written directly from the estimator definitions.
// These deliberately share nothing with the aggregated implementations.

double naive_eta(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = static_cast<double>(data.n);
  double first = 0;
  for (const Record& r : data.records) {
    const auto v = nuis.at(r.x);
    first += (r.a - v.pi) * (r.y - v.mu);
  }
  double pair_sum = 0;
  for (const Record& ri : data.records) {
    for (const Record& rj : data.records) {
      if (&ri == &rj || ri.x != rj.x) continue;
      const auto vi = nuis.at(ri.x);
      const auto vj = nuis.at(rj.x);
      pair_sum += (ri.a - vi.pi) * (rj.y - vj.mu) / vi.p;
    }
  }
  return first / n - pair_sum / (n * (n - 1.0));
}

double naive_rho(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = static_cast<double>(data.n);
  double first = 0;
  for (const Record& r : data.records) {
    const auto v = nuis.at(r.x);
    first += (r.a - v.pi) * (r.a - v.pi);
  }
  double pair_sum = 0;
  for (const Record& ri : data.records) {
    for (const Record& rj : data.records) {
      if (&ri == &rj || ri.x != rj.x) continue;
      const auto vi = nuis.at(ri.x);
      const auto vj = nuis.at(rj.x);
      pair_sum += (ri.a - vi.pi) * (rj.a - vj.pi) / vi.p;
    }
  }
  return first / n - pair_sum / (n * (n - 1.0));
}

double naive_ate2(const Dataset& data, const NuisanceEstimates& nuis) {
  const auto n = static_cast<double>(data.n);
  double first = 0;
  for (const Record& r : data.records) {
    const auto v = nuis.at(r.x);
    first += r.a * (r.y - v.mu1) / v.pi + v.mu1;
  }
  double pair_sum = 0;
  for (const Record& ri : data.records) {
    for (const Record& rj : data.records) {
      if (&ri == &rj || ri.x != rj.x) continue;
      const auto vi = nuis.at(ri.x);
      const auto vj = nuis.at(rj.x);
      pair_sum += -(ri.a / vi.pi - 1.0) / (vi.p * vj.pi) * rj.a * (rj.y - vj.mu1);
    }
  }
  return first / n + pair_sum / (n * (n - 1.0));
}

}  // namespace

SuiteReport equivalence_suite(const VerifyOptions& options) {
  SuiteReport report;
  report.name = "equivalence";
  report.cases = options.equivalence_cases;

  for (std::int64_t case_idx = 0; case_idx < options.equivalence_cases; ++case_idx) {
    const auto ucase = static_cast<std::uint64_t>(case_idx);
    Xoshiro256pp model_rng(
        {options.master_seed, stream_hash({kModelPurpose, ucase})});
    const ModelSpec model = random_model(model_rng, 50, true);
    const std::int64_t n = 1 + static_cast<std::int64_t>(model_rng.next_below(200));
    const std::uint64_t data_stream = stream_hash({kDataPurpose, ucase});
    const Dataset data = draw_dataset(model, n, {options.master_seed, data_stream});

    const SufficientStats stats = tabulate(data);
    const NuisanceEstimates nuis = nuisance_mle(stats);
    const double plugin = plugin_ate(stats).value;
    const double reg = reg_ate(data, nuis).value;
    const double ipw = ipw_ate(data, nuis, options.truncate_pi).value;
    const double dr = dr_ate(data, nuis, options.truncate_pi).value;

    const double diff = pairwise_max_diff({plugin, reg, ipw, dr});
    report.max_abs_diff = std::max(report.max_abs_diff, diff);
    if (diff >= options.tolerance && !report.failing_stream) {
      report.failing_stream = data_stream;
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "case %lld: max pairwise difference %.3e (dataset stream %llu)",
                    static_cast<long long>(case_idx), diff,
                    static_cast<unsigned long long>(data_stream));
      report.message = buf;
    }
  }
  report.passed = !report.failing_stream.has_value();
  if (report.passed) report.message = "all estimators coincide";
  return report;
}

SuiteReport ustat_oracle_suite(const VerifyOptions& options) {
  SuiteReport report;
  report.name = "ustat-oracle";
  report.cases = options.ustat_cases;

  for (std::int64_t case_idx = 0; case_idx < options.ustat_cases; ++case_idx) {
    const auto ucase = static_cast<std::uint64_t>(case_idx);
    Xoshiro256pp case_rng(
        {options.master_seed, stream_hash({kModelPurpose, ucase, 7})});
    const ModelSpec model = random_model(case_rng, 30, false);
    const std::int64_t n = 2 + static_cast<std::int64_t>(case_rng.next_below(99));
    const std::uint64_t data_stream = stream_hash({kDataPurpose, ucase, 7});
    const Dataset data = draw_dataset(model, n, {options.master_seed, data_stream});

    // Random external nuisances with positive propensity and covariate mass,
    // so all three second-order estimators are defined.
    const auto size = static_cast<std::size_t>(model.d);
    std::vector<double> pi_hat(size), mu1_hat(size), mu0_hat(size), mu_hat(size), p_hat(size);
    for (std::size_t j = 0; j < size; ++j) {
      pi_hat[j] = 0.1 + 0.8 * case_rng.next_unit();
      mu1_hat[j] = case_rng.next_unit();
      mu0_hat[j] = case_rng.next_unit();
      mu_hat[j] = case_rng.next_unit();
      p_hat[j] = 0.05 + 0.95 * case_rng.next_unit();
    }
    const NuisanceEstimates nuis =
        NuisanceEstimates::external(model.d, pi_hat, mu1_hat, mu0_hat, p_hat, mu_hat);

    const double diff = pairwise_max_diff(
        {std::abs(second_order_eta(data, nuis).value - naive_eta(data, nuis)),
         std::abs(second_order_rho(data, nuis).value - naive_rho(data, nuis)),
         std::abs(second_order_ate(data, nuis).value - naive_ate2(data, nuis)), 0.0});
    report.max_abs_diff = std::max(report.max_abs_diff, diff);
    if (diff >= options.tolerance && !report.failing_stream) {
      report.failing_stream = data_stream;
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "case %lld: aggregated vs naive difference %.3e (dataset stream %llu)",
                    static_cast<long long>(case_idx), diff,
                    static_cast<unsigned long long>(data_stream));
      report.message = buf;
    }
  }
  report.passed = !report.failing_stream.has_value();
  if (report.passed) report.message = "aggregated pair sums match the naive oracle";
  return report;
}

}  // namespace hdte
