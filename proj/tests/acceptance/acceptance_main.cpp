// Acceptance suite: one numbered criterion per section, each printing
// [PASS]/[FAIL] lines with the measured values and the pinned tolerances.
// Exit code is the number of failed criteria.
//
// Usage: hdte_acceptance [--criterion N]... [--workers W] [--seed S]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "hdte/bounds.hpp"
#include "hdte/estimators.hpp"
#include "hdte/harness.hpp"
#include "hdte/model.hpp"
#include "hdte/sampling.hpp"
#include "hdte/verify.hpp"

using namespace hdte;

namespace {

std::uint64_t g_seed = 20240817;
int g_workers = 1;

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

void print_check(const Check& check) {
  std::printf("  [%s] %s: %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(),
              check.detail.c_str());
}

bool finish(int number, const char* title, const std::vector<Check>& checks) {
  bool all = true;
  for (const auto& check : checks) {
    print_check(check);
    all = all && check.passed;
  }
  std::printf("[%s] criterion %d: %s\n", all ? "PASS" : "FAIL", number, title);
  std::fflush(stdout);
  return all;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

double grid_rmse(const ResultTable& table, std::int64_t n, double gamma) {
  for (const auto& row : table.rows) {
    if (row.n == n && std::abs(row.gamma - gamma) < 1e-9) return row.rmse;
  }
  std::fprintf(stderr, "missing grid cell n=%lld gamma=%g\n", static_cast<long long>(n), gamma);
  std::exit(99);
}

std::vector<double> gamma_grid(double lo, double hi) {
  std::vector<double> grid;
  for (int step = 0;; ++step) {
    const double gamma = lo + 0.05 * step;
    if (gamma > hi + 1e-9) break;
    grid.push_back(gamma);
  }
  return grid;
}

ResultTable run(const std::string& estimator, std::vector<std::int64_t> n_list,
                std::vector<double> gammas, std::int64_t M, const std::string& nuisance_mode) {
  ExperimentConfig config;
  config.estimator_id = estimator;
  config.n_list = std::move(n_list);
  config.gamma_list = std::move(gammas);
  config.M = M;
  config.master_seed = g_seed;
  config.nuisance_mode = nuisance_mode;
  return run_grid(config, g_workers);
}

// ---------------------------------------------------------------------------
// 1. Plug-in equivalence over 1000 randomized datasets, under 10 seconds.
bool criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  VerifyOptions options;
  options.equivalence_cases = 1000;
  options.master_seed = g_seed;
  const auto report = equivalence_suite(options);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<Check> checks;
  checks.push_back({"1-equivalence", report.passed && report.max_abs_diff < 1e-10,
                    fmt("max pairwise difference %.3e over %lld datasets (tolerance 1e-10)",
                        report.max_abs_diff, static_cast<long long>(report.cases))});
  checks.push_back({"1-runtime", elapsed < 10.0, fmt("%.2f s (limit 10 s)", elapsed)});
  return finish(1, "plug-in equivalence suite", checks);
}

// ---------------------------------------------------------------------------
// 2. Exact-bias closed form vs Monte Carlo at the uniform model, n=20, d=3.
bool criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  const auto model = uniform_sim_model(3);
  const double truth = population_estimands(model).mean_treated;
  const double closed_form = exact_bias(model, 20).mean_treated;

  constexpr std::int64_t reps = 500000;
  const CategoricalSampler sampler(model.p);
  double sum = 0, sum_sq = 0;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    const auto stats = tabulate(draw_dataset_with(
        sampler, model, 20, {g_seed, stream_hash({2, static_cast<std::uint64_t>(rep)})}));
    const double value = plugin_potential_mean(stats, 1).value;
    sum += value;
    sum_sq += value * value;
  }
  const double mean = sum / reps;
  const double var = sum_sq / reps - mean * mean;
  const double se = std::sqrt(var / reps);
  const double mc_bias = mean - truth;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<Check> checks;
  checks.push_back({"2-bias", std::abs(mc_bias - closed_form) <= 4.0 * se,
                    fmt("mc bias %.6f vs closed form %.6f (|diff| %.2e <= 4 SE = %.2e)", mc_bias,
                        closed_form, std::abs(mc_bias - closed_form), 4.0 * se)});
  checks.push_back({"2-runtime", elapsed < 60.0, fmt("%.2f s (limit 60 s)", elapsed)});
  return finish(2, "exact plug-in bias (closed form vs Monte Carlo)", checks);
}

// ---------------------------------------------------------------------------
// 3. Desk-scale reproduction of the plug-in phase-transition figure.
bool criterion_3() {
  const auto table = run("plugin", {1000, 5000}, gamma_grid(0.5, 1.5), 500, "zero");

  std::vector<Check> checks;
  for (std::int64_t n : {std::int64_t{1000}, std::int64_t{5000}}) {
    const double rmse = grid_rmse(table, n, 0.5);
    const double anchor = 1.0 / std::sqrt(16.0 * static_cast<double>(n));
    checks.push_back(
        {fmt("3a-window-n%lld", static_cast<long long>(n)),
         rmse >= 0.5 * anchor && rmse <= 2.0 * anchor,
         fmt("rmse(gamma=0.5) = %.5f, window [0.5,2]x(1/sqrt(16n)) = [%.5f, %.5f]", rmse,
             0.5 * anchor, 2.0 * anchor)});
  }
  const double ratio = grid_rmse(table, 5000, 0.5) / grid_rmse(table, 1000, 0.5);
  checks.push_back({"3a-consistency", ratio >= 0.35 && ratio <= 0.55,
                    fmt("rmse(n=5000)/rmse(n=1000) at gamma=0.5 = %.3f (target [0.35, 0.55])",
                        ratio)});

  const double at_one = grid_rmse(table, 1000, 1.0);
  checks.push_back({"3b-level", std::abs(at_one - 0.08) <= 0.02,
                    fmt("rmse(n=1000, gamma=1) = %.4f (target 0.08 +/- 0.02)", at_one)});

  const double low = grid_rmse(table, 1000, 0.8);
  const double high = grid_rmse(table, 1000, 1.2);
  checks.push_back({"3c-monotone", high > 1.5 * low,
                    fmt("rmse(gamma=1.2) = %.4f > 1.5 x rmse(gamma=0.8) = %.4f", high,
                        1.5 * low)});
  return finish(3, "plug-in phase transition grid", checks);
}

// ---------------------------------------------------------------------------
// 4. Homogeneity estimator grid extended to gamma <= 2.
bool criterion_4() {
  const auto homog = run("homog", {1000, 5000}, gamma_grid(0.5, 2.0), 500, "zero");
  const auto plugin = run("plugin", {1000}, {1.05, 1.1, 1.2}, 500, "zero");

  std::vector<Check> checks;
  const double at_one = grid_rmse(homog, 1000, 1.0);
  checks.push_back({"4-level", std::abs(at_one - 0.05) <= 0.015,
                    fmt("homog rmse(n=1000, gamma=1) = %.4f (target 0.05 +/- 0.015)", at_one)});
  for (double gamma : {1.05, 1.1, 1.2}) {
    const double h = grid_rmse(homog, 1000, gamma);
    const double p = grid_rmse(plugin, 1000, gamma);
    checks.push_back({fmt("4-beats-plugin-g%.2f", gamma), h < p,
                      fmt("homog %.4f < plugin %.4f at n=1000, gamma=%.2f", h, p, gamma)});
  }
  return finish(4, "homogeneity estimator grid", checks);
}

// ---------------------------------------------------------------------------
// 5. Homogeneity overlay ratio against 1.5 n^(gamma/2-1) for gamma <= 1.4.
bool criterion_5() {
  const auto table = run("homog", {1000, 10000}, gamma_grid(0.5, 1.4), 500, "zero");

  std::vector<Check> checks;
  for (std::int64_t n : {std::int64_t{1000}, std::int64_t{10000}}) {
    double worst_lo = 1e9, worst_hi = 0;
    double worst_lo_gamma = 0, worst_hi_gamma = 0;
    for (double gamma : gamma_grid(0.5, 1.4)) {
      const double ratio = grid_rmse(table, n, gamma) / rate_curve(1.5, gamma, n);
      if (ratio < worst_lo) {
        worst_lo = ratio;
        worst_lo_gamma = gamma;
      }
      if (ratio > worst_hi) {
        worst_hi = ratio;
        worst_hi_gamma = gamma;
      }
    }
    checks.push_back(
        {fmt("5-band-n%lld", static_cast<long long>(n)),
         worst_lo >= 0.3 && worst_hi <= 1.7,
         fmt("rmse/(1.5 n^(g/2-1)) in [%.3f (g=%.2f), %.3f (g=%.2f)], target [0.3, 1.7]",
             worst_lo, worst_lo_gamma, worst_hi, worst_hi_gamma)});
  }
  return finish(5, "homogeneity overlay ratio", checks);
}

// ---------------------------------------------------------------------------
// 6. Second-order eta estimator with true covariate probabilities.
bool criterion_6() {
  auto gammas = gamma_grid(0.8, 1.5);
  gammas.insert(gammas.begin(), 0.5);  // extra point for the shape check
  const auto table = run("eta2", {1000, 10000}, gammas, 500, "zero");

  std::vector<Check> checks;
  for (std::int64_t n : {std::int64_t{1000}, std::int64_t{10000}}) {
    double worst_lo = 1e9, worst_hi = 0;
    double worst_lo_gamma = 0, worst_hi_gamma = 0;
    for (double gamma : gamma_grid(0.8, 1.5)) {
      const double ratio = grid_rmse(table, n, gamma) / rate_curve(0.5, gamma, n);
      if (ratio < worst_lo) {
        worst_lo = ratio;
        worst_lo_gamma = gamma;
      }
      if (ratio > worst_hi) {
        worst_hi = ratio;
        worst_hi_gamma = gamma;
      }
    }
    checks.push_back(
        {fmt("6-band-n%lld", static_cast<long long>(n)),
         worst_lo >= 0.5 && worst_hi <= 2.0,
         fmt("rmse/(0.5 n^(g/2-1)) in [%.3f (g=%.2f), %.3f (g=%.2f)], target [0.5, 2]",
             worst_lo, worst_lo_gamma, worst_hi, worst_hi_gamma)});
  }
  const double flat = grid_rmse(table, 10000, 0.5);
  const double rise = grid_rmse(table, 10000, 1.0);
  checks.push_back({"6-shape", rise < 2.0 * flat,
                    fmt("rmse(gamma=1) = %.5f < 2 x rmse(gamma=0.5) = %.5f at n=10^4", rise,
                        2.0 * flat)});
  return finish(6, "second-order eta overlay", checks);
}

// ---------------------------------------------------------------------------
// 7. Monte Carlo dominance of the variance / collision / bias bounds.
bool criterion_7() {
  std::vector<Check> checks;

  {  // Var(psi1_hat) <= plugin variance bound, uniform model n=500, d=50.
    const auto model = uniform_sim_model(50);
    const CategoricalSampler sampler(model.p);
    constexpr std::int64_t reps = 100000;
    double sum = 0, sum2 = 0, sum3 = 0, sum4 = 0;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
      const auto stats = tabulate(draw_dataset_with(
          sampler, model, 500, {g_seed, stream_hash({7, 1, static_cast<std::uint64_t>(rep)})}));
      const double v = plugin_potential_mean(stats, 1).value;
      sum += v;
      sum2 += v * v;
      sum3 += v * v * v;
      sum4 += v * v * v * v;
    }
    const double mean = sum / reps;
    const double m2 = sum2 / reps - mean * mean;
    // Central fourth moment via raw moments.
    const double m4 = sum4 / reps - 4 * mean * (sum3 / reps) + 6 * mean * mean * (sum2 / reps) -
                      3 * mean * mean * mean * mean;
    const double se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / reps);
    bool ok = true;
    double tightest = 1e9;
    for (double eps : {0.1, 0.25, 0.49}) {
      const double bound = plugin_variance_bound(eps, 500);
      tightest = std::min(tightest, bound);
      ok = ok && m2 <= bound + 4.0 * se_var;
    }
    checks.push_back({"7-variance", ok,
                      fmt("Var(psi1_hat) = %.6f <= tightest bound %.6f (+4 SE %.1e)", m2,
                          tightest, 4.0 * se_var)});
  }

  {  // P(no collision) <= 2 exp(-c(eps) n^2 / max(n,d)) at eps=0.25, n=30, d=900.
    ModelSpec model = uniform_sim_model(900);
    std::fill(model.pi.begin(), model.pi.end(), 0.25);  // positivity boundary
    const CategoricalSampler sampler(model.p);
    constexpr std::int64_t reps = 100000;
    std::int64_t none = 0;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
      const auto stats = tabulate(draw_dataset_with(
          sampler, model, 30, {g_seed, stream_hash({7, 2, static_cast<std::uint64_t>(rep)})}));
      if (homog_ate(stats).diagnostics.at("collision_categories") == 0.0) ++none;
    }
    const double p_hat = static_cast<double>(none) / reps;
    const double se = std::sqrt(p_hat * (1.0 - p_hat) / reps);
    const double bound = no_collision_bound(0.25, 30, 900);
    checks.push_back({"7-collision", p_hat <= bound + 4.0 * se,
                      fmt("P(no collision) = %.4f <= bound %.4f (+4 SE %.1e)", p_hat, bound,
                          4.0 * se)});
  }

  {  // |E tau_hat - psi| <= sigma_n + no-collision term, uniform n=100, d=500.
    const auto model = uniform_sim_model(500);
    const CategoricalSampler sampler(model.p);
    constexpr std::int64_t reps = 100000;
    double sum = 0, sum2 = 0;
    for (std::int64_t rep = 0; rep < reps; ++rep) {
      const auto stats = tabulate(draw_dataset_with(
          sampler, model, 100, {g_seed, stream_hash({7, 3, static_cast<std::uint64_t>(rep)})}));
      const double v = homog_ate(stats).value;
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt(std::max(sum2 / reps - mean * mean, 0.0) / reps);
    const double bias = std::abs(mean - 0.25);
    bool ok = true;
    double tightest = 1e9;
    for (double eps : {0.25, 0.49}) {
      const double bound = homogeneity_bias_bound(0.0, eps, 100, 500);
      tightest = std::min(tightest, bound);
      ok = ok && bias <= bound + 4.0 * se;
    }
    checks.push_back({"7-homog-bias", ok,
                      fmt("|E tau_hat - psi| = %.5f <= tightest bound %.5f (+4 SE %.1e)", bias,
                          tightest, 4.0 * se)});
  }

  return finish(7, "Monte Carlo bound dominance", checks);
}

// ---------------------------------------------------------------------------
// 8. Aggregated pair sums equal the naive O(n^2) sums on 200 instances.
bool criterion_8() {
  VerifyOptions options;
  options.ustat_cases = 200;
  options.master_seed = g_seed;
  const auto report = ustat_oracle_suite(options);
  std::vector<Check> checks;
  checks.push_back({"8-oracle", report.passed && report.max_abs_diff < 1e-10,
                    fmt("max |aggregated - naive| = %.3e over %lld instances (tolerance 1e-10)",
                        report.max_abs_diff, static_cast<long long>(report.cases))});
  return finish(8, "U-statistic aggregation oracle", checks);
}

// ---------------------------------------------------------------------------
// 9. 95% influence-function interval coverage at d=4, n=5000, M=2000.
bool criterion_9() {
  const auto model = uniform_sim_model(4);
  const CategoricalSampler sampler(model.p);
  constexpr std::int64_t reps = 2000;
  std::int64_t covered = 0;
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    const auto data = draw_dataset_with(
        sampler, model, 5000, {g_seed, stream_hash({9, static_cast<std::uint64_t>(rep)})});
    const auto result = influence_ci(data, nuisance_mle(tabulate(data)), 0.95);
    if (result.ci->lower <= 0.25 && 0.25 <= result.ci->upper) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  std::vector<Check> checks;
  checks.push_back({"9-coverage", coverage >= 0.93 && coverage <= 0.97,
                    fmt("empirical 95%% CI coverage = %.4f (target [0.93, 0.97])", coverage)});
  return finish(9, "influence-function interval coverage", checks);
}

// ---------------------------------------------------------------------------
// 10. Byte-identical result tables across reruns and worker counts.
bool criterion_10() {
  std::vector<Check> checks;

  ExperimentConfig config;
  config.estimator_id = "plugin";
  config.n_list = {400};
  config.gamma_list = {0.5, 1.0, 1.5};
  config.M = 60;
  config.master_seed = g_seed;
  const std::string serial_a = format_result_table(run_grid(config, 1));
  const std::string serial_b = format_result_table(run_grid(config, 1));
  const std::string threaded = format_result_table(run_grid(config, 8));
  checks.push_back({"10-plugin", serial_a == serial_b && serial_a == threaded,
                    "plugin grid: rerun and 8-worker tables byte-identical"});

  config.estimator_id = "eta2";
  config.nuisance_mode = "split";
  config.n_list = {120};
  config.gamma_list = {1.0};
  config.M = 40;
  const std::string split_serial = format_result_table(run_grid(config, 1));
  const std::string split_threaded = format_result_table(run_grid(config, 8));
  checks.push_back({"10-split", split_serial == split_threaded,
                    "split-nuisance grid: 1 vs 8 workers byte-identical"});

  return finish(10, "determinism across workers", checks);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) {
      g_workers = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      g_seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]... [--workers W] [--seed S]\n", argv[0]);
      return 64;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  int failures = 0;
  for (int number : selected) {
    bool ok = false;
    switch (number) {
      case 1: ok = criterion_1(); break;
      case 2: ok = criterion_2(); break;
      case 3: ok = criterion_3(); break;
      case 4: ok = criterion_4(); break;
      case 5: ok = criterion_5(); break;
      case 6: ok = criterion_6(); break;
      case 7: ok = criterion_7(); break;
      case 8: ok = criterion_8(); break;
      case 9: ok = criterion_9(); break;
      case 10: ok = criterion_10(); break;
      default:
        std::fprintf(stderr, "unknown criterion %d\n", number);
        return 64;
    }
    if (!ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(selected.size()) - failures,
              selected.size());
  return failures;
}
