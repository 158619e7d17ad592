#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdte/model.hpp"

namespace hdte {

// Largest d a grid cell may request; larger cells are clamped and the clamp
// is recorded on the row (d column reports the value actually simulated).
inline constexpr std::int64_t kMaxCategories = 10'000'000;

struct OverlaySpec {
  double C = 1.0;
};

// Monte Carlo grid: the cartesian product of n_list x gamma_list, each cell
// simulated M times from the model family with d = floor(n^gamma).
struct ExperimentConfig {
  std::string estimator_id;  // plugin|reg|ipw|dr|homog|eta2|rho2|wate2|ate2
  std::vector<std::int64_t> n_list;
  std::vector<double> gamma_list;
  std::int64_t M = 1;
  std::uint64_t master_seed = 0;
  std::string model_family = "uniform-sim";
  // Nuisance sourcing for the second-order estimators:
  //   zero     - pi = mu = 0, covariate probabilities set to the truth
  //   split    - empirical nuisances from a random half, estimate on the rest
  //   external - all nuisances set to the truth
  std::string nuisance_mode = "zero";
  double epsilon = 0.1;  // clamp margin for wate2
  std::optional<OverlaySpec> overlay;
};

// Throws ConfigError on invalid settings.
void validate_config(const ExperimentConfig& config);

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_json(const std::string& text);

struct ResultRow {
  std::int64_t n = 0;
  std::int64_t d = 0;
  double gamma = 0;
  std::string estimator_id;
  std::int64_t reps = 0;  // repetitions aggregated (failed reps excluded)
  double rmse = 0, bias = 0, variance = 0, mc_se_rmse = 0;
  std::int64_t failed_reps = 0;
  std::optional<double> bound, ratio;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  bool has_overlay = false;
};

// Runs M repetitions of one grid cell. Every repetition draws its dataset
// from a stream derived from (n, gamma, rep), so results are identical for
// any worker count and any subset of the grid. Repetitions whose estimator
// preconditions fail are excluded and counted. truth is the population value
// the estimator targets.
ResultRow run_cell(std::int64_t n, double gamma, const std::string& estimator_id,
                   const ModelSpec& model, double truth, std::int64_t M,
                   std::uint64_t master_seed, const std::string& nuisance_mode,
                   double epsilon, int workers = 1);

// Full grid; rows sorted by (n, gamma). Cells where every repetition failed
// are emitted with reps = 0 and NaN aggregates.
ResultTable run_grid(const ExperimentConfig& config, int workers = 1);

// Adds bound = rate_curve(C, gamma, n) and ratio = rmse/bound to each row.
void apply_overlay(ResultTable& table, double C);

// d = floor(n^gamma), computed robustly for integer powers, then clamped to
// kMaxCategories.
std::int64_t categories_for_cell(std::int64_t n, double gamma);

// The population value targeted by each estimator id (ate2 targets E[Y^1]).
double truth_for_estimator(const std::string& estimator_id, const EstimandValues& truth);

// Delimited text: header n,d,gamma,estimator,M,rmse,bias,variance,mc_se_rmse
// plus ,bound,ratio when the overlay is present.
std::string format_result_table(const ResultTable& table);
void write_result_table(const ResultTable& table, const std::filesystem::path& path);

// One series file per n, named <prefix>_n<value>.csv, for external plotting.
void write_plot_series(const ResultTable& table, const std::string& prefix);

}  // namespace hdte
