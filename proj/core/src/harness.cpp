#include "hdte/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "hdte/bounds.hpp"
#include "hdte/errors.hpp"
#include "hdte/estimators.hpp"
#include "hdte/rng.hpp"
#include "hdte/sampling.hpp"

namespace hdte {

namespace {

enum class EstimatorId { plugin, reg, ipw, dr, homog, eta2, rho2, wate2, ate2 };

EstimatorId parse_estimator(const std::string& id) {
  if (id == "plugin") return EstimatorId::plugin;
  if (id == "reg") return EstimatorId::reg;
  if (id == "ipw") return EstimatorId::ipw;
  if (id == "dr") return EstimatorId::dr;
  if (id == "homog") return EstimatorId::homog;
  if (id == "eta2") return EstimatorId::eta2;
  if (id == "rho2") return EstimatorId::rho2;
  if (id == "wate2") return EstimatorId::wate2;
  if (id == "ate2") return EstimatorId::ate2;
  throw ConfigError("unknown estimator id: " + id);
}

bool is_second_order(EstimatorId id) {
  return id == EstimatorId::eta2 || id == EstimatorId::rho2 || id == EstimatorId::wate2 ||
         id == EstimatorId::ate2;
}

enum class NuisanceMode { zero, split, external };

NuisanceMode parse_nuisance_mode(const std::string& mode) {
  if (mode == "zero") return NuisanceMode::zero;
  if (mode == "split") return NuisanceMode::split;
  if (mode == "external") return NuisanceMode::external;
  throw ConfigError("unknown nuisance mode: " + mode);
}

constexpr std::uint64_t kDrawPurpose = 1;
constexpr std::uint64_t kSplitPurpose = 2;

std::uint64_t gamma_key(double gamma) {
  return static_cast<std::uint64_t>(std::llround(gamma * 1e6));
}

}  // namespace

std::int64_t categories_for_cell(std::int64_t n, double gamma) {
  // floor(n^gamma) with a nudge so exact integer powers don't round down.
  const long double powered = std::pow(static_cast<long double>(n), static_cast<long double>(gamma));
  auto d = static_cast<std::int64_t>(std::floor(powered + 1e-9L));
  d = std::max<std::int64_t>(d, 1);
  return std::min(d, kMaxCategories);
}

double truth_for_estimator(const std::string& estimator_id, const EstimandValues& truth) {
  switch (parse_estimator(estimator_id)) {
    case EstimatorId::plugin:
    case EstimatorId::reg:
    case EstimatorId::ipw:
    case EstimatorId::dr:
    case EstimatorId::homog:
      return truth.ate;
    case EstimatorId::eta2:
      return truth.eta;
    case EstimatorId::rho2:
      return truth.rho;
    case EstimatorId::wate2:
      return truth.wate;
    case EstimatorId::ate2:
      return truth.mean_treated;
  }
  return truth.ate;
}

void validate_config(const ExperimentConfig& config) {
  parse_estimator(config.estimator_id);
  parse_nuisance_mode(config.nuisance_mode);
  if (config.model_family != "uniform-sim") {
    throw ConfigError("unknown model family: " + config.model_family);
  }
  if (config.n_list.empty()) throw ConfigError("n_list must be non-empty");
  for (auto n : config.n_list) {
    if (n < 1) throw ConfigError("n_list entries must be >= 1");
  }
  if (config.gamma_list.empty()) throw ConfigError("gamma_list must be non-empty");
  for (double gamma : config.gamma_list) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("gamma_list entries must be finite and >= 0");
    }
  }
  if (config.M < 1) throw ConfigError("M must be >= 1");
  if (!(config.epsilon > 0.0 && config.epsilon < 0.5)) {
    throw ConfigError("epsilon must lie in (0, 1/2)");
  }
  if (config.overlay && !(config.overlay->C > 0.0)) {
    throw ConfigError("overlay C must be > 0");
  }
}

namespace {

struct CellContext {
  const ModelSpec& model;
  const CategoricalSampler& sampler;
  EstimatorId estimator;
  NuisanceMode mode;
  const NuisanceEstimates* shared_nuisances;  // zero/external modes
  std::int64_t n = 0;
  std::uint64_t gkey = 0;
  std::uint64_t master_seed = 0;
  double epsilon = 0.1;
};

double run_one_rep(const CellContext& ctx, std::int64_t rep) {
  const auto urep = static_cast<std::uint64_t>(rep);
  const SeedSpec draw_seed{ctx.master_seed,
                           stream_hash({static_cast<std::uint64_t>(ctx.n), ctx.gkey, urep,
                                        kDrawPurpose})};
  Dataset data = draw_dataset_with(ctx.sampler, ctx.model, ctx.n, draw_seed);

  switch (ctx.estimator) {
    case EstimatorId::plugin:
      return plugin_ate(tabulate(data)).value;
    case EstimatorId::reg:
      return reg_ate(data, nuisance_mle(tabulate(data))).value;
    case EstimatorId::ipw:
      return ipw_ate(data, nuisance_mle(tabulate(data))).value;
    case EstimatorId::dr:
      return dr_ate(data, nuisance_mle(tabulate(data))).value;
    case EstimatorId::homog:
      return homog_ate(tabulate(data)).value;
    default:
      break;
  }

  // Second-order estimators: pick the nuisance source, then estimate.
  NuisanceEstimates local;
  const NuisanceEstimates* nuis = ctx.shared_nuisances;
  if (ctx.mode == NuisanceMode::split) {
    const SeedSpec split_seed{ctx.master_seed,
                              stream_hash({static_cast<std::uint64_t>(ctx.n), ctx.gkey, urep,
                                           kSplitPurpose})};
    auto halves = split_sample(data, split_seed);
    local = nuisance_mle(tabulate(halves.first));
    data = std::move(halves.second);
    nuis = &local;
  }

  switch (ctx.estimator) {
    case EstimatorId::eta2:
      return second_order_eta(data, *nuis).value;
    case EstimatorId::rho2:
      return second_order_rho(data, *nuis).value;
    case EstimatorId::wate2: {
      const double eta_hat = second_order_eta(data, *nuis).value;
      const double rho_hat = second_order_rho(data, *nuis).value;
      return wate_from_moments(eta_hat, rho_hat, ModelClassParams{ctx.epsilon}, true).value;
    }
    case EstimatorId::ate2:
      return second_order_ate(data, *nuis).value;
    default:
      throw std::logic_error("unreachable estimator dispatch");
  }
}

}  // namespace

ResultRow run_cell(std::int64_t n, double gamma, const std::string& estimator_id,
                   const ModelSpec& model, double truth, std::int64_t M,
                   std::uint64_t master_seed, const std::string& nuisance_mode, double epsilon,
                   int workers) {
  const EstimatorId estimator = parse_estimator(estimator_id);
  const NuisanceMode mode = parse_nuisance_mode(nuisance_mode);
  const CategoricalSampler sampler(model.p);

  NuisanceEstimates shared;
  if (is_second_order(estimator)) {
    if (mode == NuisanceMode::zero) {
      const bool uniform =
          std::adjacent_find(model.p.begin(), model.p.end(), std::not_equal_to<>()) ==
          model.p.end();
      shared = uniform ? NuisanceEstimates::zeroed_with_uniform_probs(model.d)
                       : NuisanceEstimates::zeroed_with_probs(model.d, model.p);
    } else if (mode == NuisanceMode::external) {
      shared = NuisanceEstimates::external_truth(model);
    }
  }

  CellContext ctx{model,    sampler, estimator, mode, &shared, n, gamma_key(gamma),
                  master_seed, epsilon};

  std::vector<double> estimates(static_cast<std::size_t>(M),
                                std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> succeeded(static_cast<std::size_t>(M), 0);

  auto work_range = [&](std::atomic<std::int64_t>& next) {
    for (std::int64_t rep = next.fetch_add(1); rep < M; rep = next.fetch_add(1)) {
      try {
        estimates[static_cast<std::size_t>(rep)] = run_one_rep(ctx, rep);
        succeeded[static_cast<std::size_t>(rep)] = 1;
      } catch (const std::exception&) {
        // Estimator precondition failed for this repetition; exclude and count.
      }
    }
  };

  workers = std::max(workers, 1);
  if (workers == 1) {
    std::atomic<std::int64_t> next{0};
    work_range(next);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back([&] { work_range(next); });
    for (auto& thread : pool) thread.join();
  }

  // Ordered reduction in ascending repetition order for bit reproducibility.
  ResultRow row;
  row.n = n;
  row.d = model.d;
  row.gamma = gamma;
  row.estimator_id = estimator_id;
  double sum_e = 0, sum_e2 = 0, sum_e4 = 0;
  std::int64_t ok_count = 0;
  for (std::int64_t rep = 0; rep < M; ++rep) {
    if (!succeeded[static_cast<std::size_t>(rep)]) continue;
    const double err = estimates[static_cast<std::size_t>(rep)] - truth;
    sum_e += err;
    sum_e2 += err * err;
    sum_e4 += err * err * err * err;
    ++ok_count;
  }
  row.reps = ok_count;
  row.failed_reps = M - ok_count;
  if (ok_count == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.rmse = row.bias = row.variance = row.mc_se_rmse = nan;
    return row;
  }
  const auto m = static_cast<double>(ok_count);
  const double m2 = sum_e2 / m;
  const double m4 = sum_e4 / m;
  row.bias = sum_e / m;
  row.rmse = std::sqrt(m2);
  row.variance = m2 - row.bias * row.bias;
  // Delta method: Var(m2_hat) = (m4 - m2^2)/m, se(rmse) = se(m2)/(2 rmse).
  const double var_m2 = std::max(m4 - m2 * m2, 0.0) / m;
  row.mc_se_rmse = row.rmse > 0.0 ? std::sqrt(var_m2) / (2.0 * row.rmse) : 0.0;
  return row;
}

ResultTable run_grid(const ExperimentConfig& config, int workers) {
  validate_config(config);
  ResultTable table;
  table.has_overlay = config.overlay.has_value();

  std::vector<std::int64_t> n_values = config.n_list;
  std::sort(n_values.begin(), n_values.end());
  std::vector<double> gamma_values = config.gamma_list;
  std::sort(gamma_values.begin(), gamma_values.end());

  for (std::int64_t n : n_values) {
    for (double gamma : gamma_values) {
      const std::int64_t d = categories_for_cell(n, gamma);
      const ModelSpec model = uniform_sim_model(d);
      const double truth = truth_for_estimator(config.estimator_id, population_estimands(model));
      table.rows.push_back(run_cell(n, gamma, config.estimator_id, model, truth, config.M,
                                    config.master_seed, config.nuisance_mode, config.epsilon,
                                    workers));
    }
  }
  if (config.overlay) apply_overlay(table, config.overlay->C);
  return table;
}

void apply_overlay(ResultTable& table, double C) {
  table.has_overlay = true;
  for (ResultRow& row : table.rows) {
    row.bound = rate_curve(C, row.gamma, row.n);
    row.ratio = row.rmse / *row.bound;
  }
}

namespace {

std::string fmt_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

}  // namespace

std::string format_result_table(const ResultTable& table) {
  std::ostringstream out;
  out << "n,d,gamma,estimator,M,rmse,bias,variance,mc_se_rmse";
  if (table.has_overlay) out << ",bound,ratio";
  out << '\n';
  for (const ResultRow& row : table.rows) {
    out << row.n << ',' << row.d << ',' << fmt_double(row.gamma) << ',' << row.estimator_id << ','
        << row.reps << ',' << fmt_double(row.rmse) << ',' << fmt_double(row.bias) << ','
        << fmt_double(row.variance) << ',' << fmt_double(row.mc_se_rmse);
    if (table.has_overlay) {
      out << ',' << fmt_double(row.bound.value_or(std::numeric_limits<double>::quiet_NaN()))
          << ',' << fmt_double(row.ratio.value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    out << '\n';
  }
  return out.str();
}

void write_result_table(const ResultTable& table, const std::filesystem::path& path) {
  std::ofstream output(path);
  if (!output) throw DataError("cannot write result table: " + path.string());
  output << format_result_table(table);
}

void write_plot_series(const ResultTable& table, const std::string& prefix) {
  std::vector<std::int64_t> seen;
  for (const ResultRow& row : table.rows) {
    if (std::find(seen.begin(), seen.end(), row.n) != seen.end()) continue;
    seen.push_back(row.n);
    const std::string path = prefix + "_n" + std::to_string(row.n) + ".csv";
    std::ofstream output(path);
    if (!output) throw DataError("cannot write plot series: " + path);
    output << "gamma,d,rmse,mc_se_rmse";
    if (table.has_overlay) output << ",bound,ratio";
    output << '\n';
    for (const ResultRow& series_row : table.rows) {
      if (series_row.n != row.n) continue;
      output << fmt_double(series_row.gamma) << ',' << series_row.d << ','
             << fmt_double(series_row.rmse) << ',' << fmt_double(series_row.mc_se_rmse);
      if (table.has_overlay) {
        output << ',' << fmt_double(series_row.bound.value_or(0)) << ','
               << fmt_double(series_row.ratio.value_or(0));
      }
      output << '\n';
    }
  }
}

ExperimentConfig parse_config_json(const std::string& text) {
  nlohmann::json obj = nlohmann::json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw ConfigError("config: not a JSON object");

  ExperimentConfig config;
  try {
    config.estimator_id = obj.at("estimator_id").get<std::string>();
    config.n_list = obj.at("n_list").get<std::vector<std::int64_t>>();
    config.gamma_list = obj.at("gamma_list").get<std::vector<double>>();
    config.M = obj.at("M").get<std::int64_t>();
    config.master_seed = obj.at("master_seed").get<std::uint64_t>();
    if (obj.contains("model_family")) config.model_family = obj["model_family"].get<std::string>();
    if (obj.contains("nuisance_mode")) {
      config.nuisance_mode = obj["nuisance_mode"].get<std::string>();
    }
    if (obj.contains("epsilon")) config.epsilon = obj["epsilon"].get<double>();
    if (obj.contains("overlay")) {
      if (!obj["overlay"].is_object() || !obj["overlay"].contains("C")) {
        throw ConfigError("config: overlay must be an object with key 'C'");
      }
      config.overlay = OverlaySpec{obj["overlay"]["C"].get<double>()};
    }
  } catch (const nlohmann::json::exception& error) {
    throw ConfigError(std::string("config: ") + error.what());
  }
  validate_config(config);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << input.rdbuf();
  return parse_config_json(buffer.str());
}

}  // namespace hdte
