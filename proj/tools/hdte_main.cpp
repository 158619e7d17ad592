// Command-line front end: dataset simulation, estimation, Monte Carlo phase
// grids, bound tables, and the numerical self-check suites.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verify violation.

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hdte/bounds.hpp"
#include "hdte/errors.hpp"
#include "hdte/estimators.hpp"
#include "hdte/harness.hpp"
#include "hdte/model.hpp"
#include "hdte/sampling.hpp"
#include "hdte/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string fmt_value(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void print_result(const hdte::EstimateResult& result) {
  std::cout << "estimator=" << result.estimator_id << '\n';
  std::cout << "value=" << fmt_value(result.value) << '\n';
  if (result.se) std::cout << "se=" << fmt_value(*result.se) << '\n';
  if (result.ci) {
    std::cout << "ci_lower=" << fmt_value(result.ci->lower) << '\n';
    std::cout << "ci_upper=" << fmt_value(result.ci->upper) << '\n';
    std::cout << "ci_level=" << fmt_value(result.ci->level) << '\n';
  }
  for (const auto& [name, value] : result.diagnostics) {
    std::cout << "diag_" << name << '=' << fmt_value(value) << '\n';
  }
}

struct EstimateArgs {
  std::string data_path;
  std::string estimator;
  std::string nuisance = "empirical";
  std::optional<double> level;
  std::optional<std::int64_t> d_override;
  std::string model_path;
  std::string nuisance_file;
  std::uint64_t seed = 0;
  double epsilon = 0.1;
  bool no_clamp = false;
};

int run_estimate(const EstimateArgs& args) {
  const bool second_order = args.estimator == "eta2" || args.estimator == "rho2" ||
                            args.estimator == "wate2" || args.estimator == "ate2";
  const bool plugin_family = args.estimator == "plugin" || args.estimator == "homog";

  if (plugin_family && args.nuisance != "empirical") {
    throw UsageError(args.estimator + " uses same-sample empirical nuisances only");
  }
  if (second_order && args.nuisance == "empirical") {
    throw UsageError(args.estimator +
                     " needs an independent nuisance source (--nuisance split|zero|file)");
  }
  if (args.nuisance == "zero" && args.model_path.empty()) {
    throw UsageError("--nuisance zero needs --model for the covariate distribution");
  }
  if (args.nuisance == "file" && args.nuisance_file.empty()) {
    throw UsageError("--nuisance file needs --nuisance-file");
  }
  if (args.level && args.estimator != "dr") {
    throw UsageError("--level is only available with --estimator dr");
  }

  hdte::Dataset data = hdte::load_dataset_csv(args.data_path, args.d_override);

  // Resolve the nuisance source and the sample the estimator averages over.
  hdte::NuisanceEstimates nuis;
  if (args.nuisance == "empirical") {
    nuis = hdte::nuisance_mle(hdte::tabulate(data));
  } else if (args.nuisance == "split") {
    auto halves = hdte::split_sample(data, {args.seed, 0});
    nuis = hdte::nuisance_mle(hdte::tabulate(halves.first));
    data = std::move(halves.second);
  } else if (args.nuisance == "zero") {
    const hdte::ModelSpec model = hdte::load_model(args.model_path);
    if (model.d < data.d) throw hdte::DataError("model d is smaller than dataset d");
    data.d = model.d;
    nuis = hdte::NuisanceEstimates::zeroed_with_probs(model.d, model.p);
  } else if (args.nuisance == "file") {
    nuis = hdte::NuisanceEstimates::load_json(args.nuisance_file);
    if (nuis.d() < data.d) throw hdte::DataError("nuisance d is smaller than dataset d");
    data.d = nuis.d();
  } else {
    throw UsageError("unknown nuisance mode: " + args.nuisance);
  }

  hdte::EstimateResult result;
  if (args.estimator == "plugin") {
    result = hdte::plugin_ate(hdte::tabulate(data));
  } else if (args.estimator == "homog") {
    result = hdte::homog_ate(hdte::tabulate(data));
  } else if (args.estimator == "reg") {
    result = hdte::reg_ate(data, nuis);
  } else if (args.estimator == "ipw") {
    result = hdte::ipw_ate(data, nuis);
  } else if (args.estimator == "dr") {
    result = args.level ? hdte::influence_ci(data, nuis, *args.level)
                        : hdte::dr_ate(data, nuis);
  } else if (args.estimator == "eta2") {
    result = hdte::second_order_eta(data, nuis);
  } else if (args.estimator == "rho2") {
    result = hdte::second_order_rho(data, nuis);
  } else if (args.estimator == "ate2") {
    result = hdte::second_order_ate(data, nuis);
  } else if (args.estimator == "wate2") {
    const double eta_hat = hdte::second_order_eta(data, nuis).value;
    const double rho_hat = hdte::second_order_rho(data, nuis).value;
    result = hdte::wate_from_moments(eta_hat, rho_hat, hdte::ModelClassParams{args.epsilon},
                                     !args.no_clamp);
  } else {
    throw UsageError("unknown estimator: " + args.estimator);
  }
  print_result(result);
  return kExitOk;
}

struct SimulateArgs {
  std::optional<std::int64_t> uniform_d;
  std::string model_path;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
  if (args.uniform_d.has_value() == !args.model_path.empty()) {
    throw UsageError("give exactly one of --uniform-d and --model");
  }
  const hdte::ModelSpec model =
      args.uniform_d ? hdte::uniform_sim_model(*args.uniform_d) : hdte::load_model(args.model_path);
  const hdte::Dataset data = hdte::draw_dataset(model, args.n, {args.seed, args.stream});
  hdte::save_dataset_csv(data, args.out_path);
  std::cout << "wrote " << args.out_path << " (n=" << data.n << ", d=" << data.d << ")\n";
  return kExitOk;
}

struct PhaseArgs {
  std::string config_path;
  std::string out_path;
  int workers = 1;
  std::optional<double> overlay_C;
  std::string plotdata_prefix;
};

int run_phase(const PhaseArgs& args) {
  hdte::ExperimentConfig config = hdte::load_config(args.config_path);
  if (args.overlay_C) config.overlay = hdte::OverlaySpec{*args.overlay_C};

  hdte::ResultTable table = hdte::run_grid(config, args.workers);
  hdte::write_result_table(table, args.out_path);
  if (!args.plotdata_prefix.empty()) hdte::write_plot_series(table, args.plotdata_prefix);

  for (const auto& row : table.rows) {
    if (row.failed_reps > 0) {
      std::fprintf(stderr, "note: cell n=%" PRId64 " gamma=%g: %" PRId64
                           " repetition(s) excluded (estimator precondition)\n",
                   row.n, row.gamma, row.failed_reps);
    }
  }
  std::cout << "wrote " << args.out_path << " (" << table.rows.size() << " rows)\n";
  return kExitOk;
}

struct BoundsArgs {
  double epsilon = 0.1;
  std::int64_t n = 0;
  std::int64_t d = 0;
  double sigma_n = 0;
  std::optional<double> rate_C;
  std::optional<double> gamma;
};

int run_bounds(const BoundsArgs& args) {
  if (args.rate_C.has_value() != args.gamma.has_value()) {
    throw UsageError("--rate-c and --gamma must be given together");
  }
  const auto table =
      hdte::bound_table(args.epsilon, args.n, args.d, args.sigma_n, args.rate_C, args.gamma);
  std::cout << "name,value,epsilon,n,d,sigma_n,C,gamma,vacuous\n";
  for (const auto& report : table) {
    auto field = [&report](const char* key) -> std::string {
      auto it = report.inputs.find(key);
      return it == report.inputs.end() ? "" : fmt_value(it->second);
    };
    std::cout << report.name << ',' << fmt_value(report.value) << ',' << field("epsilon") << ','
              << field("n") << ',' << field("d") << ',' << field("sigma_n") << ',' << field("C")
              << ',' << field("gamma") << ',' << field("vacuous") << '\n';
  }
  return kExitOk;
}

struct VerifyArgs {
  std::int64_t cases = 1000;
  std::optional<std::int64_t> ustat_cases;
  std::uint64_t seed = 0x7a5e11b3c64d208full;
  std::optional<double> debug_truncate;
};

int run_verify(const VerifyArgs& args) {
  hdte::VerifyOptions options;
  options.equivalence_cases = args.cases;
  options.ustat_cases = args.ustat_cases.value_or(std::min<std::int64_t>(200, args.cases));
  options.master_seed = args.seed;
  options.truncate_pi = args.debug_truncate;

  const auto print = [](const hdte::SuiteReport& report) {
    std::printf("%s: %s (%" PRId64 " cases, max diff %.3e)\n", report.name.c_str(),
                report.passed ? "PASS" : "FAIL", report.cases, report.max_abs_diff);
    if (!report.passed) std::printf("  %s\n", report.message.c_str());
  };

  const auto equivalence = hdte::equivalence_suite(options);
  print(equivalence);
  const auto ustat = hdte::ustat_oracle_suite(options);
  print(ustat);
  return equivalence.passed && ustat.passed ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ATE/WATE estimation with a high-dimensional categorical covariate"};
  app.require_subcommand(1);

  EstimateArgs estimate_args;
  auto* estimate = app.add_subcommand("estimate", "Estimate from a dataset file");
  estimate->add_option("--data", estimate_args.data_path, "dataset CSV (header x,a,y)")
      ->required();
  estimate
      ->add_option("--estimator", estimate_args.estimator,
                   "plugin|reg|ipw|dr|homog|eta2|rho2|wate2|ate2")
      ->required()
      ->check(CLI::IsMember(
          {"plugin", "reg", "ipw", "dr", "homog", "eta2", "rho2", "wate2", "ate2"}));
  estimate->add_option("--nuisance", estimate_args.nuisance, "empirical|split|zero|file")
      ->check(CLI::IsMember({"empirical", "split", "zero", "file"}));
  estimate->add_option("--level", estimate_args.level, "confidence level (dr only)");
  estimate->add_option("--d", estimate_args.d_override, "number of categories (default: max x)");
  estimate->add_option("--model", estimate_args.model_path, "model JSON (for --nuisance zero)");
  estimate->add_option("--nuisance-file", estimate_args.nuisance_file,
                       "nuisance JSON (for --nuisance file)");
  estimate->add_option("--seed", estimate_args.seed, "seed for --nuisance split");
  estimate->add_option("--epsilon", estimate_args.epsilon, "clamp margin for wate2");
  estimate->add_flag("--no-clamp", estimate_args.no_clamp, "disable the wate2 denominator clamp");

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset and write it as CSV");
  simulate->add_option("--uniform-d", simulate_args.uniform_d,
                       "use the uniform simulation model with this many categories");
  simulate->add_option("--model", simulate_args.model_path, "model JSON file");
  simulate->add_option("--n", simulate_args.n, "number of observations")->required();
  simulate->add_option("--seed", simulate_args.seed, "master seed");
  simulate->add_option("--stream", simulate_args.stream, "stream index");
  simulate->add_option("--out", simulate_args.out_path, "output CSV path")->required();

  PhaseArgs phase_args;
  auto* phase = app.add_subcommand("phase", "Run a Monte Carlo grid from a config file");
  phase->add_option("--config", phase_args.config_path, "experiment config JSON")->required();
  phase->add_option("--out", phase_args.out_path, "output table path")->required();
  phase->add_option("--workers", phase_args.workers, "worker threads")->check(CLI::Range(1, 256));
  phase->add_option("--overlay", phase_args.overlay_C, "overlay constant C");
  phase->add_option("--plotdata", phase_args.plotdata_prefix,
                    "also write per-n series files with this prefix");

  BoundsArgs bounds_args;
  auto* bounds = app.add_subcommand("bounds", "Print the theoretical bound table");
  bounds->add_option("--epsilon", bounds_args.epsilon, "positivity margin")->required();
  bounds->add_option("--n", bounds_args.n, "sample size")->required();
  bounds->add_option("--d", bounds_args.d, "number of categories")->required();
  bounds->add_option("--sigma-n", bounds_args.sigma_n, "effect heterogeneity");
  bounds->add_option("--rate-c", bounds_args.rate_C, "rate template constant");
  bounds->add_option("--gamma", bounds_args.gamma, "rate template exponent");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Run the numerical self-check suites");
  verify->add_option("--cases", verify_args.cases, "equivalence cases")->check(CLI::PositiveNumber);
  verify->add_option("--ustat-cases", verify_args.ustat_cases, "U-statistic oracle cases");
  verify->add_option("--seed", verify_args.seed, "master seed");
  verify->add_option("--debug-truncate", verify_args.debug_truncate,
                     "truncate propensities at this margin (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*estimate) return run_estimate(estimate_args);
    if (*simulate) return run_simulate(simulate_args);
    if (*phase) return run_phase(phase_args);
    if (*bounds) return run_bounds(bounds_args);
    if (*verify) return run_verify(verify_args);
  } catch (const UsageError& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return kExitUsage;
  } catch (const hdte::ConfigError& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return kExitUsage;
  } catch (const hdte::DataError& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return kExitData;
  } catch (const std::exception& error) {
    std::fprintf(stderr, "error: %s\n", error.what());
    return kExitData;
  }
  return kExitUsage;
}
