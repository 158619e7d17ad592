#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hdte {

// Self-check suites behind the `verify` CLI subcommand. The equivalence suite
// draws randomized datasets (including ones with empty arms) and asserts that
// plug-in, regression, IPW and DR estimates with same-sample empirical
// nuisances coincide. The U-statistic suite recomputes every second-order
// estimator with a naive O(n^2) pair sum, written directly from the
// definition, and compares it against the aggregated implementation.
struct VerifyOptions {
  std::int64_t equivalence_cases = 1000;
  std::int64_t ustat_cases = 200;
  std::uint64_t master_seed = 0x7a5e11b3c64d208full;
  double tolerance = 1e-10;
  // Debug switch: truncate propensities inside IPW/DR at this margin. This
  // intentionally breaks the equivalence property (negative control).
  std::optional<double> truncate_pi;
};

struct SuiteReport {
  std::string name;
  bool passed = false;
  std::int64_t cases = 0;
  double max_abs_diff = 0;
  // Stream index of the first offending dataset, for reproduction.
  std::optional<std::uint64_t> failing_stream;
  std::string message;
};

SuiteReport equivalence_suite(const VerifyOptions& options);
SuiteReport ustat_oracle_suite(const VerifyOptions& options);

}  // namespace hdte
