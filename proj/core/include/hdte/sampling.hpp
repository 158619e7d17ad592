#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "hdte/model.hpp"
#include "hdte/rng.hpp"

namespace hdte {

// One observation (x, a, y); x is the 1-based category index.
struct Record {
  std::int64_t x = 0;
  std::uint8_t a = 0;
  std::uint8_t y = 0;

  friend bool operator==(const Record&, const Record&) = default;
};

struct Dataset {
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::vector<Record> records;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Per-category count table. Stored sparsely: only categories that appear in
// the data have an entry (absent categories have all-zero counts), so the
// memory footprint is O(min(n, d)) even when d vastly exceeds n.
struct SufficientStats {
  struct CategoryCounts {
    std::int64_t category = 0;  // 1-based
    std::int64_t n_x = 0;            // #{i : x_i = k}
    std::int64_t n_treated = 0;      // #{i : x_i = k, a_i = 1}
    std::int64_t n_treated_y1 = 0;   // #{i : x_i = k, a_i = 1, y_i = 1}
    std::int64_t n_untreated_y1 = 0; // #{i : x_i = k, a_i = 0, y_i = 1}
  };

  std::int64_t n = 0;
  std::int64_t d = 0;
  std::vector<CategoryCounts> cells;  // sorted by category, n_x > 0

  const CategoryCounts* find(std::int64_t category) const;
  std::int64_t count_x(std::int64_t category) const;
  std::int64_t count_x_treated(std::int64_t category) const;
  std::int64_t count_x_treated_y1(std::int64_t category) const;
  std::int64_t count_x_untreated_y1(std::int64_t category) const;
};

// Inverse-CDF sampler over a probability vector. Setup is O(d), each draw is
// O(log d); shareable across threads once built.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& p);
  // 1-based category index.
  std::int64_t draw(Xoshiro256pp& rng) const;

 private:
  std::vector<double> cumulative_;
  std::int64_t last_positive_ = 0;  // 0-based index of the last p_k > 0
};

// n i.i.d. observations: X ~ Categorical(p), A|X=k ~ Bernoulli(pi_k),
// Y|X=k,A=a ~ Bernoulli(mu_{a,k}). Deterministic given the seed.
// Throws std::invalid_argument when n == 0.
Dataset draw_dataset(const ModelSpec& model, std::int64_t n, SeedSpec seed);

// Same, reusing a prebuilt sampler (the expensive O(d) setup); produces
// byte-identical output to draw_dataset for the same inputs.
Dataset draw_dataset_with(const CategoricalSampler& sampler, const ModelSpec& model,
                          std::int64_t n, SeedSpec seed);

// Exact per-category counts. Throws std::invalid_argument when a record's x
// falls outside [1, d].
SufficientStats tabulate(const Dataset& dataset);

// The simulation-study population: p_k = 1/d, pi_k = 1/2, mu1_k = 1/2,
// mu0_k = 1/4. Its ATE is 1/4 with zero effect heterogeneity.
ModelSpec uniform_sim_model(std::int64_t d);

// Random disjoint halves of sizes (ceil(n/2), floor(n/2)); the union of the
// two halves equals the input as a multiset. Deterministic given the seed.
// Throws std::invalid_argument when n < 2.
std::pair<Dataset, Dataset> split_sample(const Dataset& dataset, SeedSpec seed);

// Delimited text with header "x,a,y", one record per line, x 1-based.
// The reader validates ranges and infers d = max(x) unless d_override is
// given; it throws DataError on malformed input.
Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::optional<std::int64_t> d_override = {});
void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace hdte
