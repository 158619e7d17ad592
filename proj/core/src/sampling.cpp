#include "hdte/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hdte/errors.hpp"

namespace hdte {

const SufficientStats::CategoryCounts* SufficientStats::find(std::int64_t category) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), category,
                             [](const CategoryCounts& cell, std::int64_t k) {
                               return cell.category < k;
                             });
  if (it == cells.end() || it->category != category) return nullptr;
  return &*it;
}

std::int64_t SufficientStats::count_x(std::int64_t category) const {
  const auto* cell = find(category);
  return cell ? cell->n_x : 0;
}

std::int64_t SufficientStats::count_x_treated(std::int64_t category) const {
  const auto* cell = find(category);
  return cell ? cell->n_treated : 0;
}

std::int64_t SufficientStats::count_x_treated_y1(std::int64_t category) const {
  const auto* cell = find(category);
  return cell ? cell->n_treated_y1 : 0;
}

std::int64_t SufficientStats::count_x_untreated_y1(std::int64_t category) const {
  const auto* cell = find(category);
  return cell ? cell->n_untreated_y1 : 0;
}

CategoricalSampler::CategoricalSampler(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("sampler: empty probability vector");
  cumulative_.resize(p.size());
  double running = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    running += p[j];
    cumulative_[j] = running;
    if (p[j] > 0) last_positive_ = static_cast<std::int64_t>(j);
  }
}

std::int64_t CategoricalSampler::draw(Xoshiro256pp& rng) const {
  const double u = rng.next_unit();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  std::int64_t idx = it == cumulative_.end() ? last_positive_
                                             : static_cast<std::int64_t>(it - cumulative_.begin());
  return idx + 1;
}

Dataset draw_dataset_with(const CategoricalSampler& sampler, const ModelSpec& model,
                          std::int64_t n, SeedSpec seed) {
  if (n <= 0) throw std::invalid_argument("draw_dataset: n must be positive");
  Xoshiro256pp rng(seed);
  Dataset data;
  data.n = n;
  data.d = model.d;
  data.records.resize(static_cast<std::size_t>(n));
  for (auto& record : data.records) {
    const std::int64_t k = sampler.draw(rng);
    const auto j = static_cast<std::size_t>(k - 1);
    record.x = k;
    record.a = rng.next_unit() < model.pi[j] ? 1 : 0;
    const double mu = record.a ? model.mu1[j] : model.mu0[j];
    record.y = rng.next_unit() < mu ? 1 : 0;
  }
  return data;
}

Dataset draw_dataset(const ModelSpec& model, std::int64_t n, SeedSpec seed) {
  CategoricalSampler sampler(model.p);
  return draw_dataset_with(sampler, model, n, seed);
}

SufficientStats tabulate(const Dataset& dataset) {
  SufficientStats stats;
  stats.n = dataset.n;
  stats.d = dataset.d;
  for (const Record& record : dataset.records) {
    if (record.x < 1 || record.x > dataset.d) {
      throw std::invalid_argument("tabulate: record category outside [1, d]");
    }
  }

  // Dense counting when d is comparable to n, otherwise sort-and-aggregate so
  // the cost never depends on d.
  if (dataset.d <= 4 * dataset.n) {
    const auto d = static_cast<std::size_t>(dataset.d);
    std::vector<std::int64_t> n_x(d, 0), n_t(d, 0), n_t1(d, 0), n_u1(d, 0);
    for (const Record& record : dataset.records) {
      const auto j = static_cast<std::size_t>(record.x - 1);
      ++n_x[j];
      if (record.a) {
        ++n_t[j];
        n_t1[j] += record.y;
      } else {
        n_u1[j] += record.y;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (n_x[j] == 0) continue;
      stats.cells.push_back({static_cast<std::int64_t>(j) + 1, n_x[j], n_t[j], n_t1[j], n_u1[j]});
    }
    return stats;
  }

  std::vector<Record> sorted = dataset.records;
  std::sort(sorted.begin(), sorted.end(),
            [](const Record& lhs, const Record& rhs) { return lhs.x < rhs.x; });
  for (const Record& record : sorted) {
    if (stats.cells.empty() || stats.cells.back().category != record.x) {
      stats.cells.push_back({record.x, 0, 0, 0, 0});
    }
    auto& cell = stats.cells.back();
    ++cell.n_x;
    if (record.a) {
      ++cell.n_treated;
      cell.n_treated_y1 += record.y;
    } else {
      cell.n_untreated_y1 += record.y;
    }
  }
  return stats;
}

ModelSpec uniform_sim_model(std::int64_t d) {
  if (d < 1) throw std::invalid_argument("uniform_sim_model: d must be >= 1");
  ModelSpec model;
  model.d = d;
  const auto size = static_cast<std::size_t>(d);
  model.p.assign(size, 1.0 / static_cast<double>(d));
  model.pi.assign(size, 0.5);
  model.mu1.assign(size, 0.5);
  model.mu0.assign(size, 0.25);
  return model;
}

std::pair<Dataset, Dataset> split_sample(const Dataset& dataset, SeedSpec seed) {
  if (dataset.n < 2) throw std::invalid_argument("split_sample: n must be >= 2");
  std::vector<std::int64_t> order(static_cast<std::size_t>(dataset.n));
  std::iota(order.begin(), order.end(), 0);
  Xoshiro256pp rng(seed);
  // Fisher-Yates; deterministic sizes (ceil(n/2), floor(n/2)) by construction.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  const auto first_size = static_cast<std::size_t>((dataset.n + 1) / 2);
  std::pair<Dataset, Dataset> halves;
  halves.first.d = halves.second.d = dataset.d;
  halves.first.n = static_cast<std::int64_t>(first_size);
  halves.second.n = dataset.n - halves.first.n;
  halves.first.records.reserve(first_size);
  halves.second.records.reserve(order.size() - first_size);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Record& record = dataset.records[static_cast<std::size_t>(order[i])];
    (i < first_size ? halves.first : halves.second).records.push_back(record);
  }
  return halves;
}

namespace {

std::int64_t parse_field(std::string_view text, const char* what, std::int64_t line_no) {
  std::int64_t value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DataError("dataset line " + std::to_string(line_no) + ": bad " + what + " field");
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& path,
                         std::optional<std::int64_t> d_override) {
  std::ifstream input(path);
  if (!input) throw DataError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(input, line)) throw DataError("dataset file is empty: " + path.string());
  strip_cr(line);
  if (line != "x,a,y") throw DataError("dataset header must be 'x,a,y', got '" + line + "'");

  Dataset data;
  std::int64_t max_x = 0;
  std::int64_t line_no = 1;
  while (std::getline(input, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw DataError("dataset line " + std::to_string(line_no) + ": expected 'x,a,y'");
    }
    std::string_view view(line);
    const std::int64_t x = parse_field(view.substr(0, c1), "x", line_no);
    const std::int64_t a = parse_field(view.substr(c1 + 1, c2 - c1 - 1), "a", line_no);
    const std::int64_t y = parse_field(view.substr(c2 + 1), "y", line_no);
    if (x < 1) throw DataError("dataset line " + std::to_string(line_no) + ": x must be >= 1");
    if (a != 0 && a != 1) {
      throw DataError("dataset line " + std::to_string(line_no) + ": a must be 0 or 1");
    }
    if (y != 0 && y != 1) {
      throw DataError("dataset line " + std::to_string(line_no) + ": y must be 0 or 1");
    }
    max_x = std::max(max_x, x);
    data.records.push_back({x, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(y)});
  }
  if (data.records.empty()) throw DataError("dataset has no records: " + path.string());
  data.n = static_cast<std::int64_t>(data.records.size());
  data.d = d_override.value_or(max_x);
  if (data.d < max_x) {
    throw DataError("dataset contains category " + std::to_string(max_x) + " > d = " +
                    std::to_string(data.d));
  }
  return data;
}

void save_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream output(path);
  if (!output) throw DataError("cannot write dataset file: " + path.string());
  output << "x,a,y\n";
  for (const Record& record : dataset.records) {
    output << record.x << ',' << int{record.a} << ',' << int{record.y} << '\n';
  }
}

}  // namespace hdte
