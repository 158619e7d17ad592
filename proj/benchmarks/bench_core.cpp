#include <benchmark/benchmark.h>

#include "hdte/estimators.hpp"
#include "hdte/harness.hpp"
#include "hdte/model.hpp"
#include "hdte/sampling.hpp"

namespace {

void BM_DrawDataset(benchmark::State& state) {
  const auto d = static_cast<std::int64_t>(state.range(0));
  const hdte::ModelSpec model = hdte::uniform_sim_model(d);
  const hdte::CategoricalSampler sampler(model.p);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    auto data = hdte::draw_dataset_with(sampler, model, 10000, {42, stream++});
    benchmark::DoNotOptimize(data.records.data());
  }
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_DrawDataset)->Arg(100)->Arg(10000)->Arg(1000000);

void BM_Tabulate(benchmark::State& state) {
  const auto d = static_cast<std::int64_t>(state.range(0));
  const hdte::ModelSpec model = hdte::uniform_sim_model(d);
  const auto data = hdte::draw_dataset(model, 10000, {42, 0});
  for (auto _ : state) {
    auto stats = hdte::tabulate(data);
    benchmark::DoNotOptimize(stats.cells.data());
  }
}
BENCHMARK(BM_Tabulate)->Arg(100)->Arg(10000)->Arg(1000000);

void BM_PluginAte(benchmark::State& state) {
  const hdte::ModelSpec model = hdte::uniform_sim_model(1000);
  const auto stats = hdte::tabulate(hdte::draw_dataset(model, 10000, {42, 0}));
  for (auto _ : state) {
    auto result = hdte::plugin_ate(stats);
    benchmark::DoNotOptimize(result.value);
  }
}
BENCHMARK(BM_PluginAte);

void BM_SecondOrderEta(benchmark::State& state) {
  const auto d = static_cast<std::int64_t>(state.range(0));
  const hdte::ModelSpec model = hdte::uniform_sim_model(d);
  const auto data = hdte::draw_dataset(model, 10000, {42, 0});
  const auto nuis = hdte::NuisanceEstimates::zeroed_with_uniform_probs(d);
  for (auto _ : state) {
    auto result = hdte::second_order_eta(data, nuis);
    benchmark::DoNotOptimize(result.value);
  }
}
BENCHMARK(BM_SecondOrderEta)->Arg(100)->Arg(100000);

void BM_RunCell(benchmark::State& state) {
  const hdte::ModelSpec model = hdte::uniform_sim_model(1000);
  const double truth = hdte::population_estimands(model).ate;
  for (auto _ : state) {
    auto row = hdte::run_cell(1000, 1.0, "plugin", model, truth, 20, 42, "zero", 0.1);
    benchmark::DoNotOptimize(row.rmse);
  }
}
BENCHMARK(BM_RunCell);

}  // namespace

BENCHMARK_MAIN();
