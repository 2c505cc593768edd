#include <benchmark/benchmark.h>

#include "mjo/pcc.hpp"
#include "mjo/pipeline.hpp"

using namespace mjo;

namespace {

/// Correction throughput on the desk-scale model; the pipeline targets
/// several cases per second on one CPU core.
void BM_CorrectCases(benchmark::State& state) {
  static CorrectorModel* model = nullptr;
  static Dataset* data = nullptr;
  if (!model) {
    SyntheticConfig sc;
    sc.n_cases = 48;
    data = new Dataset(generate_synthetic(sc));
    data->split_fraction = 0.25;
    Split split = chronological_split(*data);
    UNetConfig ucfg;
    ucfg.channels = {2, 2, 4, 4};
    TrainConfig tcfg;
    tcfg.seed = 1;
    tcfg.stage1_epochs = 1;
    tcfg.stage2_epochs = 5;
    model = new CorrectorModel(train(split.train, ucfg, tcfg));
  }
  const int batch = static_cast<int>(state.range(0));
  std::vector<const AnomalyField*> fc;
  for (int i = 0; i < batch; ++i) fc.push_back(&data->cases[i].forecast);

  std::size_t corrected = 0;
  for (auto _ : state) {
    auto results = correct_batch(*model, fc);
    corrected += results.size();
    benchmark::DoNotOptimize(results.front().refined.rmm1.data());
  }
  state.counters["cases_per_s"] =
      benchmark::Counter(static_cast<double>(corrected), benchmark::Counter::kIsRate);
}

void BM_SyntheticGeneration(benchmark::State& state) {
  SyntheticConfig sc;
  sc.n_cases = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Dataset d = generate_synthetic(sc);
    benchmark::DoNotOptimize(d.cases.front().truth.values.data());
  }
}

}  // namespace

BENCHMARK(BM_CorrectCases)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SyntheticGeneration)->Arg(8)->Unit(benchmark::kMillisecond);
