#include <benchmark/benchmark.h>

#include "mjo/eofrmm.hpp"
#include "mjo/rng.hpp"

using namespace mjo;

namespace {

void BM_MeridionalMean(benchmark::State& state) {
  Rng rng(11);
  AnomalyField f = AnomalyField::zeros(GridSpec::tropics(), 40, 0);
  for (auto& v : f.values) v = rng.normal();
  for (auto _ : state) {
    LonProfiles p = meridional_mean(f);
    benchmark::DoNotOptimize(p.values.data());
  }
}

void BM_EofFit(benchmark::State& state) {
  const int n_cases = static_cast<int>(state.range(0));
  SyntheticConfig cfg;
  cfg.n_cases = n_cases;
  cfg.truth_amplitude = 1.0;
  cfg.noise_sigma = 0.05;
  Dataset d = generate_synthetic(cfg);
  std::vector<const AnomalyField*> truths;
  for (const auto& c : d.cases) truths.push_back(&c.truth);
  for (auto _ : state) {
    EofBasis basis = fit_eof(truths);
    benchmark::DoNotOptimize(basis.scale1);
  }
}

void BM_ProjectRmm(benchmark::State& state) {
  SyntheticConfig cfg;
  cfg.n_cases = 8;
  cfg.truth_amplitude = 1.0;
  Dataset d = generate_synthetic(cfg);
  std::vector<const AnomalyField*> truths;
  for (const auto& c : d.cases) truths.push_back(&c.truth);
  EofBasis basis = fit_eof(truths);
  LonProfiles p = meridional_mean(d.cases.front().truth);
  for (auto _ : state) {
    RmmSeries s = project_rmm(p, basis);
    benchmark::DoNotOptimize(s.rmm1.data());
  }
}

}  // namespace

BENCHMARK(BM_MeridionalMean)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EofFit)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectRmm)->Unit(benchmark::kMicrosecond);
