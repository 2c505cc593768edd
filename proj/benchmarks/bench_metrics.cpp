#include <benchmark/benchmark.h>

#include "mjo/rng.hpp"
#include "mjo/verify.hpp"

using namespace mjo;

namespace {

RmmBatch random_batch(int n_cases, int n_leads, Rng& rng) {
  RmmBatch b;
  for (int i = 0; i < n_cases; ++i) {
    RmmSeries s;
    for (int t = 0; t < n_leads; ++t) {
      s.rmm1.push_back(rng.normal());
      s.rmm2.push_back(rng.normal());
    }
    b.push_case(s, i * 3);
  }
  return b;
}

void BM_SkillReport(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(13);
  RmmBatch obs = random_batch(n, 40, rng);
  RmmBatch raw = random_batch(n, 40, rng);
  RmmBatch corr = random_batch(n, 40, rng);
  for (auto _ : state) {
    SkillReport rep = make_skill_report(obs, raw, corr);
    benchmark::DoNotOptimize(rep.skillful_corr);
  }
}

void BM_SteigerMonteCarloTrial(benchmark::State& state) {
  Rng rng(14);
  for (auto _ : state) {
    double aa = 0, bb = 0, ab = 0;
    for (int i = 0; i < 200; ++i) {
      const double a = rng.normal();
      const double b = 0.7 * a + 0.71 * rng.normal();
      aa += a * a;
      bb += b * b;
      ab += a * b;
    }
    benchmark::DoNotOptimize(ab / (std::sqrt(aa) * std::sqrt(bb)));
  }
}

void BM_PhaseComposites(benchmark::State& state) {
  Rng rng(15);
  RmmBatch obs = random_batch(200, 40, rng);
  RmmBatch raw = random_batch(200, 40, rng);
  RmmBatch corr = random_batch(200, 40, rng);
  for (auto _ : state) {
    auto comps = phase_composites(obs, raw, corr);
    benchmark::DoNotOptimize(comps[0].n_cases);
  }
}

}  // namespace

BENCHMARK(BM_SkillReport)->Arg(80)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SteigerMonteCarloTrial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PhaseComposites)->Unit(benchmark::kMicrosecond);
