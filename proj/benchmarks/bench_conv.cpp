#include <benchmark/benchmark.h>

#include "mjo/rng.hpp"
#include "mjo/tensor.hpp"

using namespace mjo;
using namespace mjo::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor::from_values(std::move(shape), std::move(v), requires_grad);
}

void BM_Conv3dForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const int channels = static_cast<int>(state.range(1));
  Rng rng(7);
  Conv3dSpec spec;
  spec.in_channels = 3;
  spec.out_channels = channels;
  spec.kt = 3;
  spec.kh = 5;
  spec.kw = 7;
  Tensor input = random_tensor({batch, 3, 40, 17, 144}, rng);
  Tensor w = random_tensor({channels, 3, 3, 5, 7}, rng);
  Tensor b = random_tensor({channels}, rng);
  for (auto _ : state) {
    Tensor out = conv3d(input, spec, w, b);
    benchmark::DoNotOptimize(out.values().data());
  }
  const double macs = static_cast<double>(batch) * channels * 3 * 40 * 17 * 144 * (3 * 5 * 7);
  state.counters["gmacs_per_s"] =
      benchmark::Counter(macs * static_cast<double>(state.iterations()) / 1e9,
                         benchmark::Counter::kIsRate);
}

void BM_Conv3dForwardBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Rng rng(8);
  Conv3dSpec spec;
  spec.in_channels = 3;
  spec.out_channels = 4;
  spec.kt = 3;
  spec.kh = 5;
  spec.kw = 7;
  Tensor w = random_tensor({4, 3, 3, 5, 7}, rng, true);
  Tensor b = random_tensor({4}, rng, true);
  Tensor input = random_tensor({batch, 3, 40, 17, 144}, rng);
  for (auto _ : state) {
    Tensor loss = mean_all(conv3d(input, spec, w, b));
    loss.backward();
    w.zero_grad();
    b.zero_grad();
    benchmark::DoNotOptimize(loss.item());
  }
}

}  // namespace

BENCHMARK(BM_Conv3dForward)->Args({1, 4})->Args({8, 4})->Args({8, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3dForwardBackward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);
