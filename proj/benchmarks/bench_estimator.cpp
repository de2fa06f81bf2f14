#include <benchmark/benchmark.h>

#include "streamcnn/compression.hpp"
#include "streamcnn/estimator.hpp"
#include "streamcnn/fixed_point.hpp"

namespace {

using namespace streamcnn;

const ModelGraph& svhn() {
  static const ModelGraph g = load_model(STREAMCNN_DATA_DIR "/models/svhn_baseline.json");
  return g;
}

void BM_Estimate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(estimate::estimate(svhn()));
}
BENCHMARK(BM_Estimate);

void BM_PruneMagnitude(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(compress::prune_magnitude(svhn(), 0.5));
}
BENCHMARK(BM_PruneMagnitude);

void BM_Ptq(benchmark::State& state) {
  const auto config = load_precision_config(STREAMCNN_DATA_DIR "/configs/autoq_mixed.json");
  for (auto _ : state) benchmark::DoNotOptimize(compress::ptq(svhn(), config));
}
BENCHMARK(BM_Ptq);

void BM_Quantize(benchmark::State& state) {
  const fx::FxFormat f{static_cast<int>(state.range(0)), 4};
  double x = -7.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fx::quantize(x, f));
    x += 0.001;
    if (x > 7.3) x = -7.3;
  }
}
BENCHMARK(BM_Quantize)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
