#include <benchmark/benchmark.h>

#include "streamcnn/instruction.hpp"
#include "streamcnn/reference.hpp"
#include "streamcnn/stream_engine.hpp"

namespace {

using namespace streamcnn;

const ModelGraph& svhn() {
  static const ModelGraph g = load_model(STREAMCNN_DATA_DIR "/models/svhn_baseline.json");
  return g;
}

Tensor svhn_input() {
  Tensor x = random_image(svhn().input_shape, 7);
  for (double& v : x.values()) v /= 255.0;
  return x;
}

void BM_DirectSvhn(benchmark::State& state) {
  const auto mode = static_cast<ArithMode>(state.range(0));
  const Tensor x = svhn_input();
  for (auto _ : state) benchmark::DoNotOptimize(reference::run_direct(svhn(), x, mode));
}
BENCHMARK(BM_DirectSvhn)->Arg(static_cast<int>(ArithMode::Real))->Arg(static_cast<int>(ArithMode::Fixed));

void BM_StreamSvhn(benchmark::State& state) {
  const auto mode = static_cast<ArithMode>(state.range(0));
  stream::StreamOptions options;
  options.scheduling = static_cast<stream::SchedulingMode>(state.range(1));
  const Tensor x = svhn_input();
  for (auto _ : state) benchmark::DoNotOptimize(stream::run_stream(svhn(), x, mode, options));
}
BENCHMARK(BM_StreamSvhn)
    ->Args({static_cast<int>(ArithMode::Real), static_cast<int>(stream::SchedulingMode::Cooperative)})
    ->Args({static_cast<int>(ArithMode::Fixed), static_cast<int>(stream::SchedulingMode::Cooperative)})
    ->Args({static_cast<int>(ArithMode::Fixed), static_cast<int>(stream::SchedulingMode::Threaded)});

void BM_ConvStream(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  Layer conv = Layer::conv2d("conv", 3, 16);
  conv.weights.assign(3 * 3 * 8 * 16, 0.125);
  const Shape shape{hw, hw, 8};
  Tensor x(shape, 0.5);
  const auto items = stream::to_stream(x);
  const auto ia = stream::build_instruction_array(hw, hw, 3, 1, Padding::Valid, true);
  for (auto _ : state) benchmark::DoNotOptimize(stream::conv2d_stream(items, shape, conv, ia));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * hw * hw));
}
BENCHMARK(BM_ConvStream)->Arg(16)->Arg(32)->Arg(64);

void BM_InstructionArray(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const bool compress = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(stream::build_instruction_array(hw, hw, 3, 1, Padding::Same, compress));
}
BENCHMARK(BM_InstructionArray)->Args({64, 0})->Args({64, 1})->Args({256, 0})->Args({256, 1});

}  // namespace
