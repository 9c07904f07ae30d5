#include <benchmark/benchmark.h>

#include "acdnet/acdconv.hpp"
#include "acdnet/dataset.hpp"
#include "acdnet/network.hpp"
#include "acdnet/ops.hpp"
#include "acdnet/training.hpp"

using namespace acdnet;

static void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const Tensor x = random_uniform({2, c, hw, 2 * hw}, rng, -1, 1);
  const Tensor w = random_uniform({c, c, 3, 3}, rng, -0.1, 0.1);
  const Tensor b = random_uniform({c, 1, 1, 1}, rng, -0.1, 0.1);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, Conv2dOptions{}));
}
BENCHMARK(BM_Conv2d)->Args({16, 32})->Args({32, 16})->Args({64, 8})->Unit(benchmark::kMicrosecond);

static void BM_Pad(benchmark::State& state) {
  Rng rng(2);
  const Tensor x = random_uniform({2, 32, 16, 32}, rng, -1, 1);
  const auto mode = static_cast<PadMode>(state.range(0));
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(pad(x, PadSpec{2, 2, 4, 4, mode}));
}
BENCHMARK(BM_Pad)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

static void BM_AcdConvForward(benchmark::State& state) {
  Rng rng(3);
  ACDConvConfig cfg;
  cfg.in_channels = cfg.out_channels = 32;
  cfg.strategy = static_cast<FusionStrategy>(state.range(0));
  cfg.rows = 16;
  const auto p = ACDConvParams::create(cfg, rng);
  const Tensor x = random_uniform({2, 32, 16, 32}, rng, -1, 1);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(acdconv_forward(x, p, PadMode::Circular));
  state.SetLabel(std::string(to_string(cfg.strategy)));
}
BENCHMARK(BM_AcdConvForward)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

static void BM_ModelForward(benchmark::State& state) {
  const Model m = Model::build(NetConfig{}, 4);
  Rng rng(4);
  const Tensor x = random_uniform({1, 3, 64, 128}, rng, -0.5, 0.5);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x).d3);
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const auto frames = synthesize_frames(2, 5, 64, 128);
  const Model m = Model::build(NetConfig{}, 5);
  const PanoFrame* batch[] = {&frames[0], &frames[1]};
  for (auto _ : state) {
    const Tensor loss = batch_loss(m, batch);
    backward(loss);
    for (auto& p : m.parameters()) p.zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
