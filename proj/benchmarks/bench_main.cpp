// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "msmt/data_synth.hpp"
#include "msmt/metrics.hpp"
#include "msmt/model.hpp"
#include "msmt/sdm.hpp"

using namespace msmt;

namespace {

Tensor noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(numel_of(shape));
  for (auto& e : v) e = d(rng);
  return Tensor::from(shape, std::move(v));
}

void BM_Conv2d(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  Tensor x = noise({side, side, channels}, 1);
  Tensor k = noise({3, 3, channels, channels}, 2);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side * channels * channels * 9));
}
BENCHMARK(BM_Conv2d)->Args({16, 8})->Args({32, 8})->Args({32, 32})->Args({64, 16});

void BM_SdmPass(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto cells = static_cast<std::size_t>(state.range(1));
  ParamInit init(3);
  SdmParams p = SdmParams::create(init, 16, 8, 16, cells);
  Tensor r = noise({side, side, 8}, 4), w = noise({7, 16}, 5);
  const GridSpec grid = GridSpec::make(side, cells);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(run_sdm(r, w, r, grid, p).output.features);
}
BENCHMARK(BM_SdmPass)->Args({16, 4})->Args({16, 16})->Args({32, 8});

void BM_GeneratorForward(benchmark::State& state) {
  Config c = Config::desk();
  c.head_count = static_cast<std::size_t>(state.range(0));
  const Model m = build_model(c, 17);
  const auto ids = scene_vocabulary().encode("a small green triangle at the right");
  std::mt19937_64 rng(6);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(m.generator.forward(ids, rng).images.back());
}
BENCHMARK(BM_GeneratorForward)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

// forward plus backward through every generator tensor, one caption
void BM_GeneratorBackward(benchmark::State& state) {
  const Model m = build_model(Config::desk(), 17);
  const auto ids = scene_vocabulary().encode("a large blue square at the top");
  ParamList params = m.generator_params();
  std::mt19937_64 rng(7);
  for (auto _ : state) {
    for (auto& p : params) p.tensor.zero_grad();
    auto out = m.generator.forward(ids, rng);
    Tensor loss = add(mean(out.images[0]), mean(out.images[1]));
    loss.backward();
    benchmark::DoNotOptimize(params.front().tensor.grad().data());
  }
}
BENCHMARK(BM_GeneratorBackward)->Unit(benchmark::kMillisecond);

void BM_FeatureExtract(benchmark::State& state) {
  FeatureExtractor f(1234);
  Tensor img = render({ShapeKind::Square, Color::Yellow, SizeKind::Large, Position::Left}, 32);
  for (auto _ : state) benchmark::DoNotOptimize(f.extract(img));
}
BENCHMARK(BM_FeatureExtract);

}  // namespace
BENCHMARK_MAIN();
