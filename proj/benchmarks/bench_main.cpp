// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "cgnerf/condition.hpp"
#include "cgnerf/discriminator.hpp"
#include "cgnerf/generator.hpp"
#include "cgnerf/ops.hpp"

namespace {

using namespace cgnerf;

Tensor random_tensor(Shape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::vector<double> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v));
}

Precision precision_arg(const benchmark::State& state) {
  return state.range(0) == 0 ? Precision::kExact64 : Precision::kFast32;
}

void BM_Linear(benchmark::State& state) {
  PrecisionScope scope(precision_arg(state));
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({4096, 64}, rng), w = random_tensor({64, 64}, rng), b = random_tensor({64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linear(x, w, b));
  state.SetItemsProcessed(state.iterations() * 4096);
}
BENCHMARK(BM_Linear)->Arg(0)->Arg(1);

void BM_ModulatedSin(benchmark::State& state) {
  PrecisionScope scope(precision_arg(state));
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({4096, 64}, rng), g = random_tensor({64}, rng), b = random_tensor({64}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(modulated_sin(x, g, b));
  state.SetItemsProcessed(state.iterations() * 4096 * 64);
}
BENCHMARK(BM_ModulatedSin)->Arg(0)->Arg(1);

void BM_VolumeRender(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Tensor sigma = relu(random_tensor({256, 12}, rng));
  const Tensor deltas = Tensor::full({256, 12}, 0.08);
  const Tensor feats = random_tensor({256, 12, 32}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(volume_render(sigma, deltas, feats));
}
BENCHMARK(BM_VolumeRender);

void BM_Conv2dStride2(benchmark::State& state) {
  PrecisionScope scope(precision_arg(state));
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({16, 32, 32}, rng), w = random_tensor({32, 16, 4, 4}, rng),
               b = random_tensor({32}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, 2, 1));
}
BENCHMARK(BM_Conv2dStride2)->Arg(0)->Arg(1);

void BM_GeneratorForward(benchmark::State& state) {
  PrecisionScope scope(precision_arg(state));
  NoGradScope no_grad;
  const GeneratorConfig config;
  const Generator gen(config, 5);
  std::mt19937_64 rng(6);
  const GlobalFeature c{std::vector<double>(static_cast<std::size_t>(config.latent.condition), 0.1)};
  const NoiseCodes z = sample_noise(config.latent.shape, config.latent.appearance, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gen.generate(make_pose(0.1, 1.5), c, z, rng));
}
BENCHMARK(BM_GeneratorForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GeneratorBackward(benchmark::State& state) {
  PrecisionScope scope(precision_arg(state));
  const GeneratorConfig config;
  Generator gen(config, 7);
  std::mt19937_64 rng(8);
  const GlobalFeature c{std::vector<double>(static_cast<std::size_t>(config.latent.condition), 0.1)};
  const NoiseCodes z = sample_noise(config.latent.shape, config.latent.appearance, rng);
  const auto params = gen.parameters().tensors();
  for (auto _ : state) {
    const Tensor image = gen.generate(make_pose(0.1, 1.5), c, z, rng);
    benchmark::DoNotOptimize(grad(mean(image), params));
  }
}
BENCHMARK(BM_GeneratorBackward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  cgnerf::tune_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
