#include <random>

#include <benchmark/benchmark.h>

#include "epr/layers.hpp"
#include "epr/packing.hpp"
#include "epr/saliency.hpp"
#include "epr/synthetic.hpp"
#include "epr/task_stream.hpp"

using namespace epr;

namespace {

Tensor random_tensor(const Shape& shape, std::uint64_t seed) {
  Tensor t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (float& v : t.values()) v = d(rng);
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  Rng rng(1);
  Conv2d conv(channels, channels, 3, 1, 1, false, rng);
  const Tensor x = random_tensor({10, channels, 32, 32}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, false));
}
BENCHMARK(BM_ConvForward)->Arg(3)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  Rng rng(1);
  Conv2d conv(16, 16, 3, 1, 1, false, rng);
  const Tensor x = random_tensor({10, 16, 32, 32}, 2);
  const Tensor y = conv.forward(x, true);
  const Tensor g = random_tensor(y.shape(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv.backward(g));
}
BENCHMARK(BM_ConvBackward)->Unit(benchmark::kMillisecond);

void BM_Saliency(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = 2;
  mc.width = width;
  MultiHeadModel model(mc);
  const Tensor img = random_tensor({3, width, width}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(generate_saliency(model, img, 0, 1));
}
BENCHMARK(BM_Saliency)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_LocatePatch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int stride = static_cast<int>(state.range(1));
  Grid map(width, width);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (double& v : map.values) v = d(rng);
  const int wp = patch_width(SlotRatio(1), 2, width);
  for (auto _ : state) benchmark::DoNotOptimize(locate_salient_patch(map, wp, stride));
}
BENCHMARK(BM_LocatePatch)->Args({32, 1})->Args({84, 1})->Args({224, 1})->Args({224, 3});

void BM_SgdStep(benchmark::State& state) {
  SyntheticOptions o;
  o.n_classes = 2;
  o.per_class_train = 5;
  o.per_class_test = 1;
  const TaskStream s = build_split_stream(generate_synthetic_dataset(o), 1, 2, 0);
  ModelConfig mc;
  mc.n_tasks = 1;
  mc.classes_per_task = 2;
  MultiHeadModel model(mc);
  for (auto _ : state) benchmark::DoNotOptimize(model.sgd_step(s.tasks[0].train, 0.01));
}
BENCHMARK(BM_SgdStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
