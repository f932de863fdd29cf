#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "cpda/analytic.hpp"
#include "cpda/explainers.hpp"
#include "cpda/patching.hpp"

namespace {

cpda::ImageTensor noise(int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  cpda::ImageTensor img(h, w, c);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

// Resampling cost of one patch: k x k crop up to the n x n frame.
void BM_ResizePatchToFrame(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const auto patch = noise(k, k, 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(cpda::bilinear_resize(patch, n, n));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_ResizePatchToFrame)->Args({20, 224})->Args({8, 64});

void BM_DistributeToContext(benchmark::State& state) {
  const auto grid = cpda::build_grid(static_cast<int>(state.range(0)), 20, 5);
  std::vector<double> r(grid.size());
  std::iota(r.begin(), r.end(), 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(cpda::distribute_to_context(grid, r));
}
BENCHMARK(BM_DistributeToContext)->Arg(64)->Arg(224);

// Full CPDA sweep with a backend that costs nothing, i.e. toolkit overhead per image.
void BM_CpdaSweepOverhead(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cpda::ConstantClassifier clf(n, {0.5});
  const auto img = noise(n, n, 3, 2);
  cpda::ExplainConfig cfg;
  cfg.patch_size = 20;
  cfg.stride = 5;
  for (auto _ : state) benchmark::DoNotOptimize(cpda::cpda_image(img, clf, cfg));
  state.counters["inferences/iter"] =
      static_cast<double>(clf.counter().inferences) / static_cast<double>(state.iterations());
}
BENCHMARK(BM_CpdaSweepOverhead)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

void BM_OcclusionSweepOverhead(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  cpda::ConstantClassifier clf(n, {0.5});
  const auto img = noise(n, n, 3, 3);
  cpda::ExplainConfig cfg;
  cfg.patch_size = 20;
  cfg.stride = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpda::pda_image_occlusion(img, clf, cfg, cpda::Filler::image_mean()));
  }
}
BENCHMARK(BM_OcclusionSweepOverhead)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
