#include <random>

#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "drpan/metrics.hpp"
#include "drpan/models.hpp"
#include "drpan/region_proposal.hpp"

using namespace drpan;

namespace {

std::vector<double> random_cells(int size) {
  std::mt19937_64 rng(size);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> v(static_cast<std::size_t>(size) * size);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_FindMinWindow(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int window = static_cast<int>(state.range(1));
  const ScoreMap map(size, random_cells(size));
  for (auto _ : state) benchmark::DoNotOptimize(find_min_window(map, window));
}
BENCHMARK(BM_FindMinWindow)->Args({30, 15})->Args({62, 8})->Args({128, 32});

// Naive per-window double loop, for comparison.
void BM_BruteForceWindow(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const int w = static_cast<int>(state.range(1));
  const auto cells = random_cells(size);
  for (auto _ : state) {
    double best = 1e300;
    for (int r = 0; r + w <= size; ++r) {
      for (int c = 0; c + w <= size; ++c) {
        double s = 0.0;
        for (int i = 0; i < w; ++i) {
          for (int j = 0; j < w; ++j) s += cells[static_cast<std::size_t>(r + i) * size + c + j];
        }
        best = std::min(best, s);
      }
    }
    benchmark::DoNotOptimize(best);
  }
}
BENCHMARK(BM_BruteForceWindow)->Args({30, 15})->Args({62, 8})->Args({128, 32});

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 255);
  metrics::Image a(3, n, n, 0.0);
  metrics::Image b(3, n, n, 0.0);
  for (auto& p : a.pixels) p = u(rng);
  for (auto& p : b.pixels) p = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_GeneratorForward(benchmark::State& state) {
  torch::NoGradGuard no_grad;
  GeneratorSpec spec;
  spec.base_width = static_cast<int>(state.range(1));
  Generator g(spec);
  g->eval();
  const int n = static_cast<int>(state.range(0));
  const auto x = torch::zeros({1, 3, n, n});
  for (auto _ : state) benchmark::DoNotOptimize(g->forward(x));
}
BENCHMARK(BM_GeneratorForward)->Args({64, 16})->Args({64, 64})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
