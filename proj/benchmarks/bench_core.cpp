#include "modeclust/density.hpp"
#include "modeclust/experiments.hpp"
#include "modeclust/flow.hpp"
#include "modeclust/mean_shift.hpp"
#include "modeclust/morse.hpp"
#include "modeclust/risk.hpp"

#include <benchmark/benchmark.h>

using namespace modeclust;

namespace {

std::vector<Point> two_blobs(std::size_t n, int d) {
  RngStream rng(7);
  const auto gm = two_component_mixture(d, 5.0, CovarianceLaw::identity, 1.0, 1.0, rng);
  return gm.sample(n, rng);
}

}  // namespace

static void BM_KdeEval(benchmark::State& state) {
  const auto xs = two_blobs(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  const KernelDensityEstimate kde(xs, 1.0);
  const Point x = xs.front();
  for (auto _ : state) benchmark::DoNotOptimize(kde.eval(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdeEval)->Args({100, 2})->Args({1000, 2})->Args({1000, 10})->Args({10000, 2});

static void BM_MixtureEval(benchmark::State& state) {
  RngStream rng(8);
  const int d = static_cast<int>(state.range(0));
  const auto gm = two_component_mixture(d, 5.0, CovarianceLaw::random_spd, 0.5, 2.0, rng);
  const Point x = rng.normal_vector(d);
  for (auto _ : state) benchmark::DoNotOptimize(gm.eval(x));
}
BENCHMARK(BM_MixtureEval)->Arg(2)->Arg(10);

static void BM_MeanShift(benchmark::State& state) {
  const auto xs = two_blobs(static_cast<std::size_t>(state.range(0)), 2);
  const KernelDensityEstimate kde(xs, 0.7);
  MeanShiftConfig cfg;
  cfg.bandwidth = 0.7;
  for (auto _ : state) benchmark::DoNotOptimize(run_mean_shift(kde, cfg));
}
BENCHMARK(BM_MeanShift)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_FlowToMode(benchmark::State& state) {
  const GaussianMixture gm = basins2d_mixture();
  const auto crit = find_critical_points(gm, default_critical_seeds({}, gm.means(), 3.0));
  Point x(2);
  x << 0.3, 2.5;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_flow(gm, x, {}, crit));
}
BENCHMARK(BM_FlowToMode)->Unit(benchmark::kMicrosecond);

static void BM_PairwiseLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(9);
  std::vector<int> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = static_cast<int>(rng.uniform() * 4);
    b[i] = static_cast<int>(rng.uniform() * 6);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_loss(a, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PairwiseLoss)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
