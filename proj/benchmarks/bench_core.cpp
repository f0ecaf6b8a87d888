#include <benchmark/benchmark.h>

#include <cmath>

#include "pcbo/gp.hpp"
#include "pcbo/inner_opt.hpp"
#include "pcbo/objectives.hpp"
#include "pcbo/random.hpp"
#include "pcbo/strategies.hpp"

using namespace pcbo;

namespace {

Dataset levy_data(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  Dataset d(6);
  for (std::size_t i = 0; i < n; ++i) {
    Point x(6);
    for (auto& v : x) v = rng.uniform(-5, 5);
    d.add(x, eval_synthetic("levy6", x));
  }
  return d;
}

KernelSpec matern(double length) {
  KernelSpec k;
  k.length_scale = length;
  k.noise_variance = 1e-6;
  return k;
}

void BM_GpFit(benchmark::State& state) {
  const Dataset d = levy_data(state.range(0), 1);
  const Bounds box = Bounds::cube(6, -5, 5);
  for (auto _ : state) {
    GpPosterior gp(d, matern(0.5), box);
    benchmark::DoNotOptimize(gp.weights().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNCubed);

void BM_GpPredict(benchmark::State& state) {
  const GpPosterior gp(levy_data(state.range(0), 2), matern(0.5), Bounds::cube(6, -5, 5));
  const Point q(6, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(gp.predict(q));
}
BENCHMARK(BM_GpPredict)->Arg(64)->Arg(256);

void BM_Hyperparameters(benchmark::State& state) {
  const Dataset d = levy_data(state.range(0), 3);
  const Bounds box = Bounds::cube(6, -5, 5);
  for (auto _ : state) {
    RandomStream rng(4);
    benchmark::DoNotOptimize(optimize_hyperparams(d, matern(0.5), {}, 5, rng, box));
  }
}
BENCHMARK(BM_Hyperparameters)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_Direct(benchmark::State& state) {
  const Bounds box = Bounds::cube(state.range(0), -1, 1);
  const ScalarObjective f = [](std::span<const double> x) {
    double s = 0;
    for (double v : x) s -= (v - 0.31) * (v - 0.31);
    return s + 0.1 * std::cos(7 * x[0]);
  };
  for (auto _ : state) benchmark::DoNotOptimize(direct_maximize(f, box, 500));
}
BENCHMARK(BM_Direct)->Arg(2)->Arg(6);

void BM_GridSample(benchmark::State& state) {
  const Bounds box = Bounds::cube(3, -5, 5);
  const Dataset d = [] {
    RandomStream rng(5);
    Dataset out(3);
    for (int i = 0; i < 40; ++i) {
      const Point x = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
      out.add(x, std::sin(x[0]) + x[1] * x[2] / 25);
    }
    return out;
  }();
  const GpPosterior gp(d, matern(0.4), box);
  const std::vector<Point> grid = unit_grid(box, state.range(0));
  const GridSampler sampler(gp, grid);
  RandomStream rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng));
  state.counters["grid"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_GridSample)->Arg(6)->Arg(10);

void BM_PlanBatch(benchmark::State& state, const char* name) {
  const Objective f = make_synthetic("levy6");
  Problem problem{DesignSpace::make(f.bounds(), {0, 1, 2}), std::nullopt};
  const StrategyConfig s = make_strategy(name);
  const CampaignHistory warm = run_campaign(s, f, problem, 5, 7);
  SearchState base(6, 3);
  for (const auto& rec : warm.iterations) absorb_batch(s, problem, base, rec.proposal, rec.values);
  const SeedSequence seeds(7);
  for (auto _ : state) {
    SearchState st = base;
    benchmark::DoNotOptimize(plan_batch(s, problem, st, seeds));
  }
}
BENCHMARK_CAPTURE(BM_PlanBatch, pc_ts_ei, "pc_ts_ei")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanBatch, pc_nested_ucb, "pc_nested_ucb")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanBatch, gp_ucb_pe, "gp_ucb_pe")->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
