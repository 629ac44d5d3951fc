#include <benchmark/benchmark.h>

#include <numeric>

#include "tvlearn/adjoint.hpp"
#include "tvlearn/dataset.hpp"
#include "tvlearn/grid_ops.hpp"
#include "tvlearn/state_solver.hpp"

using namespace tvlearn;

namespace {

TrainingSet bench_set(std::size_t size, std::size_t n, bool mixed) {
  NoiseModelSpec noise;
  noise.gaussian_sigma = mixed ? 0.005 : 0.05;
  noise.impulse_fraction = mixed ? 0.05 : 0.0;
  noise.seed = 1;
  return build_training_set(PhantomKind::ellipses, size, size, n, noise);
}

void BM_GradientDivergence(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ImageGrid u = make_phantom(PhantomKind::ellipses, n, n, 1);
  for (auto _ : state) {
    ImageGrid d = divergence(gradient(u));
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_GradientDivergence)->Arg(32)->Arg(64)->Arg(150);

void BM_StateSolveGaussian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const TrainingSet ts = bench_set(n, 1, false);
  for (auto _ : state) {
    StateSolution s = solve_state(ts[0].noisy, {1000.0}, FidelitySpec::gaussian(), StateConfig{});
    benchmark::DoNotOptimize(s.u);
    state.counters["newton"] = s.report.iterations;
  }
}
BENCHMARK(BM_StateSolveGaussian)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_StateSolveMixed(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const TrainingSet ts = bench_set(n, 1, true);
  for (auto _ : state) {
    StateSolution s = solve_state(ts[0].noisy, {50.0, 10.0}, FidelitySpec::mixed(), StateConfig{});
    benchmark::DoNotOptimize(s.u);
    state.counters["newton"] = s.report.iterations;
  }
}
BENCHMARK(BM_StateSolveMixed)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// State + adjoint for the whole batch, serial vs threaded.
void BM_BatchGradient(benchmark::State& state) {
  const TrainingSet ts = bench_set(32, 8, false);
  std::vector<std::size_t> idx(ts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  GradientOptions opts;
  opts.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    BatchGradient g = batch_gradient(ts, idx, {1000.0}, FidelitySpec::gaussian(), StateConfig{}, nullptr, opts);
    benchmark::DoNotOptimize(g.grad);
  }
}
BENCHMARK(BM_BatchGradient)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
BENCHMARK_MAIN();
