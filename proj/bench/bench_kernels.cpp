// Parallel kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include "spc/parallel.hpp"
#include "spc/problems.hpp"
#include "spc/reference.hpp"

namespace {

using namespace spc;

struct Fixture {
  ManufacturedProblem prob = example1();
  FemSystem sys;
  TimeGrid grid;
  Scheme scheme;
  Trajectory control;
  BrownianEnsemble ensemble;

  explicit Fixture(int cells, int paths)
      : sys(assemble(prob.make_mesh(cells))),
        grid(make_time_grid(1.0, cells)),
        scheme(prob.spec, sys, grid),
        control(scheme.zero_control()),
        ensemble(BrownianEnsemble::sample(paths, grid, 7)) {}
};

void BM_ForwardPaths(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    double sink = 0.0;
    f.scheme.visit_paths(f.control, f.ensemble, [&](int p, const Trajectory& x) {
      if (p == 0) sink = x[f.grid.steps][0];
    });
    benchmark::DoNotOptimize(sink);
  }
  state.counters["threads"] = num_threads();
}

void BM_ForwardPathsReference(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::forward_paths(f.scheme, f.control, f.ensemble));
}

void BM_Sample(benchmark::State& state) {
  const TimeGrid grid = make_time_grid(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(BrownianEnsemble::sample(static_cast<int>(state.range(1)), grid, 7));
}

void BM_SampleReference(benchmark::State& state) {
  const TimeGrid grid = make_time_grid(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::sample(static_cast<int>(state.range(1)), grid, 7));
}

void lsmc_inputs(int paths, int nodes, BrownianEnsemble& e, std::vector<Vector>& payoff) {
  const TimeGrid grid = make_time_grid(1.0, 40);
  e = BrownianEnsemble::sample(paths, grid, 3);
  payoff.assign(paths, Vector::Zero(nodes));
  for (int p = 0; p < paths; ++p)
    for (int i = 0; i < nodes; ++i) payoff[p][i] = (1.0 + i) * e.w(p, 21) + e.increment(p, 20);
}

void BM_Lsmc(benchmark::State& state) {
  BrownianEnsemble e = BrownianEnsemble::zeros(1, make_time_grid(1.0, 1));
  std::vector<Vector> payoff;
  lsmc_inputs(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), e, payoff);
  for (auto _ : state) benchmark::DoNotOptimize(lsmc_z_estimate(e, 20, payoff, ZEstimator::centered));
}

void BM_LsmcReference(benchmark::State& state) {
  BrownianEnsemble e = BrownianEnsemble::zeros(1, make_time_grid(1.0, 1));
  std::vector<Vector> payoff;
  lsmc_inputs(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), e, payoff);
  for (auto _ : state) benchmark::DoNotOptimize(reference::lsmc_z_estimate(e, 20, payoff, ZEstimator::centered));
}

}  // namespace

BENCHMARK(BM_ForwardPaths)->Args({40, 2000})->Args({70, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardPathsReference)->Args({40, 2000})->Args({70, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sample)->Args({70, 10000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleReference)->Args({70, 10000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Lsmc)->Args({10000, 39})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LsmcReference)->Args({10000, 39})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
