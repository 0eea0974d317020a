// Serial reference vs OpenMP-parallel kernels. Arg 0 = serial, 1 = parallel.

#include "rgam/cv.hpp"
#include "rgam/dof.hpp"
#include "rgam/rgam.hpp"
#include "rgam/sim.hpp"

#include <benchmark/benchmark.h>

using namespace rgam;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

const ScenarioData& data() {
    static const ScenarioData d = generate_scenario(ScenarioSpec::make(ScenarioId::hier, 2.0, 7));
    return d;
}

// Spline bank plus Step-1 CV folds.
void BM_FitRgam(benchmark::State& state) {
    RgamConfig c;
    c.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(fit_rgam(data().train, c));
    state.counters["threads"] = c.execution == Execution::parallel ? parallel_threads() : 1;
}

void BM_LassoCv(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(cross_validate(data().train, make_lasso_fitter(), 10, CvMetric::deviance, 1, mode(state)));
}

void BM_DofReplicates(benchmark::State& state) {
    const Eigen::MatrixXd& x = data().train.x();
    const Eigen::MatrixXd xs = x.leftCols(20);
    DofConfig c;
    c.mu = data().train_mu;
    c.replicates = 200;
    for (auto _ : state) benchmark::DoNotOptimize(estimate_df(ols_fitter(), xs, c, mode(state)));
}

void BM_BenchCells(benchmark::State& state) {
    BenchmarkConfig c;
    c.scenarios = {ScenarioId::linear};
    c.snrs = {2.0};
    c.methods = {Method::null, Method::lasso};
    c.replicates = 4;
    c.n_test = 1000;
    c.execution = mode(state);
    for (auto _ : state) benchmark::DoNotOptimize(run_benchmark(c));
}

} // namespace

BENCHMARK(BM_FitRgam)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LassoCv)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DofReplicates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BenchCells)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
