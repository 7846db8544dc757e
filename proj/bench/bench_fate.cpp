// Serial reference vs OpenMP rays for classify_fate, and per-A curve tracing.
#include "singhopf/diagrams.hpp"
#include "singhopf/tangency.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace singhopf;

namespace {

const ParameterSet kP{0.0015709, -0.05, 0.001, 0.1};

void fate(benchmark::State& state, bool parallel)
{
    FateOptions o;
    o.n_grid = static_cast<int>(state.range(0));
    o.parallel = parallel;
    o.workers = parallel ? omp_get_num_procs() : 1;
    for (auto _ : state) {
        const FateClassification f = classify_fate(kP, o);
        benchmark::DoNotOptimize(f.n_escaped);
    }
    state.counters["rays/s"] = benchmark::Counter(static_cast<double>(o.n_grid), benchmark::Counter::kIsIterationInvariantRate);
    state.counters["workers"] = o.workers;
}

void BM_FateSerial(benchmark::State& state)
{
    fate(state, false);
}

void BM_FateParallel(benchmark::State& state)
{
    fate(state, true);
}

void BM_PdCurve(benchmark::State& state)
{
    std::vector<double> grid;
    for (int i = 0; i < 6; ++i)
        grid.push_back(-0.07 + 0.008 * i);
    CurveOptions o;
    o.workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        const Polyline line = trace_curve(CurveKind::PD, 0.001, 0.1, grid, 0.0, 0.003, o);
        benchmark::DoNotOptimize(line.points.size());
    }
}

} // namespace

BENCHMARK(BM_FateSerial)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FateParallel)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PdCurve)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
