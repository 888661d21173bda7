#include <benchmark/benchmark.h>

#include "trimfmr/em.hpp"
#include "trimfmr/mixture.hpp"
#include "trimfmr/simulation.hpp"
#include "trimfmr/trimmed.hpp"

using namespace trimfmr;

namespace {

Dataset study_data(std::size_t n, double alpha0 = 0.0) {
    Rng rng(derive_seed(4242, n));
    ModelSpec spec;
    spec.n = n;
    Dataset d = generate_dataset(spec, rng);
    return alpha0 > 0.0 ? contaminate(d, ContaminationSpec{alpha0}, rng) : d;
}

void BM_RowLogDensities(benchmark::State& state) {
    const Dataset data = study_data(static_cast<std::size_t>(state.range(0)));
    const MixtureParams theta = ModelSpec{}.truth();
    for (auto _ : state) benchmark::DoNotOptimize(row_log_densities(data, theta));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RowLogDensities)->Arg(100)->Arg(1000)->Arg(10000);

void BM_EmIteration(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Dataset data = study_data(n);
    const IndexSet rows = all_rows(n);
    const MixtureParams theta = ModelSpec{}.truth();
    const auto specs = shared_penalty(PenaltySpec::scad(0.5), 2);
    for (auto _ : state) benchmark::DoNotOptimize(em_iteration(data, rows, theta, specs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmIteration)->Arg(100)->Arg(1000)->Arg(10000);

void BM_FitPenalized(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Dataset data = study_data(n);
    EmControls c;
    const auto specs = shared_penalty(PenaltySpec::lasso(0.5), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fit_penalized_fmr(data, all_rows(n), 2, specs, c));
}
BENCHMARK(BM_FitPenalized)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_FitTrimmed(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Dataset data = study_data(n, 0.05);
    EmControls c;
    TrimSpec trim;
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(fit_trimmed(data, 2, PenaltySpec::lasso(0.0), trim, c, grid));
}
BENCHMARK(BM_FitTrimmed)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
