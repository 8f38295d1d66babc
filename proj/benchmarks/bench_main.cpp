#include "coshare/allocation.hpp"
#include "coshare/mvsolver.hpp"
#include "coshare/oracle.hpp"
#include "coshare/riskmeasures.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace coshare;

namespace {

RandomVariable random_loss(const SpacePtr& space, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(2.0, 1.0);
    std::vector<double> v(space->size());
    for (auto& x : v) x = g(rng);
    return RandomVariable(space, std::move(v));
}

void BM_ExpectedShortfall(benchmark::State& state) {
    std::mt19937_64 rng(7);
    auto x = random_loss(FiniteSpace::uniform(static_cast<std::size_t>(state.range(0))), rng);
    for (auto _ : state) benchmark::DoNotOptimize(es(x, 0.99));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExpectedShortfall)->RangeMultiplier(8)->Range(8, 32768)->Complexity();

void BM_ComonotonicImprovement(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(11);
    auto space = FiniteSpace::uniform(m);
    std::vector<RandomVariable> endowments;
    for (int i = 0; i < 3; ++i) endowments.push_back(random_loss(space, rng));
    Allocation start = Allocation::autarky(endowments);
    for (auto _ : state) benchmark::DoNotOptimize(comonotonic_improvement(start));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ComonotonicImprovement)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_CappedMeanVariance(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(13);
    auto space = FiniteSpace::uniform(m);
    MVProblem prob{{2, 3, 5, 6}, {0, 0, 0, 0}, {5, 8, 3, INFINITY}, random_loss(space, rng)};
    for (auto _ : state) benchmark::DoNotOptimize(solve_capped_mv(prob));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CappedMeanVariance)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

void BM_GridOracle(benchmark::State& state) {
    auto space = FiniteSpace::uniform(3);
    RandomVariable s(space, {1, 2, 3});
    std::vector<RiskMeasureSpec> rho{ExpectedShortfall{0.2}, ExpectedShortfall{1.0 / 3}};
    const double step = 1.0 / static_cast<double>(state.range(0));
    GridSpec grid = GridSpec::box(1, 3, 0.0, 3.0, step);
    OracleOptions opts;
    opts.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(grid_minimize(s, rho, {}, grid, opts));
    state.counters["points"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_GridOracle)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_VarScenario(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(var_scenario());
}
BENCHMARK(BM_VarScenario)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
