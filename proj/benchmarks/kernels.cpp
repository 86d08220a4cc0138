#include <benchmark/benchmark.h>

#include "kaczmarz/multirhs.hpp"
#include "kaczmarz/problems.hpp"
#include "kaczmarz/solvers.hpp"

using namespace kaczmarz;

namespace {

const ProblemInstance& gaussian()
{
    static const ProblemInstance p = gen_gaussian(5000, 500, 10, 1);
    return p;
}

} // namespace

static void BM_SimpleRandomSample(benchmark::State& state)
{
    RngStream rng(1);
    const double eta = static_cast<double>(state.range(0)) / 100.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simple_random_sample(5000, eta, rng));
    }
}
BENCHMARK(BM_SimpleRandomSample)->Arg(1)->Arg(10)->Arg(50);

static void BM_ScoreRows(benchmark::State& state)
{
    const ProblemInstance& p = gaussian();
    RngStream rng(2);
    const Vector x(500, 0.0);
    const IndexSet omega = simple_random_sample(5000, static_cast<double>(state.range(0)) / 100.0, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_rows(p.a, p.rhs(0), x, omega));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(omega.size()));
}
BENCHMARK(BM_ScoreRows)->Arg(1)->Arg(10)->Arg(100);

static void BM_ApplyBlockPinv(benchmark::State& state)
{
    const ProblemInstance& p = gaussian();
    std::vector<std::size_t> rows(static_cast<std::size_t>(state.range(0)));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        rows[k] = 7 * k;
    }
    const IndexSet j = IndexSet::from_sorted(rows);
    const Vector r(rows.size(), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_block_pinv(p.a, j, r));
    }
}
BENCHMARK(BM_ApplyBlockPinv)->Arg(1)->Arg(10)->Arg(50)->Arg(200);

static void BM_StepSrbkSampled(benchmark::State& state)
{
    const ProblemInstance& p = gaussian();
    SimpleRandomSampler sampler(5000, 0.1);
    RngStream rng(3);
    IterateState s{Vector(500, 0.0), 0};
    const auto k_max = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_srbk_sampled(p.a, p.rhs(0), s, k_max, sampler, rng));
    }
}
BENCHMARK(BM_StepSrbkSampled)->Arg(10)->Arg(50);

static void BM_StepGbk(benchmark::State& state)
{
    const ProblemInstance& p = gaussian();
    IterateState s{Vector(500, 0.0), 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_gbk(p.a, p.rhs(0), s));
    }
}
BENCHMARK(BM_StepGbk);

static void BM_StepMultiRhs(benchmark::State& state)
{
    const ProblemInstance& p = gaussian();
    SimpleRandomSampler sampler(5000, 0.01);
    RngStream rng(4);
    MultiState s{DenseColMajor(500, 10), 0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(step_multirhs(p.a, p.b, s, sampler, rng));
    }
}
BENCHMARK(BM_StepMultiRhs);

BENCHMARK_MAIN();
