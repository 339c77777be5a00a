#include <benchmark/benchmark.h>

#include <random>

#include "plume/estimator.hpp"
#include "plume/rng.hpp"

using namespace plume;

namespace {

KernelParams bench_kernel() {
    KernelParams k;
    k.lambda = 2.0;
    k.ell = 1500.0;
    k.beta0 = 1.0;
    k.beta1 = 2e-6;
    k.beta2 = 0.1;
    return k;
}

GprModel model_with(int points, std::uint64_t seed) {
    GprModel m(bench_kernel(), 24, 35.0);
    std::mt19937_64 rng(seed);
    std::vector<SampleSet> sets;
    const int per_slot = 10;
    for (int slot = 1; points > 0; ++slot) {
        SampleSet s{0, slot, {}};
        for (int i = 0; i < std::min(points, per_slot); ++i)
            s.records.push_back({{uniform(rng, 0, 12800), uniform(rng, 0, 12800)},
                                 slot * 1800.0 - uniform(rng, 0, 1800),
                                 35.0 - uniform(rng, 0, 10)});
        points -= static_cast<int>(s.records.size());
        sets.push_back(std::move(s));
        m.update({&sets.back(), 1}, slot);
    }
    return m;
}

}  // namespace

static void BM_GprUpdate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto m = model_with(n, 42);
    SampleSet fresh{0, 1000, {}};
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i)
        fresh.records.push_back({{uniform(rng, 0, 12800), uniform(rng, 0, 12800)}, 1000 * 1800.0, 30.0});
    for (auto _ : state) {
        GprModel copy = m;
        copy.update({&fresh, 1}, 1000);
        benchmark::DoNotOptimize(copy.size());
    }
}
BENCHMARK(BM_GprUpdate)->Arg(120)->Arg(240)->Arg(480);

static void BM_PosteriorGrid(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto m = model_with(n, 42);
    const auto dom = Domain::coastal(64, 64, 200.0);
    for (auto _ : state) {
        auto g = m.posterior_mean_grid(dom, 24 * 1800.0);
        benchmark::DoNotOptimize(g.at(0, 0));
    }
}
BENCHMARK(BM_PosteriorGrid)->Arg(120)->Arg(240)->Arg(480);
