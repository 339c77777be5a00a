#include <benchmark/benchmark.h>

#include "plume/world.hpp"

using namespace plume;

static void BM_GenerateSequence(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto dom = Domain::coastal(n, n, 200.0);
    SynthParams params;
    for (auto _ : state) {
        auto seq = generate_sequence(params, dom, 76);
        benchmark::DoNotOptimize(seq.frames.back().salinity.at(0, 0));
    }
}
BENCHMARK(BM_GenerateSequence)->Arg(32)->Arg(64);

static void BM_SampleSalinity(benchmark::State& state) {
    const auto dom = Domain::coastal(64, 64, 200.0);
    auto seq = generate_sequence(SynthParams{}, dom, 76);
    std::mt19937_64 rng(1);
    double t = 0;
    for (auto _ : state) {
        const double y = sample_salinity(seq, {6000.0, 6000.0}, t, 0.1, rng);
        benchmark::DoNotOptimize(y);
        t = t < seq.last_time_s() - 60 ? t + 60 : 0.0;
    }
}
BENCHMARK(BM_SampleSalinity);
