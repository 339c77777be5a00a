#include <benchmark/benchmark.h>

#include "plume/policy.hpp"
#include "plume/rng.hpp"
#include "plume/trainer.hpp"

using namespace plume;

namespace {

template <typename S>
typename QNet<S>::Mat random_images(const QNetArch& arch, int batch, std::uint64_t seed) {
    typename QNet<S>::Mat m(3 * arch.input_res * arch.input_res, batch);
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<S>(uniform(rng, 0.0, 1.0));
    return m;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
    const auto arch = QNetArch::make(static_cast<int>(state.range(0)));
    QNet<float> net(arch);
    net.init(1);
    const auto images = random_images<float>(arch, static_cast<int>(state.range(1)), 2);
    QNet<float>::Mat winds = QNet<float>::Mat::Constant(2, state.range(1), 0.3f);
    for (auto _ : state) {
        auto f = net.forward(images, winds, false);
        benchmark::DoNotOptimize(f.q_dir(0, 0));
    }
}
BENCHMARK(BM_Forward)->Args({32, 1})->Args({32, 64})->Args({64, 64});

static void BM_TrainStep(benchmark::State& state) {
    const auto arch = QNetArch::make(static_cast<int>(state.range(0)));
    QNet<float> online(arch), target(arch);
    online.init(1);
    target.params() = online.params();
    AdamState<float> adam;
    adam.init(arch.param_count);

    ReplayBuffer buffer(4096);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 256; ++i) {
        auto s = std::make_shared<AgentState>();
        s->res = arch.input_res;
        s->image.resize(static_cast<size_t>(3) * arch.input_res * arch.input_res);
        for (auto& v : s->image) v = static_cast<float>(uniform(rng, 0.0, 1.0));
        Transition tr;
        tr.state = s;
        tr.next_state = s;
        tr.action = {uniform_int(rng, 0, 7), uniform_int(rng, 0, 1)};
        tr.reward = static_cast<float>(uniform(rng, -5.0, 0.0));
        buffer.push(tr);
    }
    TrainHyper hp;
    hp.batch = 64;
    hp.lr = 1e-4;
    std::mt19937_64 replay_rng(11);
    for (auto _ : state) {
        const double loss = train_step<float>(online, target, buffer, adam, replay_rng, hp);
        benchmark::DoNotOptimize(loss);
    }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64);
