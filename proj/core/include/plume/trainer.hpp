#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "plume/checkpoint.hpp"
#include "plume/episode.hpp"

namespace plume {

struct TrainHyper {
    long episodes = 6500;
    long pure_explore = 1500;
    double final_epsilon = 0.05;
    double lr = 1e-4;
    double gamma = 0.9;
    double tau = 0.005;
    int batch = 64;
    size_t replay_capacity = 100000;
    int train_every = 1;  // environment slots per gradient step
    long checkpoint_every = 200;

    std::uint64_t init_seed = 7;
    std::uint64_t replay_seed = 11;
    std::uint64_t explore_seed = 13;
    std::uint64_t world_seed_base = 1000;
    std::uint64_t noise_seed_base = 5000;

    void validate() const;
};

/// Synthetic world recipe for episode generation.
struct WorldSpec {
    SynthParams params;
    Domain domain;
};

/// Generates the per-episode sequence (num_slots + 1 frames) with the given
/// world seed.
std::shared_ptr<const FieldSequence> make_world(const WorldSpec& spec, int num_slots,
                                                std::uint64_t seed);

/// Per-head Bellman targets from the target network; terminal transitions
/// collapse to the reward.
template <typename S>
void td_targets(const QNet<S>& target, const typename QNet<S>::Mat& next_images,
                const typename QNet<S>::Mat& next_winds, std::span<const float> rewards,
                std::span<const std::uint8_t> terminals, double gamma, typename QNet<S>::Vec& y_dir,
                typename QNet<S>::Vec& y_spd);

/// One optimization step: sample a minibatch, form TD targets, take an Adam
/// step on the summed half-MSE of the two heads, then soft-update the
/// target. Returns the loss. Throws std::runtime_error("diverged") on a
/// non-finite loss.
template <typename S>
double train_step(QNet<S>& online, QNet<S>& target, const ReplayBuffer& buffer, AdamState<S>& adam,
                  std::mt19937_64& replay_rng, const TrainHyper& hp);

struct EpisodeCurve {
    long episode = 0;
    double epsilon = 1.0;
    double mean_reward = 0;
    double mean_mse = 0;
    double mean_loss = 0;
    double endurance_days = 0;
};

struct TrainResult {
    QNetArch arch;
    Checkpoint final_checkpoint;
    std::vector<EpisodeCurve> curves;
    long episodes_done = 0;
    bool diverged = false;
};

/// Full training loop: freshly generated world per episode, replay pushes
/// after every slot, gradient steps on the train_every schedule, periodic
/// checkpointing. On divergence the last good checkpoint is kept.
TrainResult train(const WorldSpec& world, const EpisodeConfig& episode, const TrainHyper& hp,
                  const std::filesystem::path& checkpoint_path, std::ostream* progress,
                  const Checkpoint* resume_from = nullptr);

extern template void td_targets<float>(const QNet<float>&, const QNet<float>::Mat&,
                                       const QNet<float>::Mat&, std::span<const float>,
                                       std::span<const std::uint8_t>, double, QNet<float>::Vec&,
                                       QNet<float>::Vec&);
extern template void td_targets<double>(const QNet<double>&, const QNet<double>::Mat&,
                                        const QNet<double>::Mat&, std::span<const float>,
                                        std::span<const std::uint8_t>, double, QNet<double>::Vec&,
                                        QNet<double>::Vec&);
extern template double train_step<float>(QNet<float>&, QNet<float>&, const ReplayBuffer&,
                                         AdamState<float>&, std::mt19937_64&, const TrainHyper&);
extern template double train_step<double>(QNet<double>&, QNet<double>&, const ReplayBuffer&,
                                          AdamState<double>&, std::mt19937_64&, const TrainHyper&);

}  // namespace plume
