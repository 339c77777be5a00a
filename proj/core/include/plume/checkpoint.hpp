#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

#include "plume/qnet.hpp"

namespace plume {

/// Snapshot of a training run: online/target parameters, optimizer moments,
/// episode counter and RNG streams, fingerprinted by the architecture.
struct Checkpoint {
    int input_res = 64;
    long param_count = 0;
    std::int64_t episode = 0;
    Eigen::VectorXd params;
    Eigen::VectorXd target_params;
    Eigen::VectorXd adam_m, adam_v;
    long adam_t = 0;
    std::string explore_rng, replay_rng;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
/// Throws on magic/fingerprint mismatch or truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const QNet<float>& online, const QNet<float>& target,
                           const AdamState<float>& adam, std::int64_t episode,
                           const std::string& explore_rng, const std::string& replay_rng);

/// Restores nets/optimizer from a checkpoint; the nets must already carry
/// the matching architecture.
void restore_checkpoint(const Checkpoint& ck, QNet<float>& online, QNet<float>& target,
                        AdamState<float>& adam);

}  // namespace plume
