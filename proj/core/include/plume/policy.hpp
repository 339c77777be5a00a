#pragma once

#include <memory>
#include <span>
#include <vector>

#include "plume/qnet.hpp"
#include "plume/vehicle.hpp"
#include "plume/world.hpp"

namespace plume {

/// Per-agent policy input: 3-channel image (GP estimate deficit, own marks,
/// teammate marks) plus the normalized wind vector. Pixel values live in
/// [0,1]; mark intensity decays with recency rank r as 1/(1+ln(1+r)).
struct AgentState {
    int res = 64;
    std::vector<float> image;  // 3 * res * res, [channel][y][x]
    float wind_angle_norm = 0.0f;
    float wind_speed_norm = 0.0f;

    float pixel(int channel, int px, int py) const {
        return image[static_cast<size_t>(channel) * res * res + static_cast<size_t>(py) * res + px];
    }
};

constexpr double kWindSpeedNorm = 15.0;  // m/s mapped to 1.0

float recency_intensity(int rank);

AgentState render_state(const GridD& estimate, const Domain& domain, double f_ocn,
                        std::span<const SampleSet> own_history,
                        std::span<const SampleSet> teammate_history, const Wind& wind, int res);

struct Action {
    int dir = 0;
    int spd = 0;
};

/// Per-head epsilon-greedy selection; ties break toward the lowest index,
/// and the two heads draw independently.
template <typename S>
std::vector<Action> select_actions(const QNet<S>& net, std::span<const AgentState> states, double epsilon,
                                   std::mt19937_64& rng);

/// |f_ocn - mean salinity| over water cells.
double contrast_score(const FieldFrame& frame, const Domain& domain, double f_ocn);

struct RewardWeights {
    double eta0 = 1.0;
    double eta1 = 0.1;
    double eta2 = 0.0;
    double eta3 = 0.05;

    void validate() const;
};

/// r_n = [-eta0 e_k + eta1 F_k / (1 + e_k) - eta2 sum_m v_m]
///       + eta3 sum_{(x,t) in Z_k_n} (fhat_prev(x) - f(x, slot_k))^2.
/// slot_samples and speeds are aligned per agent; dead agents pass empty
/// sets and zero speed.
std::vector<double> compute_rewards(const FieldFrame& truth, const Domain& domain, double f_ocn,
                                    const GridD& prev_estimate, double mse_k, double contrast_k,
                                    std::span<const SampleSet> slot_samples, std::span<const double> speeds,
                                    const RewardWeights& w);

/// 1.0 through the pure-exploration phase, then linear decay to final_eps at
/// total_episodes, constant afterwards.
double epsilon_at(long episode, long total_episodes = 6500, long pure_explore = 1500,
                  double final_eps = 0.05);

struct Transition {
    std::shared_ptr<const AgentState> state;
    std::shared_ptr<const AgentState> next_state;
    Action action;
    float reward = 0.0f;
    bool terminal = false;
};

/// FIFO ring buffer; sampling draws uniform indices with replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity = 100000);

    void push(Transition t);
    const Transition& at(size_t i) const { return storage_[i]; }
    size_t size() const { return storage_.size(); }
    size_t capacity() const { return capacity_; }
    std::uint64_t total_pushed() const { return total_pushed_; }

    std::vector<size_t> sample_indices(size_t n, std::mt19937_64& rng) const;

private:
    size_t capacity_;
    size_t head_ = 0;
    std::uint64_t total_pushed_ = 0;
    std::vector<Transition> storage_;
};

extern template std::vector<Action> select_actions<float>(const QNet<float>&, std::span<const AgentState>,
                                                          double, std::mt19937_64&);
extern template std::vector<Action> select_actions<double>(const QNet<double>&, std::span<const AgentState>,
                                                           double, std::mt19937_64&);

}  // namespace plume
