#pragma once

#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "plume/baselines.hpp"
#include "plume/estimator.hpp"
#include "plume/policy.hpp"
#include "plume/wire.hpp"

namespace plume {

enum class PolicyKind { dqn, random_walk, rotations, eibv, uniform };

PolicyKind policy_kind_from_string(const std::string& name);
std::string to_string(PolicyKind kind);

struct EpisodeConfig {
    int num_agents = 1;
    int num_slots = 150;
    int window_slots = 24;
    double noise_sd = 0.1;
    int state_res = 64;
    double deploy_arc_m = 2000.0;
    std::vector<Vec2> initial_positions;  // empty: arc rule
    RewardWeights reward;
    KernelParams kernel;
    EnergyModel energy = EnergyModel::calibrated();
    bool oracle_estimator = false;  // estimate := truth (test/benchmark hook)

    // baseline knobs
    int uniform_budget = 15;
    double uniform_bias_frac = 0.25;  // of the smaller domain extent
    double rotation_radius_m = 500.0;
    EibvConfig eibv;

    std::uint64_t noise_seed = 2;
    std::uint64_t policy_seed = 3;
};

struct SlotAgentLog {
    int slot = 0;
    int agent = 0;
    int dir = 0;
    int spd = 0;
    double x = 0, y = 0;
    double battery_j = 0;
    int samples = 0;
    double reward = 0;
    bool alive = true;
};

struct SlotLog {
    int slot = 0;
    double mse = 0;
    double contrast = 0;
    long uplink_bytes = 0;
    long downlink_bytes = 0;
    int max_uplink_msg_bytes = 0;
    int uplink_msgs = 0;
};

struct EpisodeSummary {
    int completed_slots = 0;
    double mean_mse = 0;
    double mean_contrast = 0;
    double endurance_days = std::numeric_limits<double>::quiet_NaN();
    long uplink_bytes = 0;
    long downlink_bytes = 0;
    int max_uplink_msg_bytes = 0;
    double mean_reward = 0;
};

struct EpisodeLog {
    std::vector<SlotLog> slots;
    std::vector<SlotAgentLog> agents;  // slot-major rows
    EpisodeSummary summary;
};

/// Mean squared error over water cells (Eq.-(8)-style evaluation grid).
double mse_on_grid(const FieldFrame& truth, const GridD& estimate, const Domain& domain);

/// One episode of the per-slot pipeline: execute commands / collect, uplink
/// through the byte codecs, estimator update, state render, action
/// selection, downlink, energy, metrics. The policy path only ever sees the
/// estimate and sampled values, never the truth grids.
class Simulation {
public:
    Simulation(std::shared_ptr<const FieldSequence> world, const EpisodeConfig& cfg, PolicyKind kind,
               const QNet<float>* net);

    /// Advances slot k (1-based). Returns false once the episode has
    /// terminated (all agents dead or k past the horizon).
    bool run_slot(int k, double epsilon = 0.0);

    /// Selects the initial downlink commands if not done yet; run_slot does
    /// this implicitly, trainers call it to observe the slot-0 state/action.
    void ensure_commands(double epsilon) {
        if (!commands_ready_) {
            select_commands(0, epsilon);
            commands_ready_ = true;
        }
    }

    void run_all(double epsilon = 0.0);
    void finalize();

    int num_agents() const { return cfg_.num_agents; }
    const std::vector<VehicleState>& fleet() const { return fleet_; }
    const std::vector<AgentState>& states() const { return states_; }
    const std::vector<Action>& commands() const { return commands_; }
    const std::vector<SampleSet>& last_slot_samples() const { return slot_samples_; }
    const std::vector<double>& last_rewards() const { return rewards_; }
    const GprModel& gpr() const { return gpr_; }
    const GridD& estimate() const { return est_; }
    bool terminated() const { return terminated_; }
    EpisodeLog& log() { return log_; }
    const FieldSequence& world() const { return *world_; }

    // test hooks around the sampling barrier
    std::function<void(int)> post_sampling_hook;
    std::function<void(int)> slot_end_hook;

private:
    void deploy();
    void select_commands(int slot_k, double epsilon);
    void render_all();

    std::shared_ptr<const FieldSequence> world_;
    EpisodeConfig cfg_;
    PolicyKind kind_;
    const QNet<float>* net_ = nullptr;

    GprModel gpr_;
    GridD est_, prev_est_;
    std::vector<VehicleState> fleet_;
    std::vector<Action> commands_;
    std::vector<AgentState> states_;
    std::vector<SampleSet> slot_samples_;
    std::vector<double> rewards_;
    std::vector<std::deque<SampleSet>> history_;
    std::vector<std::vector<double>> speed_log_;
    RotationPlan rotation_plan_;
    EpisodeLog log_;
    std::mt19937_64 noise_rng_, policy_rng_;
    bool commands_ready_ = false;
    bool terminated_ = false;
    bool finalized_ = false;
};

/// Convenience wrapper for evaluation runs.
EpisodeLog run_episode(std::shared_ptr<const FieldSequence> world, const EpisodeConfig& cfg,
                       PolicyKind kind, const QNet<float>* net, double epsilon = 0.0);

}  // namespace plume
