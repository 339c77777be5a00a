#pragma once

#include <random>
#include <vector>

#include "plume/estimator.hpp"
#include "plume/vehicle.hpp"
#include "plume/world.hpp"

namespace plume {

/// Unconstrained mouth-biased random sampling (density proportional to
/// exp(-dist(cell, mouth) / bias_length_m) over water cells), timestamped at
/// the slot end. Returns the budget chunked into sets of <= 10 records so
/// every set stays codec-legal.
std::vector<SampleSet> uniform_sampler(const FieldSequence& world, int slot_k, int budget,
                                       double bias_length_m, double noise_sd, std::mt19937_64& rng);

/// Fixed circles around core points; traversal ignores the currents.
struct RotationPlan {
    std::vector<Vec2> cores;  // one per agent
    double radius_m = 500.0;
    double speed_mps = 1.0;
};

/// Cores spread along the outflow axis over the plume's climatological
/// extent, evenly at fractions i/(N+1).
RotationPlan default_rotation_plan(const FieldSequence& world, int num_agents, double radius_m = 500.0);

/// Substep positions along agent's circle for slot k; arc advances at
/// plan.speed_mps regardless of the current field.
std::vector<TrajectoryPoint> rotation_trajectory(const RotationPlan& plan, int agent, int slot_k,
                                                 double slot_s = 1800.0, double substep_s = 60.0);

struct RandomWalk {
    int dir = 0;
    int spd = 0;
};
RandomWalk random_walk_policy(std::mt19937_64& rng);

struct EibvConfig {
    double front_threshold_psu = 32.0;
    int lookahead_slots = 1;

    void validate(double f_ocn) const;
};

/// One-slot-lookahead ideal EIBV direction choice: simulate each candidate
/// heading at 1.0 m/s, append the would-be samples with ground-truth values,
/// and pick the direction minimizing sum p(1-p) over the evaluation grid,
/// where p = Phi((threshold - mu) / sigma). Ties resolve to the lowest index.
int ideal_eibv_direction(const GprModel& gpr, const FieldSequence& world, const VehicleState& state,
                         int slot_k, const EibvConfig& cfg);

/// Integrated Bernoulli variance of the front classifier on posterior
/// (mean, var) grids; zero-variance cells classify deterministically and
/// contribute nothing.
double integrated_bernoulli_variance(const GridD& mean, const GridD& var, const Domain& domain,
                                     double threshold);

}  // namespace plume
