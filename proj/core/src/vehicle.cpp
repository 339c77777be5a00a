#include "plume/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plume {

EnergyModel EnergyModel::calibrated(double battery_capacity_j) {
    // hotel + drag * 1.0^3 = P1,  hotel + drag * 0.4^3 = P1 / ratio
    const double p1 = battery_capacity_j / kEnduranceFastS;
    const double v2 = kSpeedLevels[0];
    const double drag = p1 * (1.0 - 1.0 / kEnduranceRatio) / (1.0 - v2 * v2 * v2);
    EnergyModel m;
    m.battery_capacity_j = battery_capacity_j;
    m.drag_coef = drag;
    m.hotel_w = p1 - drag;
    return m;
}

namespace {

/// Axis-decomposed slide: keep whichever displacement components stay in
/// water, otherwise stay put.
Vec2 clip_to_water(const Domain& dom, const Vec2& from, const Vec2& to) {
    if (dom.is_water(to)) return to;
    const Vec2 keep_x{to.x, from.y};
    if (dom.is_water(keep_x)) return keep_x;
    const Vec2 keep_y{from.x, to.y};
    if (dom.is_water(keep_y)) return keep_y;
    return from;
}

}  // namespace

StepResult step_slot(const VehicleState& state, int dir_idx, int spd_idx, const FieldSequence& world,
                     int slot_k, double substep_s) {
    if (!state.alive) return {state, {}};
    if (dir_idx < 0 || dir_idx >= kNumHeadings) throw std::invalid_argument("bad heading index");
    if (spd_idx < 0 || spd_idx >= static_cast<int>(kSpeedLevels.size()))
        throw std::invalid_argument("bad speed index");
    const double slot_s = world.dt_s;
    const int substeps = static_cast<int>(std::llround(slot_s / substep_s));
    if (substeps < 1 || std::abs(substeps * substep_s - slot_s) > 1e-9)
        throw std::invalid_argument("substep must divide the slot evenly");

    const Vec2 u = heading_unit(dir_idx) * speed_mps(spd_idx);
    const double t0 = (slot_k - 1) * world.dt_s;

    StepResult out;
    out.state = state;
    out.state.heading_idx = dir_idx;
    out.state.speed_idx = spd_idx;
    out.trajectory.reserve(substeps);

    Vec2 pos = state.pos;
    for (int i = 0; i < substeps; ++i) {
        const double t = t0 + i * substep_s;
        const Vec2 c = current_at(world, pos, std::min(t, world.last_time_s()));
        if (!std::isfinite(c.x) || !std::isfinite(c.y)) throw std::runtime_error("corrupt world");
        const Vec2 cand = pos + (u + c) * substep_s;
        pos = clip_to_water(world.domain, pos, cand);
        out.trajectory.push_back({pos, t0 + (i + 1) * substep_s});
    }
    out.state.pos = pos;
    return out;
}

SampleSet collect_samples(const std::vector<TrajectoryPoint>& trajectory, const FieldSequence& world,
                          double noise_sd, int target_count, int agent_id, int slot_k,
                          std::mt19937_64& rng) {
    if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
    if (target_count < 1 || target_count > 10) throw std::invalid_argument("target_count outside [1,10]");

    SampleSet set;
    set.agent_id = agent_id;
    set.slot_index = slot_k;
    const int n = static_cast<int>(trajectory.size());
    const int m = std::min(target_count, n);
    set.records.reserve(m);
    for (int j = 1; j <= m; ++j) {
        const int idx = static_cast<int>(std::llround(static_cast<double>(j) * n / m)) - 1;
        const auto& tp = trajectory[static_cast<size_t>(std::clamp(idx, 0, n - 1))];
        const double t = std::min(tp.t, world.last_time_s());
        set.records.push_back({tp.pos, tp.t, sample_salinity(world, tp.pos, t, noise_sd, rng)});
    }
    return set;
}

int default_sample_count(int spd_idx) {
    const double frac = (speed_mps(spd_idx) - kSpeedLevels[0]) / (kSpeedLevels[1] - kSpeedLevels[0]);
    const int count = static_cast<int>(std::llround(3.0 + 4.0 * frac));
    return std::clamp(count, 1, 10);
}

VehicleState consume_energy(const VehicleState& state, double speed, double dt_s, const EnergyModel& model) {
    if (dt_s <= 0.0) throw std::invalid_argument("dt must be positive");
    VehicleState next = state;
    if (!state.alive) return next;
    next.battery_j = std::max(0.0, state.battery_j - model.power_w(speed) * dt_s);
    if (next.battery_j <= 0.0) next.alive = false;
    return next;
}

double fleet_endurance_days(const std::vector<std::vector<double>>& speeds_per_agent,
                            const EnergyModel& model) {
    if (speeds_per_agent.empty()) throw std::invalid_argument("no agents");
    double power_sum = 0.0;
    int counted = 0;
    for (const auto& speeds : speeds_per_agent) {
        if (speeds.empty()) continue;
        double p = 0.0;
        for (double v : speeds) p += model.power_w(v);
        power_sum += p / static_cast<double>(speeds.size());
        ++counted;
    }
    if (counted == 0) throw std::invalid_argument("episode has no slots");
    const double mean_power = power_sum / counted;
    return model.battery_capacity_j / mean_power / 86400.0;
}

}  // namespace plume
