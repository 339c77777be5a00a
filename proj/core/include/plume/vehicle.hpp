#pragma once

#include <array>
#include <random>
#include <vector>

#include "plume/world.hpp"

namespace plume {

/// 8-way heading set, 45 degree steps counterclockwise from +x (east).
constexpr int kNumHeadings = 8;
constexpr std::array<double, 2> kSpeedLevels = {0.4, 1.0};  // m/s

inline Vec2 heading_unit(int dir_idx) {
    const double a = dir_idx * (kPi / 4.0);
    return {std::cos(a), std::sin(a)};
}

inline double speed_mps(int spd_idx) { return kSpeedLevels[static_cast<size_t>(spd_idx)]; }

struct VehicleState {
    int agent_id = 0;
    Vec2 pos;
    int heading_idx = 0;
    int speed_idx = 1;
    double battery_j = 0.0;
    bool alive = true;
};

struct SampleRecord {
    Vec2 x;
    double t = 0.0;  // seconds
    double y = 0.0;  // psu
};

/// Per-agent, per-slot measurement set; at most 10 records.
struct SampleSet {
    int agent_id = 0;
    int slot_index = 0;
    std::vector<SampleRecord> records;
};

struct TrajectoryPoint {
    Vec2 pos;
    double t = 0.0;
};

/// Propulsion power is hotel_w + drag_coef * v^3; both coefficients are
/// pinned by the two endurance anchors (72 h at 1.0 m/s, 8x that at 0.4).
struct EnergyModel {
    double hotel_w = 0.0;
    double drag_coef = 0.0;  // W per (m/s)^3
    double battery_capacity_j = 0.0;

    double power_w(double speed) const { return hotel_w + drag_coef * speed * speed * speed; }
    double endurance_s(double speed) const { return battery_capacity_j / power_w(speed); }

    /// Solves the 2x2 system endurance(1.0) = 72 h, endurance(0.4) = 8 * 72 h.
    static EnergyModel calibrated(double battery_capacity_j = kDefaultBatteryJ);

    static constexpr double kDefaultBatteryJ = 25920000.0;  // 7.2 kWh
    static constexpr double kEnduranceFastS = 72.0 * 3600.0;
    static constexpr double kEnduranceRatio = 8.0;
};

struct StepResult {
    VehicleState state;
    std::vector<TrajectoryPoint> trajectory;
};

/// Integrates dx/dt = u + c over slot k ((k-1)*dt, k*dt] with forward Euler
/// at substep_s (default 60 s); positions slide along land/boundary.
StepResult step_slot(const VehicleState& state, int dir_idx, int spd_idx, const FieldSequence& world,
                     int slot_k, double substep_s = 60.0);

/// Evenly spaced in time along the slot trajectory, always including the
/// final point.
SampleSet collect_samples(const std::vector<TrajectoryPoint>& trajectory, const FieldSequence& world,
                          double noise_sd, int target_count, int agent_id, int slot_k,
                          std::mt19937_64& rng);

/// Per-slot measurement budget: 3 at the low speed, 7 at the survey speed,
/// so mixed-speed fleets average 5.
int default_sample_count(int spd_idx);

/// Battery decreases by power * dt; saturates at zero and kills the vehicle.
VehicleState consume_energy(const VehicleState& state, double speed, double dt_s, const EnergyModel& model);

/// Extrapolated fleet endurance: capacity over the fleet-mean average power,
/// in days. speeds_per_agent holds each agent's commanded speed per alive slot.
double fleet_endurance_days(const std::vector<std::vector<double>>& speeds_per_agent,
                            const EnergyModel& model);

}  // namespace plume
