#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "plume/geo.hpp"

namespace plume {

/// Planar simulation domain with a land mask and the river mouth cell.
/// Field values live at cell centers: cell (ix, iy) sits at
/// ((ix + 0.5) * cell_w, (iy + 0.5) * cell_h).
struct Domain {
    double width_m = 12800.0;
    double height_m = 12800.0;
    int nx = 64;
    int ny = 64;
    int mouth_ix = 63;
    int mouth_iy = 32;
    GridB land;  // 1 = land, excluded from evaluation and navigation

    double cell_w() const { return width_m / nx; }
    double cell_h() const { return height_m / ny; }
    Vec2 cell_center(int ix, int iy) const {
        return {(ix + 0.5) * cell_w(), (iy + 0.5) * cell_h()};
    }
    Vec2 mouth_center() const { return cell_center(mouth_ix, mouth_iy); }

    bool in_bounds(const Vec2& p) const {
        return p.x >= 0.0 && p.x <= width_m && p.y >= 0.0 && p.y <= height_m;
    }
    int cell_ix(double x) const;
    int cell_iy(double y) const;
    bool is_land_cell(int ix, int iy) const { return land.at(ix, iy) != 0; }
    bool is_water(const Vec2& p) const;
    int water_cell_count() const;

    /// Throws std::invalid_argument on violated invariants (dims, mouth
    /// placement, land fraction).
    void validate() const;

    /// Square domain with a straight coastline on the east edge and the
    /// mouth carved out at the east-boundary midpoint.
    static Domain coastal(int nx, int ny, double cell_m);
};

struct Wind {
    double angle_rad = 0.0;
    double speed_mps = 0.0;

    Vec2 vec() const { return {speed_mps * std::cos(angle_rad), speed_mps * std::sin(angle_rad)}; }
};

/// One 30-minute slot of ground truth.
struct FieldFrame {
    int slot_index = 0;
    GridF salinity;  // psu
    GridF cur_u;     // m/s, +x component
    GridF cur_v;     // m/s, +y component
    Wind wind;
};

/// Parameters of the synthetic plume generator. Spatial scales are
/// fractions of the domain extent so the same defaults work across grid
/// sizes.
struct SynthParams {
    double f_ocn = 35.0;            // open-ocean background, psu
    double tidal_period_s = 45000;  // 12.5 h
    double discharge_mean = 14.0;   // mean plume amplitude, psu
    double discharge_var = 0.09;    // per-slot innovation variance, psu^2
    double discharge_revert = 0.02;
    double tide_mod = 0.35;  // tidal modulation depth of the amplitude

    // mean-reverting wind process, piecewise constant per slot
    double wind_mean_speed = 5.0;  // m/s
    double wind_revert = 0.08;
    double wind_noise_sd = 0.6;        // m/s per slot
    double wind_angle_mean = 2.3562;   // 3*pi/4
    double wind_angle_noise_sd = 0.1;  // rad per slot

    // plume geometry (fractions of domain extent)
    double sigma_out_frac = 0.16;
    double sigma_along_frac = 0.26;
    double offset_base_frac = 0.10;   // mean seaward centroid offset
    double offset_gain_frac = 0.05;   // extra offset per unit discharge ratio
    double tide_excursion_frac = 0.11;
    double wind_drift_gain = 0.004;   // centroid drift, (m/m) per (m/s) of wind
    double wind_drift_decay = 0.92;

    // current synthesis
    double tide_current_mps = 0.5;
    double grad_gain = 150.0;  // (m/s) per (psu/m) of deficit gradient
    double jet_gain = 0.022;   // (m/s) per psu of local deficit
    double wind_current_gain = 0.03;
    double current_cap_mps = 1.2;

    std::uint64_t seed = 1;
};

/// Immutable after construction; safe for concurrent reads.
struct FieldSequence {
    Domain domain;
    double f_ocn = 35.0;
    double dt_s = 1800.0;
    std::vector<FieldFrame> frames;

    int num_slots() const { return static_cast<int>(frames.size()); }
    double last_time_s() const { return (num_slots() - 1) * dt_s; }
    double slot_time_s(int k) const { return k * dt_s; }
};

FieldSequence generate_sequence(const SynthParams& params, const Domain& domain, int num_slots);

/// Bilinear in space, linear in time, plus N(0, noise_sd^2) noise.
/// Throws std::out_of_range("outside world") for off-domain/on-land x or
/// out-of-range t.
double sample_salinity(const FieldSequence& seq, const Vec2& x, double t, double noise_sd,
                       std::mt19937_64& rng);

/// Noise-free current interpolation; same domain checks as sample_salinity.
Vec2 current_at(const FieldSequence& seq, const Vec2& x, double t);

void save_sequence(const FieldSequence& seq, const std::filesystem::path& path);
FieldSequence load_sequence(const std::filesystem::path& path);

/// Cells where f_ocn - salinity >= zeta.
GridB plume_mask(const FieldFrame& frame, double f_ocn, double zeta);

}  // namespace plume
