#include "plume/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "plume/rng.hpp"

namespace plume {

std::vector<SampleSet> uniform_sampler(const FieldSequence& world, int slot_k, int budget,
                                       double bias_length_m, double noise_sd, std::mt19937_64& rng) {
    if (budget < 1) throw std::invalid_argument("budget must be positive");
    if (slot_k < 0 || slot_k >= world.num_slots()) throw std::out_of_range("slot outside sequence");
    const auto& dom = world.domain;
    const Vec2 mouth = dom.mouth_center();

    std::vector<int> cells;
    std::vector<double> weights;
    for (int iy = 0; iy < dom.ny; ++iy) {
        for (int ix = 0; ix < dom.nx; ++ix) {
            if (dom.is_land_cell(ix, iy)) continue;
            cells.push_back(iy * dom.nx + ix);
            weights.push_back(std::exp(-distance(dom.cell_center(ix, iy), mouth) / bias_length_m));
        }
    }
    std::discrete_distribution<int> pick(weights.begin(), weights.end());

    const double t = world.slot_time_s(slot_k);
    std::vector<SampleSet> sets;
    SampleSet cur;
    cur.agent_id = 0;
    cur.slot_index = slot_k;
    for (int i = 0; i < budget; ++i) {
        const int cell = cells[static_cast<size_t>(pick(rng))];
        const Vec2 p = dom.cell_center(cell % dom.nx, cell / dom.nx);
        cur.records.push_back({p, t, sample_salinity(world, p, t, noise_sd, rng)});
        if (cur.records.size() == 10) {
            sets.push_back(std::move(cur));
            cur = SampleSet{0, slot_k, {}};
        }
    }
    if (!cur.records.empty()) sets.push_back(std::move(cur));
    return sets;
}

RotationPlan default_rotation_plan(const FieldSequence& world, int num_agents, double radius_m) {
    if (num_agents < 1) throw std::invalid_argument("need at least one agent");
    const auto& dom = world.domain;
    const Vec2 mouth = dom.mouth_center();

    // outflow axis: away from the mouth's boundary edge
    Vec2 u_out{-1.0, 0.0};
    if (dom.mouth_ix == 0) u_out = {1.0, 0.0};
    if (dom.mouth_iy == 0) u_out = {0.0, 1.0};
    if (dom.mouth_iy == dom.ny - 1 && dom.mouth_ix != 0 && dom.mouth_ix != dom.nx - 1) u_out = {0.0, -1.0};

    // climatological extent: furthest axis point whose mean deficit stays
    // above half a psu
    double extent = 0.0;
    const double step = std::min(dom.cell_w(), dom.cell_h());
    for (double r = step; r < std::max(dom.width_m, dom.height_m); r += step) {
        const Vec2 p = mouth + u_out * r;
        if (!dom.is_water(p)) break;
        double deficit = 0.0;
        const int ix = dom.cell_ix(p.x), iy = dom.cell_iy(p.y);
        for (const auto& fr : world.frames) deficit += world.f_ocn - fr.salinity.at(ix, iy);
        deficit /= world.num_slots();
        if (deficit < 0.5) break;
        extent = r;
    }
    if (extent < 4.0 * radius_m) extent = std::max(extent, 4.0 * radius_m);

    RotationPlan plan;
    plan.radius_m = radius_m;
    for (int a = 0; a < num_agents; ++a) {
        const double frac = static_cast<double>(a + 1) / (num_agents + 1);
        Vec2 core = mouth + u_out * (frac * extent);
        // keep the whole circle in water, nudging seaward if it clips land
        bool placed = false;
        for (int tries = 0; tries < 64 && !placed; ++tries) {
            placed = true;
            for (int s = 0; s < 16; ++s) {
                const double a_s = kTwoPi * s / 16;
                if (!dom.is_water(core + Vec2{std::cos(a_s), std::sin(a_s)} * radius_m)) {
                    placed = false;
                    break;
                }
            }
            if (!placed) core += u_out * radius_m;
        }
        if (!placed) throw std::invalid_argument("rotation circle does not fit in water");
        plan.cores.push_back(core);
    }
    return plan;
}

std::vector<TrajectoryPoint> rotation_trajectory(const RotationPlan& plan, int agent, int slot_k,
                                                 double slot_s, double substep_s) {
    if (agent < 0 || agent >= static_cast<int>(plan.cores.size()))
        throw std::out_of_range("agent outside plan");
    const double omega = plan.speed_mps / plan.radius_m;
    const double t0 = (slot_k - 1) * slot_s;
    const int n = static_cast<int>(std::llround(slot_s / substep_s));
    std::vector<TrajectoryPoint> out;
    out.reserve(n);
    const double phase0 = agent * (kTwoPi / static_cast<double>(plan.cores.size()));
    for (int i = 1; i <= n; ++i) {
        const double t = t0 + i * substep_s;
        const double a = phase0 + omega * t;
        out.push_back({plan.cores[static_cast<size_t>(agent)] + Vec2{std::cos(a), std::sin(a)} * plan.radius_m, t});
    }
    return out;
}

RandomWalk random_walk_policy(std::mt19937_64& rng) {
    RandomWalk rw;
    rw.dir = uniform_int(rng, 0, kNumHeadings - 1);
    rw.spd = uniform_int(rng, 0, static_cast<int>(kSpeedLevels.size()) - 1);
    return rw;
}

void EibvConfig::validate(double f_ocn) const {
    if (front_threshold_psu <= 0.0 || front_threshold_psu >= f_ocn)
        throw std::invalid_argument("front threshold outside (0, f_ocn)");
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double integrated_bernoulli_variance(const GridD& mean, const GridD& var, const Domain& domain,
                                     double threshold) {
    double ibv = 0.0;
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            if (domain.is_land_cell(ix, iy)) continue;
            const double v = var.at(ix, iy);
            if (v <= 1e-12) continue;  // saturated classifier, p in {0,1}
            const double p = normal_cdf((threshold - mean.at(ix, iy)) / std::sqrt(v));
            ibv += p * (1.0 - p);
        }
    }
    return ibv;
}

int ideal_eibv_direction(const GprModel& gpr, const FieldSequence& world, const VehicleState& state,
                         int slot_k, const EibvConfig& cfg) {
    cfg.validate(world.f_ocn);
    const int next_slot = slot_k + cfg.lookahead_slots;
    const double t_next = world.slot_time_s(std::min(next_slot, world.num_slots() - 1));
    std::mt19937_64 unused(0);  // noise-free hypotheticals draw nothing

    int best_dir = 0;
    double best_ibv = std::numeric_limits<double>::infinity();
    for (int dir = 0; dir < kNumHeadings; ++dir) {
        const auto step = step_slot(state, dir, 1, world, next_slot);
        const auto hyp = collect_samples(step.trajectory, world, 0.0, default_sample_count(1),
                                         state.agent_id, next_slot, unused);
        GprModel model = gpr;
        const SampleSet sets[] = {hyp};
        model.update(sets, next_slot);
        GridD mean, var;
        model.posterior_grid(world.domain, t_next, mean, var);
        const double ibv = integrated_bernoulli_variance(mean, var, world.domain, cfg.front_threshold_psu);
        if (ibv < best_ibv - 1e-12) {
            best_ibv = ibv;
            best_dir = dir;
        }
    }
    return best_dir;
}

}  // namespace plume
