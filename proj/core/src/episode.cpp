#include "plume/episode.hpp"

#include <algorithm>
#include <cmath>

#include "plume/rng.hpp"

namespace plume {

PolicyKind policy_kind_from_string(const std::string& name) {
    if (name == "dqn") return PolicyKind::dqn;
    if (name == "random") return PolicyKind::random_walk;
    if (name == "rotations") return PolicyKind::rotations;
    if (name == "eibv") return PolicyKind::eibv;
    if (name == "uniform") return PolicyKind::uniform;
    throw std::invalid_argument("unknown policy: " + name);
}

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::dqn: return "dqn";
        case PolicyKind::random_walk: return "random";
        case PolicyKind::rotations: return "rotations";
        case PolicyKind::eibv: return "eibv";
        case PolicyKind::uniform: return "uniform";
    }
    return "?";
}

double mse_on_grid(const FieldFrame& truth, const GridD& estimate, const Domain& domain) {
    if (estimate.nx() != domain.nx || estimate.ny() != domain.ny)
        throw std::invalid_argument("estimate grid dims mismatch");
    double acc = 0.0;
    int count = 0;
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            if (domain.is_land_cell(ix, iy)) continue;
            const double d = static_cast<double>(truth.salinity.at(ix, iy)) - estimate.at(ix, iy);
            acc += d * d;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no water cells");
    return acc / count;
}

namespace {

GridD truth_as_grid(const FieldFrame& frame) {
    GridD g(frame.salinity.nx(), frame.salinity.ny());
    for (size_t i = 0; i < g.size(); ++i) g.raw()[i] = frame.salinity.raw()[i];
    return g;
}

Vec2 seaward_unit(const Domain& dom) {
    Vec2 u{-1.0, 0.0};
    if (dom.mouth_ix == 0) u = {1.0, 0.0};
    if (dom.mouth_iy == 0) u = {0.0, 1.0};
    if (dom.mouth_iy == dom.ny - 1 && dom.mouth_ix != 0 && dom.mouth_ix != dom.nx - 1) u = {0.0, -1.0};
    return u;
}

}  // namespace

Simulation::Simulation(std::shared_ptr<const FieldSequence> world, const EpisodeConfig& cfg,
                       PolicyKind kind, const QNet<float>* net)
    : world_(std::move(world)),
      cfg_(cfg),
      kind_(kind),
      net_(net),
      noise_rng_(cfg.noise_seed),
      policy_rng_(cfg.policy_seed) {
    if (cfg_.num_agents < 1) throw std::invalid_argument("need at least one agent");
    if (cfg_.num_slots < 1) throw std::invalid_argument("need at least one slot");
    if (cfg_.num_slots >= world_->num_slots())
        throw std::invalid_argument("world sequence too short for the episode horizon");
    if (kind_ == PolicyKind::dqn && net_ == nullptr) throw std::invalid_argument("dqn policy needs a network");
    cfg_.reward.validate();

    gpr_ = GprModel(cfg_.kernel, cfg_.window_slots, world_->f_ocn);
    est_ = GridD(world_->domain.nx, world_->domain.ny, world_->f_ocn);
    prev_est_ = est_;
    history_.resize(static_cast<size_t>(cfg_.num_agents));
    slot_samples_.resize(static_cast<size_t>(cfg_.num_agents));
    rewards_.assign(static_cast<size_t>(cfg_.num_agents), 0.0);
    speed_log_.resize(static_cast<size_t>(cfg_.num_agents));
    commands_.assign(static_cast<size_t>(cfg_.num_agents), Action{0, 1});

    if (kind_ == PolicyKind::rotations)
        rotation_plan_ = default_rotation_plan(*world_, cfg_.num_agents, cfg_.rotation_radius_m);
    if (kind_ == PolicyKind::eibv) cfg_.eibv.validate(world_->f_ocn);
    if (kind_ != PolicyKind::uniform) deploy();
    if (kind_ == PolicyKind::dqn) render_all();
}

void Simulation::deploy() {
    const auto& dom = world_->domain;
    fleet_.resize(static_cast<size_t>(cfg_.num_agents));
    const Vec2 u_out = seaward_unit(dom);
    const double base = std::atan2(u_out.y, u_out.x);
    for (int i = 0; i < cfg_.num_agents; ++i) {
        auto& v = fleet_[static_cast<size_t>(i)];
        v.agent_id = i;
        v.battery_j = cfg_.energy.battery_capacity_j;
        v.alive = true;
        if (kind_ == PolicyKind::rotations) {
            v.pos = rotation_plan_.cores[static_cast<size_t>(i)] + Vec2{rotation_plan_.radius_m, 0.0};
            if (!dom.is_water(v.pos)) v.pos = rotation_plan_.cores[static_cast<size_t>(i)];
            continue;
        }
        if (!cfg_.initial_positions.empty()) {
            if (cfg_.initial_positions.size() != static_cast<size_t>(cfg_.num_agents))
                throw std::invalid_argument("initial position count mismatch");
            v.pos = cfg_.initial_positions[static_cast<size_t>(i)];
            if (!dom.is_water(v.pos)) throw std::invalid_argument("initial position on land");
            continue;
        }
        // evenly spaced on a 90-degree arc, deploy_arc_m seaward of the mouth
        const double spread = kPi / 2.0;
        const double angle = (cfg_.num_agents == 1)
                                 ? base
                                 : base - spread / 2.0 + spread * i / (cfg_.num_agents - 1);
        Vec2 p = dom.mouth_center() + Vec2{std::cos(angle), std::sin(angle)} * cfg_.deploy_arc_m;
        for (int tries = 0; tries < 64 && !dom.is_water(p); ++tries) p += u_out * dom.cell_w();
        if (!dom.is_water(p)) throw std::invalid_argument("cannot deploy agent on water");
        v.pos = p;
    }
}

void Simulation::render_all() {
    states_.assign(static_cast<size_t>(cfg_.num_agents), AgentState{});
    const Wind wind = world_->frames[0].wind;
    for (int i = 0; i < cfg_.num_agents; ++i) {
        std::vector<SampleSet> own(history_[static_cast<size_t>(i)].begin(),
                                   history_[static_cast<size_t>(i)].end());
        std::vector<SampleSet> mates;
        for (int j = 0; j < cfg_.num_agents; ++j) {
            if (j == i) continue;
            mates.insert(mates.end(), history_[static_cast<size_t>(j)].begin(),
                         history_[static_cast<size_t>(j)].end());
        }
        states_[static_cast<size_t>(i)] =
            render_state(est_, world_->domain, world_->f_ocn, own, mates, wind, cfg_.state_res);
    }
}

void Simulation::select_commands(int slot_k, double epsilon) {
    switch (kind_) {
        case PolicyKind::dqn: {
            const auto acts = select_actions(*net_, states_, epsilon, policy_rng_);
            for (int i = 0; i < cfg_.num_agents; ++i)
                if (fleet_[static_cast<size_t>(i)].alive) commands_[static_cast<size_t>(i)] = acts[static_cast<size_t>(i)];
            break;
        }
        case PolicyKind::random_walk: {
            for (int i = 0; i < cfg_.num_agents; ++i) {
                const auto rw = random_walk_policy(policy_rng_);
                if (fleet_[static_cast<size_t>(i)].alive) commands_[static_cast<size_t>(i)] = {rw.dir, rw.spd};
            }
            break;
        }
        case PolicyKind::eibv: {
            for (int i = 0; i < cfg_.num_agents; ++i) {
                auto& v = fleet_[static_cast<size_t>(i)];
                if (!v.alive) continue;
                const int dir = ideal_eibv_direction(gpr_, *world_, v, slot_k, cfg_.eibv);
                commands_[static_cast<size_t>(i)] = {dir, 1};  // EIBV benchmark runs at survey speed
            }
            break;
        }
        default:
            break;
    }
}

bool Simulation::run_slot(int k, double epsilon) {
    if (terminated_ || k > cfg_.num_slots) return false;
    const auto& dom = world_->domain;
    const FieldFrame& truth = world_->frames[static_cast<size_t>(k)];

    // (0) the first slot executes the initial command selection
    ensure_commands(epsilon);

    // (1) execute previous commands, collect trajectory-constrained samples
    std::vector<double> executed_speed(static_cast<size_t>(cfg_.num_agents), 0.0);
    std::vector<bool> was_alive(static_cast<size_t>(cfg_.num_agents), false);
    for (auto& s : slot_samples_) s = SampleSet{};
    if (kind_ == PolicyKind::uniform) {
        const double bias = cfg_.uniform_bias_frac * std::min(dom.width_m, dom.height_m);
        auto sets = uniform_sampler(*world_, k, cfg_.uniform_budget, bias, cfg_.noise_sd, noise_rng_);
        // stash for uplink phase; pseudo-agent 0 carries the budget
        slot_samples_.assign(1, SampleSet{0, k, {}});
        for (auto& s : sets)
            slot_samples_[0].records.insert(slot_samples_[0].records.end(), s.records.begin(), s.records.end());
    } else {
        for (int i = 0; i < cfg_.num_agents; ++i) {
            auto& v = fleet_[static_cast<size_t>(i)];
            if (!v.alive) continue;
            was_alive[static_cast<size_t>(i)] = true;
            const auto& cmd = commands_[static_cast<size_t>(i)];
            if (kind_ == PolicyKind::rotations) {
                auto traj = rotation_trajectory(rotation_plan_, i, k, world_->dt_s);
                const int per_agent =
                    std::clamp(static_cast<int>(std::llround(static_cast<double>(cfg_.uniform_budget) /
                                                             cfg_.num_agents)),
                               1, 10);
                slot_samples_[static_cast<size_t>(i)] =
                    collect_samples(traj, *world_, cfg_.noise_sd, per_agent, i, k, noise_rng_);
                v.pos = traj.back().pos;
                v.heading_idx = 0;
                v.speed_idx = 1;
                executed_speed[static_cast<size_t>(i)] = rotation_plan_.speed_mps;
            } else {
                executed_speed[static_cast<size_t>(i)] = speed_mps(cmd.spd);
                auto step = step_slot(v, cmd.dir, cmd.spd, *world_, k);
                slot_samples_[static_cast<size_t>(i)] = collect_samples(
                    step.trajectory, *world_, cfg_.noise_sd, default_sample_count(cmd.spd), i, k, noise_rng_);
                v = step.state;
            }
        }
    }
    if (post_sampling_hook) post_sampling_hook(k);

    // (2) uplink through the byte codecs
    long uplink_bytes = 0;
    int uplink_msgs = 0;
    int max_msg = 0;
    std::vector<SampleSet> decoded;
    for (const auto& set : slot_samples_) {
        if (set.records.empty()) continue;
        // chunk to codec-legal sizes (uniform budget can exceed 10)
        for (size_t off = 0; off < set.records.size(); off += 10) {
            SampleSet chunk{set.agent_id, set.slot_index, {}};
            const size_t end = std::min(set.records.size(), off + 10);
            chunk.records.assign(set.records.begin() + static_cast<long>(off),
                                 set.records.begin() + static_cast<long>(end));
            const auto bytes = encode_uplink(UplinkMsg::from_samples(chunk));
            uplink_bytes += static_cast<long>(bytes.size());
            uplink_msgs += 1;
            max_msg = std::max(max_msg, static_cast<int>(bytes.size()));
            decoded.push_back(decode_uplink(bytes).to_samples());
        }
    }

    // (3) estimator update and history window
    if (!cfg_.oracle_estimator && !decoded.empty()) gpr_.update(decoded, k);
    if (kind_ != PolicyKind::uniform) {
        for (int i = 0; i < cfg_.num_agents; ++i) {
            if (slot_samples_[static_cast<size_t>(i)].records.empty()) continue;
            auto& h = history_[static_cast<size_t>(i)];
            h.push_back(slot_samples_[static_cast<size_t>(i)]);
            while (!h.empty() && h.front().slot_index <= k - cfg_.window_slots) h.pop_front();
        }
    }

    // (4) estimate at sigma[k]
    prev_est_ = est_;
    est_ = cfg_.oracle_estimator ? truth_as_grid(truth)
                                 : gpr_.posterior_mean_grid(dom, world_->slot_time_s(k));

    // (5-6) state render and next commands
    long downlink_bytes = 0;
    if (kind_ == PolicyKind::dqn) render_all();
    if (kind_ == PolicyKind::dqn || kind_ == PolicyKind::random_walk || kind_ == PolicyKind::eibv) {
        select_commands(k, epsilon);
        for (int i = 0; i < cfg_.num_agents; ++i) {
            if (!fleet_[static_cast<size_t>(i)].alive) continue;
            DownlinkMsg msg{static_cast<std::uint16_t>(i), static_cast<std::uint32_t>(k),
                            static_cast<std::uint8_t>(commands_[static_cast<size_t>(i)].dir),
                            static_cast<std::uint8_t>(commands_[static_cast<size_t>(i)].spd)};
            const auto bytes = encode_downlink(msg);
            downlink_bytes += static_cast<long>(bytes.size());
            const auto rt = decode_downlink(bytes);
            commands_[static_cast<size_t>(i)] = {rt.dir_code, rt.spd_code};
        }
    }

    // (7) energy for the motion executed this slot
    if (kind_ != PolicyKind::uniform) {
        for (int i = 0; i < cfg_.num_agents; ++i) {
            if (!was_alive[static_cast<size_t>(i)]) continue;
            auto& v = fleet_[static_cast<size_t>(i)];
            v = consume_energy(v, executed_speed[static_cast<size_t>(i)], world_->dt_s, cfg_.energy);
            speed_log_[static_cast<size_t>(i)].push_back(executed_speed[static_cast<size_t>(i)]);
        }
    }

    // (8) metrics and logging
    const double mse = mse_on_grid(truth, est_, dom);
    const double contrast = contrast_score(truth, dom, world_->f_ocn);
    if (kind_ == PolicyKind::uniform) {
        rewards_.assign(1, 0.0);
    } else {
        std::vector<double> speeds(executed_speed.begin(), executed_speed.end());
        rewards_ = compute_rewards(truth, dom, world_->f_ocn, prev_est_, mse, contrast, slot_samples_,
                                   speeds, cfg_.reward);
    }

    log_.slots.push_back({k, mse, contrast, uplink_bytes, downlink_bytes, max_msg, uplink_msgs});
    if (kind_ == PolicyKind::uniform) {
        SlotAgentLog row;
        row.slot = k;
        row.agent = 0;
        row.spd = 0;
        row.samples = static_cast<int>(slot_samples_[0].records.size());
        row.battery_j = std::numeric_limits<double>::quiet_NaN();
        log_.agents.push_back(row);
    } else {
        for (int i = 0; i < cfg_.num_agents; ++i) {
            const auto& v = fleet_[static_cast<size_t>(i)];
            SlotAgentLog row;
            row.slot = k;
            row.agent = i;
            row.dir = v.heading_idx;
            row.spd = v.speed_idx;
            row.x = v.pos.x;
            row.y = v.pos.y;
            row.battery_j = v.battery_j;
            row.samples = static_cast<int>(slot_samples_[static_cast<size_t>(i)].records.size());
            row.reward = rewards_[static_cast<size_t>(i)];
            row.alive = v.alive;
            log_.agents.push_back(row);
        }
    }
    if (slot_end_hook) slot_end_hook(k);

    if (kind_ != PolicyKind::uniform) {
        const bool any_alive =
            std::any_of(fleet_.begin(), fleet_.end(), [](const VehicleState& v) { return v.alive; });
        if (!any_alive) terminated_ = true;  // fleet exhausted, episode ends early
    }
    if (k >= cfg_.num_slots) terminated_ = true;
    return !terminated_;
}

void Simulation::run_all(double epsilon) {
    for (int k = 1; k <= cfg_.num_slots; ++k)
        if (!run_slot(k, epsilon)) break;
    finalize();
}

void Simulation::finalize() {
    if (finalized_) return;
    finalized_ = true;
    auto& s = log_.summary;
    s.completed_slots = static_cast<int>(log_.slots.size());
    if (s.completed_slots == 0) return;
    double mse = 0, contrast = 0;
    for (const auto& row : log_.slots) {
        mse += row.mse;
        contrast += row.contrast;
        s.uplink_bytes += row.uplink_bytes;
        s.downlink_bytes += row.downlink_bytes;
        s.max_uplink_msg_bytes = std::max(s.max_uplink_msg_bytes, row.max_uplink_msg_bytes);
    }
    s.mean_mse = mse / s.completed_slots;
    s.mean_contrast = contrast / s.completed_slots;
    double reward = 0;
    for (const auto& row : log_.agents) reward += row.reward;
    s.mean_reward = log_.agents.empty() ? 0.0 : reward / static_cast<double>(log_.agents.size());
    if (kind_ != PolicyKind::uniform) s.endurance_days = fleet_endurance_days(speed_log_, cfg_.energy);
}

EpisodeLog run_episode(std::shared_ptr<const FieldSequence> world, const EpisodeConfig& cfg,
                       PolicyKind kind, const QNet<float>* net, double epsilon) {
    Simulation sim(std::move(world), cfg, kind, net);
    sim.run_all(epsilon);
    return std::move(sim.log());
}

}  // namespace plume
