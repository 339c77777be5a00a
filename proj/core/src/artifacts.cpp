#include "plume/artifacts.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "plume/png.hpp"
#include "plume/rng.hpp"

namespace plume {

namespace {

using nlohmann::json;

EpisodeConfig episode_config_for(const RunConfig& cfg, int episode_index) {
    EpisodeConfig e = cfg.episode;
    e.noise_seed = derive_seed(cfg.eval.seed, 1000000ull + static_cast<std::uint64_t>(episode_index));
    e.policy_seed = derive_seed(cfg.eval.seed, 2000000ull + static_cast<std::uint64_t>(episode_index));
    return e;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

void pool_stats(EvalOutcome& out) {
    std::vector<double> slot_mse;
    std::vector<double> endurances;
    for (const auto& log : out.logs) {
        for (const auto& s : log.slots) slot_mse.push_back(s.mse);
        out.uplink_bytes += log.summary.uplink_bytes;
        out.downlink_bytes += log.summary.downlink_bytes;
        out.max_uplink_msg_bytes = std::max(out.max_uplink_msg_bytes, log.summary.max_uplink_msg_bytes);
        if (std::isfinite(log.summary.endurance_days)) endurances.push_back(log.summary.endurance_days);
    }
    if (!slot_mse.empty()) {
        double acc = 0;
        for (double m : slot_mse) acc += m;
        out.mean_mse = acc / static_cast<double>(slot_mse.size());
        out.median_mse = quantile(slot_mse, 0.5);
        out.q25_mse = quantile(slot_mse, 0.25);
        out.q75_mse = quantile(slot_mse, 0.75);
    }
    if (!endurances.empty()) {
        double acc = 0;
        for (double e : endurances) acc += e;
        out.mean_endurance_days = acc / static_cast<double>(endurances.size());
    }
}

void emit_episode_frames(const RunConfig& cfg, PolicyKind kind, const QNet<float>* net,
                         const std::filesystem::path& png_dir) {
    std::filesystem::create_directories(png_dir);
    auto world = cfg.make_eval_world(0);
    Simulation sim(world, episode_config_for(cfg, 0), kind, net);
    std::vector<std::vector<Vec2>> marks(static_cast<size_t>(cfg.episode.num_agents));
    sim.slot_end_hook = [&](int k) {
        for (const auto& set : sim.last_slot_samples()) {
            if (set.records.empty()) continue;
            const size_t a = std::min(marks.size() - 1, static_cast<size_t>(set.agent_id));
            for (const auto& r : set.records) marks[a].push_back(r.x);
        }
        if (k % cfg.eval.png_every != 0) return;
        char name[64];
        std::snprintf(name, sizeof(name), "frame_slot%04d.png", k);
        render_frame_png(png_dir / name, sim.world().frames[static_cast<size_t>(k)], sim.estimate(),
                         sim.world().domain, sim.world().f_ocn, marks);
    };
    sim.run_all();
}

}  // namespace

EvalOutcome evaluate_policy(const RunConfig& cfg, PolicyKind kind, const QNet<float>* net,
                            const std::filesystem::path& png_dir) {
    if (!cfg.resolved) throw std::logic_error("config must be resolved before evaluation");
    EvalOutcome out;
    out.logs.resize(static_cast<size_t>(cfg.eval.episodes));

    auto run_one = [&](int i) {
        auto world = cfg.make_eval_world(i);
        out.logs[static_cast<size_t>(i)] = run_episode(world, episode_config_for(cfg, i), kind, net);
    };

    if (cfg.eval.jobs <= 1 || cfg.eval.episodes <= 1) {
        for (int i = 0; i < cfg.eval.episodes; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        const int workers = std::min(cfg.eval.jobs, cfg.eval.episodes);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < cfg.eval.episodes; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& t : pool) t.join();
    }
    pool_stats(out);
    if (cfg.eval.emit_png && cfg.eval.episodes > 0 && !png_dir.empty())
        emit_episode_frames(cfg, kind, net, png_dir);
    return out;
}

std::vector<CompareRow> compare_policies(const RunConfig& cfg, const QNet<float>* net) {
    std::vector<CompareRow> rows;
    for (int agents : cfg.compare_agents) {
        for (const auto& name : cfg.compare_policies) {
            const PolicyKind kind = policy_kind_from_string(name);
            RunConfig sub = cfg;
            sub.episode.num_agents = agents;
            const auto outcome =
                evaluate_policy(sub, kind, kind == PolicyKind::dqn ? net : nullptr);
            CompareRow row;
            row.policy = name;
            row.agents = agents;
            row.mean_mse = outcome.mean_mse;
            row.median_mse = outcome.median_mse;
            row.endurance_days = outcome.mean_endurance_days;
            row.uplink_bytes = outcome.uplink_bytes;
            row.downlink_bytes = outcome.downlink_bytes;
            row.max_uplink_msg_bytes = outcome.max_uplink_msg_bytes;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_slot_csv(const std::filesystem::path& path, const std::vector<EpisodeLog>& logs) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "episode,slot,agent,dir,spd,x_m,y_m,battery_j,samples,reward,alive,mse,contrast,"
          "uplink_bytes,downlink_bytes\n";
    for (size_t ep = 0; ep < logs.size(); ++ep) {
        const auto& log = logs[ep];
        size_t slot_i = 0;
        for (const auto& row : log.agents) {
            while (slot_i + 1 < log.slots.size() && log.slots[slot_i].slot < row.slot) ++slot_i;
            const auto& s = log.slots[slot_i];
            os << ep << ',' << row.slot << ',' << row.agent << ',' << row.dir << ',' << row.spd << ','
               << format_double(row.x) << ',' << format_double(row.y) << ','
               << format_double(row.battery_j) << ',' << row.samples << ',' << format_double(row.reward)
               << ',' << (row.alive ? 1 : 0) << ',' << format_double(s.mse) << ','
               << format_double(s.contrast) << ',' << s.uplink_bytes << ',' << s.downlink_bytes << '\n';
        }
    }
}

void write_summary_json(const std::filesystem::path& path, const EvalOutcome& outcome,
                        const std::string& policy_name) {
    json j;
    j["policy"] = policy_name;
    j["episodes"] = outcome.logs.size();
    j["mean_mse"] = outcome.mean_mse;
    j["median_mse"] = outcome.median_mse;
    j["iqr_mse"] = json::array({outcome.q25_mse, outcome.q75_mse});
    if (std::isfinite(outcome.mean_endurance_days))
        j["endurance_days"] = outcome.mean_endurance_days;
    else
        j["endurance_days"] = nullptr;
    j["uplink_bytes"] = outcome.uplink_bytes;
    j["downlink_bytes"] = outcome.downlink_bytes;
    j["max_uplink_msg_bytes"] = outcome.max_uplink_msg_bytes;
    json per = json::array();
    for (const auto& log : outcome.logs) {
        json e;
        e["mean_mse"] = log.summary.mean_mse;
        e["mean_contrast"] = log.summary.mean_contrast;
        e["completed_slots"] = log.summary.completed_slots;
        if (std::isfinite(log.summary.endurance_days))
            e["endurance_days"] = log.summary.endurance_days;
        else
            e["endurance_days"] = nullptr;
        per.push_back(e);
    }
    j["per_episode"] = per;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<EpisodeCurve>& curves) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "episode,epsilon,mean_reward,mean_mse,mean_loss,endurance_days\n";
    for (const auto& c : curves)
        os << c.episode << ',' << format_double(c.epsilon) << ',' << format_double(c.mean_reward) << ','
           << format_double(c.mean_mse) << ',' << format_double(c.mean_loss) << ','
           << format_double(c.endurance_days) << '\n';
}

void write_fit_curves_csv(const std::filesystem::path& path, const FitCurves& curves) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "kind,x,empirical,fitted\n";
    for (size_t i = 0; i < curves.dist_m.size(); ++i)
        os << "spatial," << format_double(curves.dist_m[i]) << ',' << format_double(curves.spatial_emp[i])
           << ',' << format_double(curves.spatial_fit[i]) << '\n';
    for (size_t i = 0; i < curves.lag_s.size(); ++i)
        os << "temporal," << format_double(curves.lag_s[i]) << ','
           << format_double(curves.temporal_emp[i]) << ',' << format_double(curves.temporal_fit[i])
           << '\n';
}

void write_kernel_json(const std::filesystem::path& path, const KernelParams& k) {
    json j;
    j["lambda"] = k.lambda;
    j["ell"] = k.ell;
    j["beta0"] = k.beta0;
    j["beta1"] = k.beta1;
    j["beta2"] = k.beta2;
    j["t0_s"] = k.t0_s;
    j["noise_var"] = k.noise_var;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

KernelParams read_kernel_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    json j;
    is >> j;
    KernelParams k;
    k.lambda = j.at("lambda").get<double>();
    k.ell = j.at("ell").get<double>();
    k.beta0 = j.at("beta0").get<double>();
    k.beta1 = j.at("beta1").get<double>();
    k.beta2 = j.at("beta2").get<double>();
    k.t0_s = j.at("t0_s").get<double>();
    k.noise_var = j.at("noise_var").get<double>();
    return k;
}

void write_compare_csv(const std::filesystem::path& path, const std::vector<CompareRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "policy,agents,mean_mse,median_mse,endurance_days,uplink_bytes,downlink_bytes,"
          "max_uplink_msg_bytes\n";
    for (const auto& r : rows)
        os << r.policy << ',' << r.agents << ',' << format_double(r.mean_mse) << ','
           << format_double(r.median_mse) << ',' << format_double(r.endurance_days) << ','
           << r.uplink_bytes << ',' << r.downlink_bytes << ',' << r.max_uplink_msg_bytes << '\n';
}

void write_compare_json(const std::filesystem::path& path, const std::vector<CompareRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json j;
        j["policy"] = r.policy;
        j["agents"] = r.agents;
        j["mean_mse"] = r.mean_mse;
        j["median_mse"] = r.median_mse;
        if (std::isfinite(r.endurance_days))
            j["endurance_days"] = r.endurance_days;
        else
            j["endurance_days"] = nullptr;
        j["uplink_bytes"] = r.uplink_bytes;
        j["downlink_bytes"] = r.downlink_bytes;
        j["max_uplink_msg_bytes"] = r.max_uplink_msg_bytes;
        arr.push_back(j);
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << arr.dump(2) << "\n";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

namespace {

void salinity_rgb(double v01, std::uint8_t* px) {
    // fresh water (deficit 1) plots warm, ocean cold
    const double v = std::clamp(v01, 0.0, 1.0);
    px[0] = static_cast<std::uint8_t>(40 + 215 * v);
    px[1] = static_cast<std::uint8_t>(60 + 80 * v);
    px[2] = static_cast<std::uint8_t>(200 - 170 * v);
}

}  // namespace

void render_frame_png(const std::filesystem::path& path, const FieldFrame& truth, const GridD& estimate,
                      const Domain& domain, double f_ocn,
                      const std::vector<std::vector<Vec2>>& agent_marks) {
    const int scale = std::max(1, 256 / std::max(domain.nx, domain.ny));
    const int pw = domain.nx * scale, ph = domain.ny * scale;
    const int width = pw * 2 + 4;
    std::vector<std::uint8_t> rgb(static_cast<size_t>(width) * ph * 3, 30);

    auto put_panel = [&](int x_off, auto&& value_at) {
        for (int py = 0; py < ph; ++py) {
            for (int px = 0; px < pw; ++px) {
                const int ix = px / scale;
                const int iy = py / scale;
                auto* p = &rgb[(static_cast<size_t>(ph - 1 - py) * width + x_off + px) * 3];
                if (domain.is_land_cell(ix, iy)) {
                    p[0] = p[1] = p[2] = 90;
                    continue;
                }
                salinity_rgb((f_ocn - value_at(ix, iy)) / f_ocn, p);
            }
        }
    };
    put_panel(0, [&](int ix, int iy) { return static_cast<double>(truth.salinity.at(ix, iy)); });
    put_panel(pw + 4, [&](int ix, int iy) { return estimate.at(ix, iy); });

    static constexpr std::uint8_t kAgentColors[][3] = {
        {255, 255, 255}, {255, 220, 0}, {0, 255, 140}, {255, 0, 200}, {0, 220, 255}, {255, 120, 0}};
    for (size_t a = 0; a < agent_marks.size(); ++a) {
        const auto* color = kAgentColors[a % 6];
        for (const auto& m : agent_marks[a]) {
            const int px = std::clamp(static_cast<int>(m.x / domain.width_m * pw), 0, pw - 1);
            const int py = std::clamp(static_cast<int>(m.y / domain.height_m * ph), 0, ph - 1);
            for (int panel = 0; panel < 2; ++panel) {
                auto* p = &rgb[(static_cast<size_t>(ph - 1 - py) * width + panel * (pw + 4) + px) * 3];
                p[0] = color[0];
                p[1] = color[1];
                p[2] = color[2];
            }
        }
    }
    write_png_rgb(path, width, ph, rgb);
}

}  // namespace plume
