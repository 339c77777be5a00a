#include "plume/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plume/rng.hpp"

namespace plume {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& ctx, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw std::invalid_argument("config: " + ctx + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + ctx + key + "'");
}

template <typename T>
void get_to(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

json vec2_list(const std::vector<Vec2>& v) {
    json arr = json::array();
    for (const auto& p : v) arr.push_back(json::array({p.x, p.y}));
    return arr;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

RunConfig RunConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, "", {"seed", "out_dir", "policy", "checkpoint", "world", "kernel", "fit", "episode",
                       "reward", "baseline", "energy", "train", "eval", "compare"});

    RunConfig c;
    get_to(j, "seed", c.seed);
    get_to(j, "out_dir", c.out_dir);
    if (j.contains("policy")) c.policy = policy_kind_from_string(j.at("policy").get<std::string>());
    get_to(j, "checkpoint", c.checkpoint);

    if (j.contains("world")) {
        const auto& w = j.at("world");
        check_keys(w, "world.",
                   {"nx", "ny", "cell_m", "load_path", "f_ocn", "tidal_period_s", "discharge_mean",
                    "discharge_var", "discharge_revert", "tide_mod", "wind_mean_speed", "wind_revert",
                    "wind_noise_sd", "wind_angle_mean", "wind_angle_noise_sd", "sigma_out_frac",
                    "sigma_along_frac", "offset_base_frac", "offset_gain_frac", "tide_excursion_frac",
                    "wind_drift_gain", "wind_drift_decay", "tide_current_mps", "grad_gain", "jet_gain",
                    "wind_current_gain", "current_cap_mps"});
        get_to(w, "nx", c.world_nx);
        get_to(w, "ny", c.world_ny);
        get_to(w, "cell_m", c.world_cell_m);
        get_to(w, "load_path", c.world_load_path);
        auto& p = c.world;
        get_to(w, "f_ocn", p.f_ocn);
        get_to(w, "tidal_period_s", p.tidal_period_s);
        get_to(w, "discharge_mean", p.discharge_mean);
        get_to(w, "discharge_var", p.discharge_var);
        get_to(w, "discharge_revert", p.discharge_revert);
        get_to(w, "tide_mod", p.tide_mod);
        get_to(w, "wind_mean_speed", p.wind_mean_speed);
        get_to(w, "wind_revert", p.wind_revert);
        get_to(w, "wind_noise_sd", p.wind_noise_sd);
        get_to(w, "wind_angle_mean", p.wind_angle_mean);
        get_to(w, "wind_angle_noise_sd", p.wind_angle_noise_sd);
        get_to(w, "sigma_out_frac", p.sigma_out_frac);
        get_to(w, "sigma_along_frac", p.sigma_along_frac);
        get_to(w, "offset_base_frac", p.offset_base_frac);
        get_to(w, "offset_gain_frac", p.offset_gain_frac);
        get_to(w, "tide_excursion_frac", p.tide_excursion_frac);
        get_to(w, "wind_drift_gain", p.wind_drift_gain);
        get_to(w, "wind_drift_decay", p.wind_drift_decay);
        get_to(w, "tide_current_mps", p.tide_current_mps);
        get_to(w, "grad_gain", p.grad_gain);
        get_to(w, "jet_gain", p.jet_gain);
        get_to(w, "wind_current_gain", p.wind_current_gain);
        get_to(w, "current_cap_mps", p.current_cap_mps);
    }

    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        if (k.is_string()) {
            if (k.get<std::string>() != "fit")
                throw std::invalid_argument("config: kernel must be \"fit\" or an object");
            c.kernel_fit = true;
        } else {
            check_keys(k, "kernel.", {"lambda", "ell", "beta0", "beta1", "beta2", "t0_s", "noise_var"});
            c.kernel_fit = false;
            get_to(k, "lambda", c.kernel.lambda);
            get_to(k, "ell", c.kernel.ell);
            get_to(k, "beta0", c.kernel.beta0);
            get_to(k, "beta1", c.kernel.beta1);
            get_to(k, "beta2", c.kernel.beta2);
            get_to(k, "t0_s", c.kernel.t0_s);
            get_to(k, "noise_var", c.kernel.noise_var);
        }
    }
    if (j.contains("fit")) {
        check_keys(j.at("fit"), "fit.", {"slots"});
        get_to(j.at("fit"), "slots", c.fit_slots);
    }

    if (j.contains("episode")) {
        const auto& e = j.at("episode");
        check_keys(e, "episode.",
                   {"agents", "slots", "window_slots", "noise_sd", "state_res", "deploy_arc_m",
                    "initial_positions", "oracle_estimator"});
        get_to(e, "agents", c.episode.num_agents);
        get_to(e, "slots", c.episode.num_slots);
        get_to(e, "window_slots", c.episode.window_slots);
        get_to(e, "noise_sd", c.episode.noise_sd);
        get_to(e, "state_res", c.episode.state_res);
        get_to(e, "deploy_arc_m", c.episode.deploy_arc_m);
        get_to(e, "oracle_estimator", c.episode.oracle_estimator);
        if (e.contains("initial_positions")) {
            c.episode.initial_positions.clear();
            for (const auto& p : e.at("initial_positions")) {
                if (!p.is_array() || p.size() != 2)
                    throw std::invalid_argument("config: initial_positions entries must be [x, y]");
                c.episode.initial_positions.push_back({p[0].get<double>(), p[1].get<double>()});
            }
        }
    }

    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        check_keys(r, "reward.", {"eta0", "eta1", "eta2", "eta3"});
        get_to(r, "eta0", c.episode.reward.eta0);
        get_to(r, "eta1", c.episode.reward.eta1);
        get_to(r, "eta2", c.episode.reward.eta2);
        get_to(r, "eta3", c.episode.reward.eta3);
    }

    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        check_keys(b, "baseline.",
                   {"uniform_budget", "uniform_bias_frac", "rotation_radius_m", "eibv_threshold_psu"});
        get_to(b, "uniform_budget", c.episode.uniform_budget);
        get_to(b, "uniform_bias_frac", c.episode.uniform_bias_frac);
        get_to(b, "rotation_radius_m", c.episode.rotation_radius_m);
        get_to(b, "eibv_threshold_psu", c.episode.eibv.front_threshold_psu);
    }

    if (j.contains("energy")) {
        check_keys(j.at("energy"), "energy.", {"battery_j"});
        double battery = EnergyModel::kDefaultBatteryJ;
        get_to(j.at("energy"), "battery_j", battery);
        c.episode.energy = EnergyModel::calibrated(battery);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train.",
                   {"episodes", "pure_explore", "final_epsilon", "lr", "gamma", "tau", "batch",
                    "replay_capacity", "train_every", "checkpoint_every", "resume"});
        get_to(t, "episodes", c.train.episodes);
        get_to(t, "pure_explore", c.train.pure_explore);
        get_to(t, "final_epsilon", c.train.final_epsilon);
        get_to(t, "lr", c.train.lr);
        get_to(t, "gamma", c.train.gamma);
        get_to(t, "tau", c.train.tau);
        get_to(t, "batch", c.train.batch);
        get_to(t, "replay_capacity", c.train.replay_capacity);
        get_to(t, "train_every", c.train.train_every);
        get_to(t, "checkpoint_every", c.train.checkpoint_every);
        get_to(t, "resume", c.train_resume);
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, "eval.", {"episodes", "jobs", "emit_png", "png_every"});
        get_to(e, "episodes", c.eval.episodes);
        get_to(e, "jobs", c.eval.jobs);
        get_to(e, "emit_png", c.eval.emit_png);
        get_to(e, "png_every", c.eval.png_every);
    }

    if (j.contains("compare")) {
        const auto& cm = j.at("compare");
        check_keys(cm, "compare.", {"policies", "agents"});
        if (cm.contains("policies")) {
            c.compare_policies.clear();
            for (const auto& p : cm.at("policies")) {
                policy_kind_from_string(p.get<std::string>());  // validate early
                c.compare_policies.push_back(p.get<std::string>());
            }
        }
        if (cm.contains("agents")) {
            c.compare_agents.clear();
            for (const auto& n : cm.at("agents")) c.compare_agents.push_back(n.get<int>());
        }
    }
    return c;
}

std::string RunConfig::to_json_string() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["policy"] = to_string(policy);
    j["checkpoint"] = checkpoint;
    json w;
    w["nx"] = world_nx;
    w["ny"] = world_ny;
    w["cell_m"] = world_cell_m;
    w["load_path"] = world_load_path;
    w["f_ocn"] = world.f_ocn;
    w["tidal_period_s"] = world.tidal_period_s;
    w["discharge_mean"] = world.discharge_mean;
    w["discharge_var"] = world.discharge_var;
    w["discharge_revert"] = world.discharge_revert;
    w["tide_mod"] = world.tide_mod;
    w["wind_mean_speed"] = world.wind_mean_speed;
    w["wind_revert"] = world.wind_revert;
    w["wind_noise_sd"] = world.wind_noise_sd;
    w["wind_angle_mean"] = world.wind_angle_mean;
    w["wind_angle_noise_sd"] = world.wind_angle_noise_sd;
    w["sigma_out_frac"] = world.sigma_out_frac;
    w["sigma_along_frac"] = world.sigma_along_frac;
    w["offset_base_frac"] = world.offset_base_frac;
    w["offset_gain_frac"] = world.offset_gain_frac;
    w["tide_excursion_frac"] = world.tide_excursion_frac;
    w["wind_drift_gain"] = world.wind_drift_gain;
    w["wind_drift_decay"] = world.wind_drift_decay;
    w["tide_current_mps"] = world.tide_current_mps;
    w["grad_gain"] = world.grad_gain;
    w["jet_gain"] = world.jet_gain;
    w["wind_current_gain"] = world.wind_current_gain;
    w["current_cap_mps"] = world.current_cap_mps;
    j["world"] = w;
    if (kernel_fit) {
        j["kernel"] = "fit";
    } else {
        json k;
        k["lambda"] = kernel.lambda;
        k["ell"] = kernel.ell;
        k["beta0"] = kernel.beta0;
        k["beta1"] = kernel.beta1;
        k["beta2"] = kernel.beta2;
        k["t0_s"] = kernel.t0_s;
        k["noise_var"] = kernel.noise_var;
        j["kernel"] = k;
    }
    j["fit"] = {{"slots", fit_slots}};
    j["episode"] = {{"agents", episode.num_agents},
                    {"slots", episode.num_slots},
                    {"window_slots", episode.window_slots},
                    {"noise_sd", episode.noise_sd},
                    {"state_res", episode.state_res},
                    {"deploy_arc_m", episode.deploy_arc_m},
                    {"initial_positions", vec2_list(episode.initial_positions)},
                    {"oracle_estimator", episode.oracle_estimator}};
    j["reward"] = {{"eta0", episode.reward.eta0},
                   {"eta1", episode.reward.eta1},
                   {"eta2", episode.reward.eta2},
                   {"eta3", episode.reward.eta3}};
    j["baseline"] = {{"uniform_budget", episode.uniform_budget},
                     {"uniform_bias_frac", episode.uniform_bias_frac},
                     {"rotation_radius_m", episode.rotation_radius_m},
                     {"eibv_threshold_psu", episode.eibv.front_threshold_psu}};
    j["energy"] = {{"battery_j", episode.energy.battery_capacity_j}};
    j["train"] = {{"episodes", train.episodes},
                  {"pure_explore", train.pure_explore},
                  {"final_epsilon", train.final_epsilon},
                  {"lr", train.lr},
                  {"gamma", train.gamma},
                  {"tau", train.tau},
                  {"batch", train.batch},
                  {"replay_capacity", train.replay_capacity},
                  {"train_every", train.train_every},
                  {"checkpoint_every", train.checkpoint_every},
                  {"resume", train_resume}};
    j["eval"] = {{"episodes", eval.episodes},
                 {"jobs", eval.jobs},
                 {"emit_png", eval.emit_png},
                 {"png_every", eval.png_every}};
    json cp = json::array();
    for (const auto& p : compare_policies) cp.push_back(p);
    json ca = json::array();
    for (int n : compare_agents) ca.push_back(n);
    j["compare"] = {{"policies", cp}, {"agents", ca}};
    return j.dump(2) + "\n";
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << to_json_string();
}

WorldSpec RunConfig::world_spec() const {
    WorldSpec spec;
    spec.params = world;
    spec.domain = Domain::coastal(world_nx, world_ny, world_cell_m);
    return spec;
}

std::shared_ptr<const FieldSequence> RunConfig::fit_sequence() const {
    if (!world_load_path.empty())
        return std::make_shared<const FieldSequence>(load_sequence(world_load_path));
    SynthParams p = world;
    p.seed = derive_seed(seed, 0xF17);
    return std::make_shared<const FieldSequence>(
        generate_sequence(p, Domain::coastal(world_nx, world_ny, world_cell_m), fit_slots));
}

std::shared_ptr<const FieldSequence> RunConfig::make_eval_world(int episode_index) const {
    if (!world_load_path.empty())
        return std::make_shared<const FieldSequence>(load_sequence(world_load_path));
    SynthParams p = world;
    p.seed = derive_seed(eval.seed, static_cast<std::uint64_t>(episode_index));
    return std::make_shared<const FieldSequence>(generate_sequence(
        p, Domain::coastal(world_nx, world_ny, world_cell_m), episode.num_slots + 1));
}

void RunConfig::resolve() {
    // stream seeds all derive from the master seed
    train.init_seed = derive_seed(seed, 2);
    train.replay_seed = derive_seed(seed, 3);
    train.explore_seed = derive_seed(seed, 4);
    train.world_seed_base = derive_seed(seed, 5);
    train.noise_seed_base = derive_seed(seed, 6);
    episode.noise_seed = derive_seed(seed, 7);
    episode.policy_seed = derive_seed(seed, 8);
    eval.seed = derive_seed(seed, 9);

    if (episode.num_agents < 1 || episode.num_slots < 1)
        throw std::invalid_argument("config: episode needs at least one agent and one slot");
    if (eval.episodes < 0 || eval.jobs < 1) throw std::invalid_argument("config: bad eval section");
    train.validate();
    episode.reward.validate();

    if (kernel_fit) {
        kernel = fit_kernel(*fit_sequence(), episode.window_slots * 1800.0);
        kernel_fit = false;
    }
    kernel.validate(episode.window_slots * 1800.0);
    episode.kernel = kernel;
    resolved = true;
}

}  // namespace plume
