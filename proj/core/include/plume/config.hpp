#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "plume/episode.hpp"
#include "plume/trainer.hpp"

namespace plume {

/// Whole-run configuration, loaded from one JSON file. Unknown keys are
/// rejected; omitted keys take the defaults below; the resolved copy written
/// next to every command's outputs replays bit-identically.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    PolicyKind policy = PolicyKind::dqn;
    std::string checkpoint;  // dqn evaluate/compare input

    // world (synthetic unless load_path set)
    int world_nx = 64;
    int world_ny = 64;
    double world_cell_m = 200.0;
    SynthParams world;
    std::string world_load_path;

    // kernel: fitted at resolve time unless given explicitly
    bool kernel_fit = true;
    KernelParams kernel;
    int fit_slots = 200;

    EpisodeConfig episode;
    TrainHyper train;
    bool train_resume = false;

    struct Eval {
        int episodes = 5;
        int jobs = 1;
        bool emit_png = false;
        int png_every = 25;
        std::uint64_t seed = 0;  // derived from the master seed at resolve
    } eval;

    std::vector<std::string> compare_policies = {"uniform", "rotations"};
    std::vector<int> compare_agents = {3};

    bool resolved = false;

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig parse(const std::string& json_text);
    std::string to_json_string() const;
    void save(const std::filesystem::path& path) const;

    /// Derives all stream seeds from the master seed, fits the kernel when
    /// requested, and validates. Idempotent.
    void resolve();

    WorldSpec world_spec() const;
    /// Synthetic per-episode world (or the loaded sequence when load_path is
    /// set, which ignores the seed).
    std::shared_ptr<const FieldSequence> make_eval_world(int episode_index) const;
    std::shared_ptr<const FieldSequence> fit_sequence() const;
};

}  // namespace plume
