// Experiment CLI: fit-kernel, train, evaluate, compare.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "plume/artifacts.hpp"
#include "plume/config.hpp"

namespace fs = std::filesystem;
using namespace plume;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string checkpoint;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "master seed override");
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig cfg = RunConfig::load(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed) cfg.seed = *args.seed;
    if (!args.checkpoint.empty()) cfg.checkpoint = args.checkpoint;
    cfg.resolve();
    fs::create_directories(cfg.out_dir);
    cfg.save(fs::path(cfg.out_dir) / "resolved_config.json");
    return cfg;
}

int cmd_fit_kernel(const CommonArgs& args) {
    RunConfig cfg = RunConfig::load(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed) cfg.seed = *args.seed;
    cfg.kernel_fit = true;  // this command always refits
    cfg.resolve();
    fs::create_directories(cfg.out_dir);
    cfg.save(fs::path(cfg.out_dir) / "resolved_config.json");

    FitCurves curves;
    const auto seq = cfg.fit_sequence();
    const KernelParams params = fit_kernel(*seq, cfg.episode.window_slots * 1800.0, &curves);
    write_kernel_json(fs::path(cfg.out_dir) / "kernel_params.json", params);
    write_fit_curves_csv(fs::path(cfg.out_dir) / "fit_curves.csv", curves);
    std::cout << "fitted kernel: lambda=" << params.lambda << " ell=" << params.ell
              << " beta0=" << params.beta0 << " beta1=" << params.beta1 << " beta2=" << params.beta2
              << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    const fs::path ckpt = fs::path(cfg.out_dir) / "checkpoint.bin";

    std::optional<Checkpoint> resume;
    if (cfg.train_resume && fs::exists(ckpt)) resume = load_checkpoint(ckpt);

    const auto result = train(cfg.world_spec(), cfg.episode, cfg.train, ckpt, &std::cout,
                              resume ? &*resume : nullptr);
    write_curves_csv(fs::path(cfg.out_dir) / "curves.csv", result.curves);
    if (result.diverged) {
        std::cerr << "training diverged at episode " << result.episodes_done
                  << "; last good checkpoint kept\n";
        return 2;
    }
    std::cout << "trained " << result.episodes_done << " episodes; checkpoint at " << ckpt.string()
              << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    std::optional<QNet<float>> net;
    if (cfg.policy == PolicyKind::dqn) {
        if (cfg.checkpoint.empty()) throw std::runtime_error("evaluate with policy=dqn needs --checkpoint");
        const auto ck = load_checkpoint(cfg.checkpoint);
        if (ck.input_res != cfg.episode.state_res)
            throw std::runtime_error("checkpoint state resolution mismatch");
        net.emplace(QNetArch::make(ck.input_res));
        QNet<float> target(net->arch());
        AdamState<float> adam;
        adam.init(net->arch().param_count);
        restore_checkpoint(ck, *net, target, adam);
    }
    const auto outcome = evaluate_policy(cfg, cfg.policy, net ? &*net : nullptr,
                                         cfg.eval.emit_png ? fs::path(cfg.out_dir) / "frames" : fs::path{});
    write_slot_csv(fs::path(cfg.out_dir) / "episodes.csv", outcome.logs);
    write_summary_json(fs::path(cfg.out_dir) / "summary.json", outcome, to_string(cfg.policy));
    std::cout << "policy=" << to_string(cfg.policy) << " episodes=" << outcome.logs.size()
              << " mean_mse=" << outcome.mean_mse << " endurance_days=" << outcome.mean_endurance_days
              << "\n";
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    RunConfig cfg = load_config(args);
    std::optional<QNet<float>> net;
    const bool wants_dqn = std::any_of(cfg.compare_policies.begin(), cfg.compare_policies.end(),
                                       [](const std::string& p) { return p == "dqn"; });
    if (wants_dqn) {
        if (cfg.checkpoint.empty()) throw std::runtime_error("compare with dqn needs --checkpoint");
        const auto ck = load_checkpoint(cfg.checkpoint);
        net.emplace(QNetArch::make(ck.input_res));
        QNet<float> target(net->arch());
        AdamState<float> adam;
        adam.init(net->arch().param_count);
        restore_checkpoint(ck, *net, target, adam);
    }
    const auto rows = compare_policies(cfg, net ? &*net : nullptr);
    write_compare_csv(fs::path(cfg.out_dir) / "comparison.csv", rows);
    write_compare_json(fs::path(cfg.out_dir) / "comparison.json", rows);
    for (const auto& r : rows)
        std::cout << r.policy << " N=" << r.agents << " mean_mse=" << r.mean_mse
                  << " endurance_days=" << r.endurance_days << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plumemap: multi-AUV river plume mapping experiments"};
    app.require_subcommand(1);

    CommonArgs fit_args, train_args, eval_args, cmp_args;
    auto* fit = app.add_subcommand("fit-kernel", "fit kernel hyperparameters to a field sequence");
    add_common(fit, fit_args);
    auto* tr = app.add_subcommand("train", "train the DQN policy");
    add_common(tr, train_args);
    auto* ev = app.add_subcommand("evaluate", "run held-out evaluation episodes");
    add_common(ev, eval_args);
    ev->add_option("--checkpoint", eval_args.checkpoint, "trained checkpoint (dqn policy)");
    auto* cp = app.add_subcommand("compare", "run several policies on identical worlds");
    add_common(cp, cmp_args);
    cp->add_option("--checkpoint", cmp_args.checkpoint, "trained checkpoint (dqn rows)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit_kernel(fit_args);
        if (tr->parsed()) return cmd_train(train_args);
        if (ev->parsed()) return cmd_evaluate(eval_args);
        if (cp->parsed()) return cmd_compare(cmp_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
