#include "plume/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "plume/rng.hpp"

namespace plume {

void TrainHyper::validate() const {
    if (episodes < 0 || pure_explore < 0) throw std::invalid_argument("episode counts must be non-negative");
    if (batch < 1) throw std::invalid_argument("batch must be positive");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma outside [0,1)");
    if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("tau outside (0,1]");
    if (lr < 0.0) throw std::invalid_argument("learning rate must be non-negative");
    if (train_every < 1) throw std::invalid_argument("train_every must be positive");
    if (final_epsilon < 0.0 || final_epsilon > 1.0) throw std::invalid_argument("bad final epsilon");
}

std::shared_ptr<const FieldSequence> make_world(const WorldSpec& spec, int num_slots,
                                                std::uint64_t seed) {
    SynthParams p = spec.params;
    p.seed = seed;
    return std::make_shared<const FieldSequence>(generate_sequence(p, spec.domain, num_slots + 1));
}

namespace {

template <typename S>
void gather_states(const ReplayBuffer& buffer, std::span<const size_t> idx, bool next,
                   typename QNet<S>::Mat& images, typename QNet<S>::Mat& winds) {
    const auto b = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto& tr = buffer.at(idx[static_cast<size_t>(i)]);
        const AgentState& st = next ? *tr.next_state : *tr.state;
        if (images.rows() != static_cast<Eigen::Index>(st.image.size()) || images.cols() != b) {
            images.resize(static_cast<Eigen::Index>(st.image.size()), b);
            winds.resize(2, b);
        }
        for (size_t j = 0; j < st.image.size(); ++j)
            images(static_cast<Eigen::Index>(j), i) = static_cast<S>(st.image[j]);
        winds(0, i) = static_cast<S>(st.wind_angle_norm);
        winds(1, i) = static_cast<S>(st.wind_speed_norm);
    }
}

}  // namespace

template <typename S>
void td_targets(const QNet<S>& target, const typename QNet<S>::Mat& next_images,
                const typename QNet<S>::Mat& next_winds, std::span<const float> rewards,
                std::span<const std::uint8_t> terminals, double gamma, typename QNet<S>::Vec& y_dir,
                typename QNet<S>::Vec& y_spd) {
    const auto b = next_images.cols();
    const auto fwd = target.forward(next_images, next_winds, false);
    y_dir.resize(b);
    y_spd.resize(b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const double r = rewards[static_cast<size_t>(i)];
        if (terminals[static_cast<size_t>(i)]) {
            y_dir(i) = static_cast<S>(r);
            y_spd(i) = static_cast<S>(r);
        } else {
            y_dir(i) = static_cast<S>(r + gamma * fwd.q_dir.col(i).maxCoeff());
            y_spd(i) = static_cast<S>(r + gamma * fwd.q_spd.col(i).maxCoeff());
        }
    }
}

template <typename S>
double train_step(QNet<S>& online, QNet<S>& target, const ReplayBuffer& buffer, AdamState<S>& adam,
                  std::mt19937_64& replay_rng, const TrainHyper& hp) {
    if (buffer.size() < static_cast<size_t>(hp.batch)) throw std::logic_error("replay buffer below batch size");
    const auto idx = buffer.sample_indices(static_cast<size_t>(hp.batch), replay_rng);
    const auto b = static_cast<Eigen::Index>(idx.size());

    typename QNet<S>::Mat images, winds, next_images, next_winds;
    gather_states<S>(buffer, idx, false, images, winds);
    gather_states<S>(buffer, idx, true, next_images, next_winds);

    std::vector<float> rewards(idx.size());
    std::vector<std::uint8_t> terminals(idx.size());
    std::vector<int> a_dir(idx.size()), a_spd(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        const auto& tr = buffer.at(idx[i]);
        rewards[i] = tr.reward;
        terminals[i] = tr.terminal ? 1 : 0;
        a_dir[i] = tr.action.dir;
        a_spd[i] = tr.action.spd;
    }

    typename QNet<S>::Vec y_dir, y_spd;
    td_targets<S>(target, next_images, next_winds, rewards, terminals, hp.gamma, y_dir, y_spd);

    auto fwd = online.forward(images, winds, true);
    typename QNet<S>::Mat dq_dir = QNet<S>::Mat::Zero(QNetArch::kDirActions, b);
    typename QNet<S>::Mat dq_spd = QNet<S>::Mat::Zero(QNetArch::kSpdActions, b);
    double loss_dir = 0.0, loss_spd = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const S ed = fwd.q_dir(a_dir[static_cast<size_t>(i)], i) - y_dir(i);
        const S es = fwd.q_spd(a_spd[static_cast<size_t>(i)], i) - y_spd(i);
        loss_dir += static_cast<double>(ed) * ed;
        loss_spd += static_cast<double>(es) * es;
        dq_dir(a_dir[static_cast<size_t>(i)], i) = ed / static_cast<S>(b);
        dq_spd(a_spd[static_cast<size_t>(i)], i) = es / static_cast<S>(b);
    }
    const double loss = 0.5 * (loss_dir / b + loss_spd / b);
    if (!std::isfinite(loss)) throw std::runtime_error("diverged");

    const auto grad = online.backward(fwd, dq_dir, dq_spd);
    adam.step(online.params(), grad, hp.lr);
    soft_update<S>(target.params(), online.params(), hp.tau);
    return loss;
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
    if (s.empty()) return;
    std::istringstream is(s);
    is >> rng;
}

}  // namespace

TrainResult train(const WorldSpec& world, const EpisodeConfig& episode, const TrainHyper& hp,
                  const std::filesystem::path& checkpoint_path, std::ostream* progress,
                  const Checkpoint* resume_from) {
    hp.validate();
    const auto arch = QNetArch::make(episode.state_res);

    QNet<float> online(arch), target(arch);
    AdamState<float> adam;
    adam.init(arch.param_count);
    std::mt19937_64 replay_rng(hp.replay_seed);
    long start_episode = 0;

    if (resume_from) {
        restore_checkpoint(*resume_from, online, target, adam);
        rng_from_string(replay_rng, resume_from->replay_rng);
        start_episode = resume_from->episode;
    } else {
        online.init(hp.init_seed);
        target.params() = online.params();
    }

    ReplayBuffer buffer(hp.replay_capacity);
    TrainResult res;
    res.arch = arch;
    res.final_checkpoint = make_checkpoint(online, target, adam, start_episode, "", rng_to_string(replay_rng));

    auto save = [&](std::int64_t ep) {
        res.final_checkpoint = make_checkpoint(online, target, adam, ep, "", rng_to_string(replay_rng));
        if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, res.final_checkpoint);
    };
    if (hp.episodes == start_episode) save(start_episode);

    long slot_counter = 0;
    for (long ep = start_episode; ep < hp.episodes; ++ep) {
        const double eps = epsilon_at(ep, hp.episodes, hp.pure_explore, hp.final_epsilon);
        auto seq = make_world(world, episode.num_slots, derive_seed(hp.world_seed_base, static_cast<std::uint64_t>(ep)));
        EpisodeConfig cfg = episode;
        cfg.noise_seed = derive_seed(hp.noise_seed_base, static_cast<std::uint64_t>(ep));
        cfg.policy_seed = derive_seed(hp.explore_seed, static_cast<std::uint64_t>(ep));
        Simulation sim(seq, cfg, PolicyKind::dqn, &online);

        const int n = cfg.num_agents;
        sim.ensure_commands(eps);
        std::vector<std::shared_ptr<const AgentState>> prev_states;
        for (const auto& st : sim.states()) prev_states.push_back(std::make_shared<AgentState>(st));
        std::vector<Action> prev_actions = sim.commands();
        std::vector<bool> was_alive(static_cast<size_t>(n), true);

        double loss_sum = 0.0;
        long loss_count = 0;
        double reward_sum = 0.0;
        long reward_count = 0;
        bool diverged = false;

        for (int k = 1; k <= cfg.num_slots && !diverged; ++k) {
            const bool more = sim.run_slot(k, eps);
            std::vector<std::shared_ptr<const AgentState>> new_states;
            for (const auto& st : sim.states()) new_states.push_back(std::make_shared<AgentState>(st));

            for (int i = 0; i < n; ++i) {
                if (!was_alive[static_cast<size_t>(i)]) continue;
                const bool dead_now = !sim.fleet()[static_cast<size_t>(i)].alive;
                const bool terminal = dead_now || k == cfg.num_slots;
                Transition tr;
                tr.state = prev_states[static_cast<size_t>(i)];
                tr.next_state = new_states[static_cast<size_t>(i)];
                tr.action = prev_actions[static_cast<size_t>(i)];
                tr.reward = static_cast<float>(sim.last_rewards()[static_cast<size_t>(i)]);
                tr.terminal = terminal;
                buffer.push(std::move(tr));
                reward_sum += sim.last_rewards()[static_cast<size_t>(i)];
                ++reward_count;
                if (dead_now) was_alive[static_cast<size_t>(i)] = false;
            }
            prev_states = std::move(new_states);
            prev_actions = sim.commands();

            ++slot_counter;
            if (slot_counter % hp.train_every == 0 && buffer.size() >= static_cast<size_t>(hp.batch)) {
                try {
                    loss_sum += train_step<float>(online, target, buffer, adam, replay_rng, hp);
                    ++loss_count;
                } catch (const std::runtime_error&) {
                    diverged = true;  // keep the last good checkpoint
                }
            }
            if (!more) break;
        }
        sim.finalize();

        EpisodeCurve curve;
        curve.episode = ep;
        curve.epsilon = eps;
        curve.mean_reward = reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0;
        curve.mean_mse = sim.log().summary.mean_mse;
        curve.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        curve.endurance_days = sim.log().summary.endurance_days;
        res.curves.push_back(curve);
        res.episodes_done = ep + 1;

        if (progress && ((ep + 1) % 50 == 0 || ep + 1 == hp.episodes))
            (*progress) << "episode " << (ep + 1) << "/" << hp.episodes << " eps=" << eps
                        << " mse=" << curve.mean_mse << " reward=" << curve.mean_reward
                        << " loss=" << curve.mean_loss << "\n";

        if (diverged) {
            res.diverged = true;
            if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, res.final_checkpoint);
            break;
        }
        if ((ep + 1) % hp.checkpoint_every == 0 || ep + 1 == hp.episodes) save(ep + 1);
    }
    return res;
}

template void td_targets<float>(const QNet<float>&, const QNet<float>::Mat&, const QNet<float>::Mat&,
                                std::span<const float>, std::span<const std::uint8_t>, double,
                                QNet<float>::Vec&, QNet<float>::Vec&);
template void td_targets<double>(const QNet<double>&, const QNet<double>::Mat&, const QNet<double>::Mat&,
                                 std::span<const float>, std::span<const std::uint8_t>, double,
                                 QNet<double>::Vec&, QNet<double>::Vec&);
template double train_step<float>(QNet<float>&, QNet<float>&, const ReplayBuffer&, AdamState<float>&,
                                  std::mt19937_64&, const TrainHyper&);
template double train_step<double>(QNet<double>&, QNet<double>&, const ReplayBuffer&, AdamState<double>&,
                                   std::mt19937_64&, const TrainHyper&);

}  // namespace plume
