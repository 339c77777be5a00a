#include "plume/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plume/rng.hpp"

namespace plume {

float recency_intensity(int rank) {
    return static_cast<float>(1.0 / (1.0 + std::log(1.0 + static_cast<double>(rank))));
}

namespace {

double bilinear_d(const GridD& g, const Domain& dom, const Vec2& p) {
    const double u = p.x / dom.cell_w() - 0.5;
    const double v = p.y / dom.cell_h() - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, dom.nx - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(v)), 0, dom.ny - 2);
    const double fx = std::clamp(u - i0, 0.0, 1.0);
    const double fy = std::clamp(v - j0, 0.0, 1.0);
    const double a = g.at(i0, j0) * (1.0 - fx) + g.at(i0 + 1, j0) * fx;
    const double b = g.at(i0, j0 + 1) * (1.0 - fx) + g.at(i0 + 1, j0 + 1) * fx;
    return a * (1.0 - fy) + b * fy;
}

struct Mark {
    Vec2 pos;
    double t;
};

void rasterize_marks(std::span<const SampleSet> history, const Domain& dom, int channel, int res,
                     std::vector<float>& image) {
    std::vector<Mark> marks;
    for (const auto& set : history)
        for (const auto& rec : set.records) marks.push_back({rec.x, rec.t});
    // newest first; stable so simultaneous records keep insertion order
    std::stable_sort(marks.begin(), marks.end(), [](const Mark& a, const Mark& b) { return a.t > b.t; });
    for (size_t r = 0; r < marks.size(); ++r) {
        const int px = std::clamp(static_cast<int>(marks[r].pos.x / dom.width_m * res), 0, res - 1);
        const int py = std::clamp(static_cast<int>(marks[r].pos.y / dom.height_m * res), 0, res - 1);
        const size_t idx =
            static_cast<size_t>(channel) * res * res + static_cast<size_t>(py) * res + px;
        image[idx] = std::max(image[idx], recency_intensity(static_cast<int>(r)));
    }
}

}  // namespace

AgentState render_state(const GridD& estimate, const Domain& domain, double f_ocn,
                        std::span<const SampleSet> own_history,
                        std::span<const SampleSet> teammate_history, const Wind& wind, int res) {
    if (estimate.nx() != domain.nx || estimate.ny() != domain.ny)
        throw std::invalid_argument("estimate grid must cover the evaluation domain");
    AgentState s;
    s.res = res;
    s.image.assign(static_cast<size_t>(3) * res * res, 0.0f);

    for (int py = 0; py < res; ++py) {
        for (int px = 0; px < res; ++px) {
            const Vec2 p{(px + 0.5) / res * domain.width_m, (py + 0.5) / res * domain.height_m};
            const double est = bilinear_d(estimate, domain, p);
            const double v = std::clamp((f_ocn - est) / f_ocn, 0.0, 1.0);
            s.image[static_cast<size_t>(py) * res + px] = static_cast<float>(v);
        }
    }
    rasterize_marks(own_history, domain, 1, res, s.image);
    rasterize_marks(teammate_history, domain, 2, res, s.image);

    double angle = std::fmod(wind.angle_rad, kTwoPi);
    if (angle < 0.0) angle += kTwoPi;
    s.wind_angle_norm = static_cast<float>(angle / kTwoPi);
    s.wind_speed_norm = static_cast<float>(std::clamp(wind.speed_mps / kWindSpeedNorm, 0.0, 1.0));
    return s;
}

template <typename S>
std::vector<Action> select_actions(const QNet<S>& net, std::span<const AgentState> states, double epsilon,
                                   std::mt19937_64& rng) {
    const auto n = static_cast<Eigen::Index>(states.size());
    std::vector<Action> actions(states.size());
    if (n == 0) return actions;

    typename QNet<S>::Mat images(net.arch().input_res * net.arch().input_res * 3, n);
    typename QNet<S>::Mat winds(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& st = states[static_cast<size_t>(i)];
        if (st.res != net.arch().input_res) throw std::invalid_argument("state resolution mismatch");
        for (size_t j = 0; j < st.image.size(); ++j)
            images(static_cast<Eigen::Index>(j), i) = static_cast<S>(st.image[j]);
        winds(0, i) = static_cast<S>(st.wind_angle_norm);
        winds(1, i) = static_cast<S>(st.wind_speed_norm);
    }
    const auto fwd = net.forward(images, winds, false);

    auto argmax_col = [](const auto& mat, Eigen::Index col) {
        int best = 0;
        for (Eigen::Index r = 1; r < mat.rows(); ++r)
            if (mat(r, col) > mat(best, col)) best = static_cast<int>(r);
        return best;
    };

    for (Eigen::Index i = 0; i < n; ++i) {
        auto& a = actions[static_cast<size_t>(i)];
        if (uniform(rng, 0.0, 1.0) < epsilon)
            a.dir = uniform_int(rng, 0, QNetArch::kDirActions - 1);
        else
            a.dir = argmax_col(fwd.q_dir, i);
        if (uniform(rng, 0.0, 1.0) < epsilon)
            a.spd = uniform_int(rng, 0, QNetArch::kSpdActions - 1);
        else
            a.spd = argmax_col(fwd.q_spd, i);
    }
    return actions;
}

double contrast_score(const FieldFrame& frame, const Domain& domain, double f_ocn) {
    double sum = 0.0;
    int count = 0;
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            if (domain.is_land_cell(ix, iy)) continue;
            sum += frame.salinity.at(ix, iy);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no water cells");
    return std::abs(f_ocn - sum / count);
}

void RewardWeights::validate() const {
    if (eta0 < 0 || eta1 < 0 || eta2 < 0 || eta3 < 0)
        throw std::invalid_argument("reward weights must be non-negative");
}

std::vector<double> compute_rewards(const FieldFrame& truth, const Domain& domain, double f_ocn,
                                    const GridD& prev_estimate, double mse_k, double contrast_k,
                                    std::span<const SampleSet> slot_samples, std::span<const double> speeds,
                                    const RewardWeights& w) {
    (void)f_ocn;
    if (slot_samples.size() != speeds.size()) throw std::invalid_argument("mismatched agent counts");
    w.validate();

    double speed_sum = 0.0;
    for (double v : speeds) speed_sum += v;
    const double global = -w.eta0 * mse_k + w.eta1 * contrast_k / (1.0 + mse_k) - w.eta2 * speed_sum;

    std::vector<double> rewards(slot_samples.size(), global);
    GridD truth_d(domain.nx, domain.ny);
    for (size_t i = 0; i < truth_d.size(); ++i) truth_d.raw()[i] = truth.salinity.raw()[i];

    for (size_t a = 0; a < slot_samples.size(); ++a) {
        double credit = 0.0;
        for (const auto& rec : slot_samples[a].records) {
            const double prev = bilinear_d(prev_estimate, domain, rec.x);
            const double actual = bilinear_d(truth_d, domain, rec.x);
            credit += (prev - actual) * (prev - actual);
        }
        rewards[a] += w.eta3 * credit;
    }
    return rewards;
}

double epsilon_at(long episode, long total_episodes, long pure_explore, double final_eps) {
    if (episode < pure_explore) return 1.0;
    if (episode >= total_episodes) return final_eps;
    const double frac =
        static_cast<double>(episode - pure_explore) / static_cast<double>(total_episodes - pure_explore);
    return 1.0 + (final_eps - 1.0) * frac;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("capacity must be positive");
    storage_.reserve(std::min<size_t>(capacity, 1 << 20));
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
    } else {
        storage_[head_] = std::move(t);  // strict FIFO eviction
        head_ = (head_ + 1) % capacity_;
    }
    ++total_pushed_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t n, std::mt19937_64& rng) const {
    if (storage_.empty()) throw std::logic_error("sampling from empty replay buffer");
    std::vector<size_t> idx(n);
    for (auto& i : idx) i = static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(storage_.size()) - 1));
    return idx;
}

template std::vector<Action> select_actions<float>(const QNet<float>&, std::span<const AgentState>, double,
                                                   std::mt19937_64&);
template std::vector<Action> select_actions<double>(const QNet<double>&, std::span<const AgentState>, double,
                                                    std::mt19937_64&);

}  // namespace plume
