#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>

namespace plume {

/// Multi-head dueling Q-network over the 3-channel state image plus wind:
/// 3 conv layers (8/16/32 filters, stride 2), a 2->16->16 wind embedder,
/// two 128-wide fully connected layers, then a shared value head and
/// direction/speed advantage heads with mean-centered duelling composition.
struct QNetArch {
    int input_res = 64;
    int h1 = 0, h2 = 0, h3 = 0;
    int flat = 0;      // 32 * h3 * h3
    int trunk_in = 0;  // flat + wind embedding
    long param_count = 0;

    static QNetArch make(int input_res);
    bool operator==(const QNetArch& o) const = default;

    static constexpr int kC0 = 3, kC1 = 8, kC2 = 16, kC3 = 32;
    static constexpr int kK1 = 5, kK2 = 3, kK3 = 3, kStride = 2;
    static constexpr int kWindIn = 2, kWindHidden = 16, kWindOut = 16;
    static constexpr int kFc = 128;
    static constexpr int kDirActions = 8, kSpdActions = 2;
};

template <typename S>
class QNet {
public:
    using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

    QNet() = default;
    explicit QNet(const QNetArch& arch);

    /// Glorot-uniform weights, zero biases, deterministic under the seed.
    void init(std::uint64_t seed);

    const QNetArch& arch() const { return arch_; }
    Vec& params() { return w_; }
    const Vec& params() const { return w_; }

    struct Forward {
        Mat q_dir;  // 8 x B
        Mat q_spd;  // 2 x B
        Vec value;  // B
        // caches for backward
        Mat p1, p2, p3;      // im2col patch matrices
        Mat a1, a2, a3;      // conv activations (post-relu, filter-major)
        Mat x;               // trunk input (flattened conv + wind embedding)
        Mat winds;
        Mat wind_h, wind_e;  // wind embedder activations
        Mat t1, t2;          // trunk activations
    };

    /// images: (3*R*R) x B column-per-sample in [c][y][x] order;
    /// winds: 2 x B.
    Forward forward(const Mat& images, const Mat& winds, bool keep_cache) const;

    /// Gradient of sum_b <dq_dir(:,b), q_dir(:,b)> + <dq_spd(:,b), q_spd(:,b)>
    /// with respect to the flat parameter vector.
    Vec backward(const Forward& fwd, const Mat& dq_dir, const Mat& dq_spd) const;

    /// Convenience single-state evaluation.
    void q_single(const Vec& image, S wind_a, S wind_s, std::array<S, 8>& q_dir,
                  std::array<S, 2>& q_spd, S& value) const;

private:
    QNetArch arch_;
    Vec w_;

    struct Views;  // named slices into the flat parameter vector
};

template <typename S>
struct AdamState {
    using Vec = typename QNet<S>::Vec;
    Vec m, v;
    long t = 0;

    void init(long n) {
        m = Vec::Zero(n);
        v = Vec::Zero(n);
        t = 0;
    }
    /// Bias-corrected adaptive-moment step.
    void step(Vec& params, const Vec& grad, double lr, double beta1 = 0.9, double beta2 = 0.999,
              double eps = 1e-8);
};

/// target <- tau * online + (1 - tau) * target.
template <typename S>
void soft_update(typename QNet<S>::Vec& target, const typename QNet<S>::Vec& online, double tau) {
    target = (tau * online + (1.0 - tau) * target).eval();
}

extern template class QNet<float>;
extern template class QNet<double>;
extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace plume
