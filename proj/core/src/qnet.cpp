#include "plume/qnet.hpp"

#include <stdexcept>

#include "plume/rng.hpp"

namespace plume {

QNetArch QNetArch::make(int input_res) {
    auto conv_out = [](int h, int k) { return (h - k) / kStride + 1; };
    QNetArch a;
    a.input_res = input_res;
    a.h1 = conv_out(input_res, kK1);
    a.h2 = conv_out(a.h1, kK2);
    a.h3 = conv_out(a.h2, kK3);
    if (input_res < kK1 || a.h1 < kK2 || a.h2 < kK3 || a.h3 < 1)
        throw std::invalid_argument("state image resolution too small for the conv stack");
    a.flat = kC3 * a.h3 * a.h3;
    a.trunk_in = a.flat + kWindOut;

    long n = 0;
    n += static_cast<long>(kC1) * (kC0 * kK1 * kK1) + kC1;
    n += static_cast<long>(kC2) * (kC1 * kK2 * kK2) + kC2;
    n += static_cast<long>(kC3) * (kC2 * kK3 * kK3) + kC3;
    n += static_cast<long>(kWindHidden) * kWindIn + kWindHidden;
    n += static_cast<long>(kWindOut) * kWindHidden + kWindOut;
    n += static_cast<long>(kFc) * a.trunk_in + kFc;
    n += static_cast<long>(kFc) * kFc + kFc;
    n += static_cast<long>(kFc) + 1;
    n += static_cast<long>(kDirActions) * kFc + kDirActions;
    n += static_cast<long>(kSpdActions) * kFc + kSpdActions;
    a.param_count = n;
    return a;
}

namespace {

struct Slice {
    long w_off, w_rows, w_cols;
    long b_off, b_len;
};

/// Parameter layout: for each layer, the weight block then the bias block.
struct Layout {
    Slice conv1, conv2, conv3, wind1, wind2, fc1, fc2, val, dir, spd;
    long total = 0;

    explicit Layout(const QNetArch& a) {
        long off = 0;
        auto add = [&off](long rows, long cols) {
            Slice s{off, rows, cols, off + rows * cols, rows};
            off += rows * cols + rows;
            return s;
        };
        conv1 = add(QNetArch::kC1, QNetArch::kC0 * QNetArch::kK1 * QNetArch::kK1);
        conv2 = add(QNetArch::kC2, QNetArch::kC1 * QNetArch::kK2 * QNetArch::kK2);
        conv3 = add(QNetArch::kC3, QNetArch::kC2 * QNetArch::kK3 * QNetArch::kK3);
        wind1 = add(QNetArch::kWindHidden, QNetArch::kWindIn);
        wind2 = add(QNetArch::kWindOut, QNetArch::kWindHidden);
        fc1 = add(QNetArch::kFc, a.trunk_in);
        fc2 = add(QNetArch::kFc, QNetArch::kFc);
        val = add(1, QNetArch::kFc);
        dir = add(QNetArch::kDirActions, QNetArch::kFc);
        spd = add(QNetArch::kSpdActions, QNetArch::kFc);
        total = off;
    }
};

template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S, typename V>
Eigen::Map<MatT<S>> weight(V& w, const Slice& s) {
    return Eigen::Map<MatT<S>>(w.data() + s.w_off, s.w_rows, s.w_cols);
}
template <typename S, typename V>
Eigen::Map<const MatT<S>> weight_c(const V& w, const Slice& s) {
    return Eigen::Map<const MatT<S>>(w.data() + s.w_off, s.w_rows, s.w_cols);
}
template <typename S, typename V>
Eigen::Map<VecT<S>> bias(V& w, const Slice& s) {
    return Eigen::Map<VecT<S>>(w.data() + s.b_off, s.b_len);
}
template <typename S, typename V>
Eigen::Map<const VecT<S>> bias_c(const V& w, const Slice& s) {
    return Eigen::Map<const VecT<S>>(w.data() + s.b_off, s.b_len);
}

/// input: (C*H*H) x B, channel-major per column -> patches (C*k*k) x (O*O*B).
template <typename S>
MatT<S> im2col(const MatT<S>& input, int channels, int h, int k, int stride, int out) {
    const auto batch = input.cols();
    MatT<S> p(channels * k * k, static_cast<long>(out) * out * batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int oy = 0; oy < out; ++oy) {
            for (int ox = 0; ox < out; ++ox) {
                const Eigen::Index col = b * out * out + oy * out + ox;
                for (int c = 0; c < channels; ++c) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride + ky;
                        const Eigen::Index src = static_cast<Eigen::Index>(c) * h * h + iy * h + ox * stride;
                        const Eigen::Index dst = (static_cast<Eigen::Index>(c) * k + ky) * k;
                        for (int kx = 0; kx < k; ++kx) p(dst + kx, col) = input(src + kx, b);
                    }
                }
            }
        }
    }
    return p;
}

/// Scatter-add of patch gradients back onto the input layout.
template <typename S>
MatT<S> col2im(const MatT<S>& dp, int channels, int h, int k, int stride, int out, Eigen::Index batch) {
    MatT<S> di = MatT<S>::Zero(static_cast<long>(channels) * h * h, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        for (int oy = 0; oy < out; ++oy) {
            for (int ox = 0; ox < out; ++ox) {
                const Eigen::Index col = b * out * out + oy * out + ox;
                for (int c = 0; c < channels; ++c) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride + ky;
                        const Eigen::Index dst = static_cast<Eigen::Index>(c) * h * h + iy * h + ox * stride;
                        const Eigen::Index src = (static_cast<Eigen::Index>(c) * k + ky) * k;
                        for (int kx = 0; kx < k; ++kx) di(dst + kx, b) += dp(src + kx, col);
                    }
                }
            }
        }
    }
    return di;
}

/// conv output (C x O*O*B, filter-major) -> next layer input ((C*O*O) x B).
template <typename S>
MatT<S> to_input_layout(const MatT<S>& o, int channels, int out, Eigen::Index batch) {
    MatT<S> r(static_cast<long>(channels) * out * out, batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c)
            for (int p = 0; p < out * out; ++p)
                r(static_cast<Eigen::Index>(c) * out * out + p, b) = o(c, b * out * out + p);
    return r;
}

template <typename S>
MatT<S> to_filter_layout(const MatT<S>& i, int channels, int out, Eigen::Index batch) {
    MatT<S> r(channels, static_cast<long>(out) * out * batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        for (int c = 0; c < channels; ++c)
            for (int p = 0; p < out * out; ++p)
                r(c, b * out * out + p) = i(static_cast<Eigen::Index>(c) * out * out + p, b);
    return r;
}

template <typename S>
MatT<S> relu_mask(const MatT<S>& post, const MatT<S>& grad) {
    return ((post.array() > S(0)).template cast<S>() * grad.array()).matrix();
}

}  // namespace

template <typename S>
QNet<S>::QNet(const QNetArch& arch) : arch_(arch) {
    w_ = Vec::Zero(arch_.param_count);
}

template <typename S>
void QNet<S>::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Layout ly(arch_);
    w_.setZero();
    for (const Slice* s : {&ly.conv1, &ly.conv2, &ly.conv3, &ly.wind1, &ly.wind2, &ly.fc1, &ly.fc2,
                           &ly.val, &ly.dir, &ly.spd}) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s->w_rows + s->w_cols));
        for (long i = 0; i < s->w_rows * s->w_cols; ++i)
            w_(s->w_off + i) = static_cast<S>(uniform(rng, -limit, limit));
    }
}

template <typename S>
typename QNet<S>::Forward QNet<S>::forward(const Mat& images, const Mat& winds, bool keep_cache) const {
    if (images.rows() != static_cast<long>(QNetArch::kC0) * arch_.input_res * arch_.input_res)
        throw std::invalid_argument("image rows mismatch");
    if (winds.cols() != images.cols() || winds.rows() != QNetArch::kWindIn)
        throw std::invalid_argument("wind dims mismatch");
    const auto batch = images.cols();
    const Layout ly(arch_);

    Forward f;
    // conv stack
    Mat p1 = im2col<S>(images, QNetArch::kC0, arch_.input_res, QNetArch::kK1, QNetArch::kStride, arch_.h1);
    Mat a1 = (weight_c<S>(w_, ly.conv1) * p1).colwise() + bias_c<S>(w_, ly.conv1);
    a1 = a1.cwiseMax(S(0));
    Mat i2 = to_input_layout<S>(a1, QNetArch::kC1, arch_.h1, batch);
    Mat p2 = im2col<S>(i2, QNetArch::kC1, arch_.h1, QNetArch::kK2, QNetArch::kStride, arch_.h2);
    Mat a2 = (weight_c<S>(w_, ly.conv2) * p2).colwise() + bias_c<S>(w_, ly.conv2);
    a2 = a2.cwiseMax(S(0));
    Mat i3 = to_input_layout<S>(a2, QNetArch::kC2, arch_.h2, batch);
    Mat p3 = im2col<S>(i3, QNetArch::kC2, arch_.h2, QNetArch::kK3, QNetArch::kStride, arch_.h3);
    Mat a3 = (weight_c<S>(w_, ly.conv3) * p3).colwise() + bias_c<S>(w_, ly.conv3);
    a3 = a3.cwiseMax(S(0));

    // wind embedder
    Mat wind_h = ((weight_c<S>(w_, ly.wind1) * winds).colwise() + bias_c<S>(w_, ly.wind1)).cwiseMax(S(0));
    Mat wind_e = ((weight_c<S>(w_, ly.wind2) * wind_h).colwise() + bias_c<S>(w_, ly.wind2)).cwiseMax(S(0));

    // trunk
    Mat x(arch_.trunk_in, batch);
    x.topRows(arch_.flat) = to_input_layout<S>(a3, QNetArch::kC3, arch_.h3, batch);
    x.bottomRows(QNetArch::kWindOut) = wind_e;
    Mat t1 = ((weight_c<S>(w_, ly.fc1) * x).colwise() + bias_c<S>(w_, ly.fc1)).cwiseMax(S(0));
    Mat t2 = ((weight_c<S>(w_, ly.fc2) * t1).colwise() + bias_c<S>(w_, ly.fc2)).cwiseMax(S(0));

    // heads with mean-centered advantages
    Mat value = (weight_c<S>(w_, ly.val) * t2).colwise() + bias_c<S>(w_, ly.val);  // 1 x B
    Mat adv_dir = (weight_c<S>(w_, ly.dir) * t2).colwise() + bias_c<S>(w_, ly.dir);
    Mat adv_spd = (weight_c<S>(w_, ly.spd) * t2).colwise() + bias_c<S>(w_, ly.spd);

    f.q_dir = adv_dir;
    f.q_dir.rowwise() -= adv_dir.colwise().mean();
    f.q_dir.rowwise() += value.row(0);
    f.q_spd = adv_spd;
    f.q_spd.rowwise() -= adv_spd.colwise().mean();
    f.q_spd.rowwise() += value.row(0);
    f.value = value.row(0).transpose();

    if (keep_cache) {
        f.p1 = std::move(p1);
        f.p2 = std::move(p2);
        f.p3 = std::move(p3);
        f.a1 = std::move(a1);
        f.a2 = std::move(a2);
        f.a3 = std::move(a3);
        f.x = std::move(x);
        f.winds = winds;
        f.wind_h = std::move(wind_h);
        f.wind_e = std::move(wind_e);
        f.t1 = std::move(t1);
        f.t2 = std::move(t2);
    }
    return f;
}

template <typename S>
typename QNet<S>::Vec QNet<S>::backward(const Forward& f, const Mat& dq_dir, const Mat& dq_spd) const {
    const Layout ly(arch_);
    const auto batch = f.t2.cols();
    Vec grad = Vec::Zero(arch_.param_count);

    // dueling composition
    Mat dvalue = dq_dir.colwise().sum() + dq_spd.colwise().sum();  // 1 x B
    Mat dadv_dir = dq_dir;
    dadv_dir.rowwise() -= dq_dir.colwise().sum() / S(QNetArch::kDirActions);
    Mat dadv_spd = dq_spd;
    dadv_spd.rowwise() -= dq_spd.colwise().sum() / S(QNetArch::kSpdActions);

    weight<S>(grad, ly.val) = dvalue * f.t2.transpose();
    bias<S>(grad, ly.val)(0) = dvalue.sum();
    weight<S>(grad, ly.dir) = dadv_dir * f.t2.transpose();
    bias<S>(grad, ly.dir) = dadv_dir.rowwise().sum();
    weight<S>(grad, ly.spd) = dadv_spd * f.t2.transpose();
    bias<S>(grad, ly.spd) = dadv_spd.rowwise().sum();

    Mat dt2 = weight_c<S>(w_, ly.val).transpose() * dvalue +
              weight_c<S>(w_, ly.dir).transpose() * dadv_dir +
              weight_c<S>(w_, ly.spd).transpose() * dadv_spd;
    Mat dz2 = relu_mask<S>(f.t2, dt2);
    weight<S>(grad, ly.fc2) = dz2 * f.t1.transpose();
    bias<S>(grad, ly.fc2) = dz2.rowwise().sum();

    Mat dt1 = weight_c<S>(w_, ly.fc2).transpose() * dz2;
    Mat dz1 = relu_mask<S>(f.t1, dt1);
    weight<S>(grad, ly.fc1) = dz1 * f.x.transpose();
    bias<S>(grad, ly.fc1) = dz1.rowwise().sum();

    Mat dx = weight_c<S>(w_, ly.fc1).transpose() * dz1;

    // wind embedder
    Mat dwe = relu_mask<S>(f.wind_e, dx.bottomRows(QNetArch::kWindOut));
    weight<S>(grad, ly.wind2) = dwe * f.wind_h.transpose();
    bias<S>(grad, ly.wind2) = dwe.rowwise().sum();
    Mat dwh = relu_mask<S>(f.wind_h, weight_c<S>(w_, ly.wind2).transpose() * dwe);
    weight<S>(grad, ly.wind1) = dwh * f.winds.transpose();
    bias<S>(grad, ly.wind1) = dwh.rowwise().sum();

    // conv stack
    Mat do3 = relu_mask<S>(f.a3, to_filter_layout<S>(Mat(dx.topRows(arch_.flat)), QNetArch::kC3, arch_.h3, batch));
    weight<S>(grad, ly.conv3) = do3 * f.p3.transpose();
    bias<S>(grad, ly.conv3) = do3.rowwise().sum();
    Mat dp3 = weight_c<S>(w_, ly.conv3).transpose() * do3;
    Mat di3 = col2im<S>(dp3, QNetArch::kC2, arch_.h2, QNetArch::kK3, QNetArch::kStride, arch_.h3, batch);

    Mat do2 = relu_mask<S>(f.a2, to_filter_layout<S>(di3, QNetArch::kC2, arch_.h2, batch));
    weight<S>(grad, ly.conv2) = do2 * f.p2.transpose();
    bias<S>(grad, ly.conv2) = do2.rowwise().sum();
    Mat dp2 = weight_c<S>(w_, ly.conv2).transpose() * do2;
    Mat di2 = col2im<S>(dp2, QNetArch::kC1, arch_.h1, QNetArch::kK2, QNetArch::kStride, arch_.h2, batch);

    Mat do1 = relu_mask<S>(f.a1, to_filter_layout<S>(di2, QNetArch::kC1, arch_.h1, batch));
    weight<S>(grad, ly.conv1) = do1 * f.p1.transpose();
    bias<S>(grad, ly.conv1) = do1.rowwise().sum();

    return grad;
}

template <typename S>
void QNet<S>::q_single(const Vec& image, S wind_a, S wind_s, std::array<S, 8>& q_dir,
                       std::array<S, 2>& q_spd, S& value) const {
    Mat img(image.size(), 1);
    img.col(0) = image;
    Mat wnd(2, 1);
    wnd(0, 0) = wind_a;
    wnd(1, 0) = wind_s;
    const auto f = forward(img, wnd, false);
    for (int i = 0; i < 8; ++i) q_dir[static_cast<size_t>(i)] = f.q_dir(i, 0);
    for (int i = 0; i < 2; ++i) q_spd[static_cast<size_t>(i)] = f.q_spd(i, 0);
    value = f.value(0);
}

template <typename S>
void AdamState<S>::step(Vec& params, const Vec& grad, double lr, double beta1, double beta2, double eps) {
    const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
    m = b1 * m + (S(1) - b1) * grad;
    v = (b2 * v.array() + (S(1) - b2) * grad.array().square()).matrix();
    ++t;
    const S corr1 = S(1) - static_cast<S>(std::pow(beta1, static_cast<double>(t)));
    const S corr2 = S(1) - static_cast<S>(std::pow(beta2, static_cast<double>(t)));
    params.array() -=
        static_cast<S>(lr) * (m.array() / corr1) / ((v.array() / corr2).sqrt() + static_cast<S>(eps));
}

template class QNet<float>;
template class QNet<double>;
template struct AdamState<float>;
template struct AdamState<double>;

}  // namespace plume
