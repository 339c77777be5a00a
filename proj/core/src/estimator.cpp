#include "plume/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plume/rng.hpp"

namespace plume {

void KernelParams::validate(double window_span_s) const {
    if (lambda <= 0.0 || ell <= 0.0 || t0_s <= 0.0) throw std::invalid_argument("kernel scales must be positive");
    if (noise_var < 0.0) throw std::invalid_argument("noise variance must be non-negative");
    const int steps = 256;
    for (int i = 0; i <= steps; ++i) {
        const double tau = window_span_s * i / steps;
        if (h_temporal(tau, *this) <= 0.0) throw std::invalid_argument("invalid temporal kernel");
    }
}

double k_spatial(const Vec2& a, const Vec2& b, const KernelParams& p) {
    return p.lambda * p.lambda * std::exp(-distance(a, b) / p.ell);
}

double h_temporal(double tau_s, const KernelParams& p) {
    return p.beta0 - p.beta1 * tau_s + p.beta2 * (std::cos(kPi * tau_s / p.t0_s) - 1.0);
}

GprModel::GprModel(const KernelParams& params, int window_slots, double f_ocn)
    : params_(params), window_slots_(window_slots), f_ocn_(f_ocn) {
    if (window_slots < 1) throw std::invalid_argument("window must be at least one slot");
    params.validate(window_slots * 1800.0);
}

void GprModel::update(std::span<const SampleSet> new_samples, int current_slot) {
    for (const auto& set : new_samples) {
        if (set.records.empty() || set.records.size() > 10)
            throw std::invalid_argument("sample set size outside [1,10]");
        for (const auto& rec : set.records) data_.push_back({rec.x, rec.t, rec.y, set.slot_index});
    }
    const int oldest_kept = current_slot - window_slots_ + 1;
    std::erase_if(data_, [&](const TrainPoint& p) { return p.slot < oldest_kept; });
    rebuild();
}

void GprModel::rebuild() {
    const auto n = static_cast<Eigen::Index>(data_.size());
    if (n == 0) {
        llt_ = Eigen::LLT<Eigen::MatrixXd>();
        alpha_.resize(0);
        jitter_ = 0.0;
        return;
    }
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = k_spatial(data_[i].x, data_[j].x, params_) *
                             h_temporal(std::abs(data_[i].t - data_[j].t), params_);
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += params_.noise_var;
    }
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = data_[i].y - f_ocn_;

    // escalating jitter: 0, then 1e-10 .. 1e-6
    for (double jitter = 0.0;;) {
        Eigen::MatrixXd kj = k;
        if (jitter > 0.0) kj.diagonal().array() += jitter;
        llt_.compute(kj);
        if (llt_.info() == Eigen::Success) {
            jitter_ = jitter;
            break;
        }
        jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
        if (jitter > 1e-6) throw std::runtime_error("kernel degenerate");
    }
    alpha_ = llt_.solve(y);
}

Eigen::MatrixXd GprModel::cross_kernel(std::span<const SpaceTime> queries) const {
    const auto m = static_cast<Eigen::Index>(queries.size());
    const auto n = static_cast<Eigen::Index>(data_.size());
    Eigen::MatrixXd ks(m, n);
    for (Eigen::Index q = 0; q < m; ++q) {
        if (!std::isfinite(queries[q].x.x) || !std::isfinite(queries[q].x.y) || !std::isfinite(queries[q].t))
            throw std::invalid_argument("non-finite query");
        for (Eigen::Index j = 0; j < n; ++j)
            ks(q, j) = k_spatial(queries[q].x, data_[j].x, params_) *
                       h_temporal(std::abs(queries[q].t - data_[j].t), params_);
    }
    return ks;
}

std::vector<double> GprModel::posterior_mean(std::span<const SpaceTime> queries) const {
    std::vector<double> out(queries.size(), f_ocn_);
    if (data_.empty()) {
        for (const auto& q : queries)
            if (!std::isfinite(q.x.x) || !std::isfinite(q.x.y) || !std::isfinite(q.t))
                throw std::invalid_argument("non-finite query");
        return out;
    }
    const Eigen::VectorXd mean = cross_kernel(queries) * alpha_;
    for (size_t i = 0; i < out.size(); ++i) out[i] += mean(static_cast<Eigen::Index>(i));
    return out;
}

std::vector<double> GprModel::posterior_var(std::span<const SpaceTime> queries) const {
    std::vector<double> out(queries.size(), prior_var());
    if (data_.empty()) return out;
    const Eigen::MatrixXd ks = cross_kernel(queries);
    // v = L^-1 k*^T, var = prior - |v|^2
    const Eigen::MatrixXd v = llt_.matrixL().solve(ks.transpose());
    for (size_t i = 0; i < out.size(); ++i) {
        const double reduction = v.col(static_cast<Eigen::Index>(i)).squaredNorm();
        out[i] = std::max(0.0, prior_var() - reduction);
    }
    return out;
}

GridD GprModel::posterior_mean_grid(const Domain& domain, double t) const {
    GridD mean(domain.nx, domain.ny, f_ocn_);
    if (data_.empty()) return mean;
    const auto n = static_cast<Eigen::Index>(data_.size());
    // fold the temporal factor and alpha into per-datum weights; only the
    // spatial kernel varies across cells
    std::vector<double> w(data_.size());
    for (Eigen::Index j = 0; j < n; ++j)
        w[j] = h_temporal(std::abs(t - data_[j].t), params_) * alpha_(j);
    const double lam2 = params_.lambda * params_.lambda;
    for (int iy = 0; iy < domain.ny; ++iy) {
        for (int ix = 0; ix < domain.nx; ++ix) {
            const Vec2 p = domain.cell_center(ix, iy);
            double acc = 0.0;
            for (size_t j = 0; j < data_.size(); ++j)
                acc += std::exp(-distance(p, data_[j].x) / params_.ell) * w[j];
            mean.at(ix, iy) = f_ocn_ + lam2 * acc;
        }
    }
    return mean;
}

void GprModel::posterior_grid(const Domain& domain, double t, GridD& mean, GridD& var) const {
    mean = posterior_mean_grid(domain, t);
    var = GridD(domain.nx, domain.ny, prior_var());
    if (data_.empty()) return;
    std::vector<SpaceTime> queries;
    queries.reserve(domain.land.size());
    for (int iy = 0; iy < domain.ny; ++iy)
        for (int ix = 0; ix < domain.nx; ++ix) queries.push_back({domain.cell_center(ix, iy), t});
    const auto vv = posterior_var(queries);
    std::copy(vv.begin(), vv.end(), var.raw().begin());
}

namespace {

struct Anomalies {
    // one row per water cell, one column per frame
    Eigen::MatrixXd a;
    std::vector<Vec2> pos;
    double pooled_var = 0.0;
};

Anomalies cell_anomalies(const FieldSequence& seq) {
    const auto& dom = seq.domain;
    const int frames = seq.num_slots();
    std::vector<int> cells;
    for (int iy = 0; iy < dom.ny; ++iy)
        for (int ix = 0; ix < dom.nx; ++ix)
            if (!dom.is_land_cell(ix, iy)) cells.push_back(iy * dom.nx + ix);

    Anomalies out;
    out.a.resize(static_cast<Eigen::Index>(cells.size()), frames);
    out.pos.reserve(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
        const int ix = cells[c] % dom.nx;
        const int iy = cells[c] / dom.nx;
        out.pos.push_back(dom.cell_center(ix, iy));
        double mean = 0.0;
        for (int k = 0; k < frames; ++k) mean += seq.frames[k].salinity.at(ix, iy);
        mean /= frames;
        for (int k = 0; k < frames; ++k)
            out.a(static_cast<Eigen::Index>(c), k) = seq.frames[k].salinity.at(ix, iy) - mean;
    }
    out.pooled_var = out.a.array().square().sum() / (out.a.rows() * out.a.cols());
    return out;
}

}  // namespace

KernelParams fit_kernel(const FieldSequence& seq, double window_span_s, FitCurves* curves) {
    if (seq.num_slots() < 100) throw std::invalid_argument("sequence too short for fitting (need >= 100 slots)");
    const auto an = cell_anomalies(seq);
    const int frames = seq.num_slots();
    const auto ncells = an.a.rows();

    KernelParams p;
    p.t0_s = 45000.0;
    p.noise_var = 0.01;

    // ---- temporal autocovariance, pooled over cells ----
    const int max_lag = std::min(frames - 10, static_cast<int>(std::lround(window_span_s / seq.dt_s)));
    std::vector<double> lag_s(max_lag + 1), ct(max_lag + 1);
    for (int l = 0; l <= max_lag; ++l) {
        lag_s[l] = l * seq.dt_s;
        double acc = 0.0;
        for (Eigen::Index c = 0; c < ncells; ++c)
            for (int k = 0; k + l < frames; ++k) acc += an.a(c, k) * an.a(c, k + l);
        ct[l] = acc / (static_cast<double>(ncells) * (frames - l));
    }

    // A field with no temporal variation carries no anomaly signal; fall
    // back to the spatial structure of the time-mean field.
    const bool static_field = an.pooled_var < 1e-9;
    Eigen::VectorXd mean_field;
    if (static_field) {
        Eigen::VectorXd m(ncells);
        const auto& dom = seq.domain;
        Eigen::Index c = 0;
        for (int iy = 0; iy < dom.ny; ++iy)
            for (int ix = 0; ix < dom.nx; ++ix) {
                if (dom.is_land_cell(ix, iy)) continue;
                double cm = 0.0;
                for (int k = 0; k < frames; ++k) cm += seq.frames[k].salinity.at(ix, iy);
                m(c++) = cm / frames;
            }
        mean_field = m.array() - m.mean();
    }

    // ---- spatial covariance vs distance, binned over random pairs ----
    const double extent = std::min(seq.domain.width_m, seq.domain.height_m);
    const int nbins = 24;
    const double max_d = 0.5 * extent;
    std::vector<double> bin_sum(nbins, 0.0), bin_d(nbins, 0.0);
    std::vector<int> bin_cnt(nbins, 0);
    std::mt19937_64 rng(0x5eedf17ull);  // fixed: fitting must be reproducible
    const int npairs = 40000;
    for (int s = 0; s < npairs; ++s) {
        const auto i = static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(ncells) - 1));
        const auto j = static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(ncells) - 1));
        const double d = distance(an.pos[static_cast<size_t>(i)], an.pos[static_cast<size_t>(j)]);
        if (d <= 0.0 || d >= max_d) continue;
        const double cov = static_field ? mean_field(i) * mean_field(j) : an.a.row(i).dot(an.a.row(j)) / frames;
        const int b = std::min(nbins - 1, static_cast<int>(d / max_d * nbins));
        bin_sum[b] += cov;
        bin_d[b] += d;
        bin_cnt[b] += 1;
    }

    // log-linear least squares on positive bins: ln C = a - d / ell
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> fit_d, fit_c;
    for (int b = 0; b < nbins; ++b) {
        if (bin_cnt[b] < 30) continue;
        const double c = bin_sum[b] / bin_cnt[b];
        if (c <= 0.0) continue;
        const double d = bin_d[b] / bin_cnt[b];
        fit_d.push_back(d);
        fit_c.push_back(c);
        sw += 1;
        sx += d;
        sy += std::log(c);
        sxx += d * d;
        sxy += d * std::log(c);
    }
    if (sw < 4) throw std::runtime_error("invalid spatial kernel");
    const double det = sw * sxx - sx * sx;
    const double slope = (sw * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;
    if (slope >= 0.0) throw std::runtime_error("invalid spatial kernel");
    p.ell = -1.0 / slope;

    if (static_field) {
        p.lambda = std::sqrt(std::max(std::exp(intercept), 1e-12));
        p.beta0 = 1.0;
        p.beta1 = 0.0;
        p.beta2 = 0.0;
    } else {
        // linear LS for ct(tau) ~ p0 - p1 tau + p2 (cos(pi tau/t0) - 1)
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d atb = Eigen::Vector3d::Zero();
        for (size_t i = 0; i < ct.size(); ++i) {
            const Eigen::Vector3d row(1.0, -lag_s[i], std::cos(kPi * lag_s[i] / p.t0_s) - 1.0);
            ata += row * row.transpose();
            atb += row * ct[i];
        }
        const Eigen::Vector3d sol = ata.ldlt().solve(atb);
        const double total_var = sol(0);
        if (total_var <= 0.0) throw std::runtime_error("invalid temporal kernel");
        // convention: beta0 = 1, lambda^2 carries the variance
        p.lambda = std::sqrt(total_var);
        p.beta0 = 1.0;
        p.beta1 = sol(1) / total_var;
        p.beta2 = sol(2) / total_var;
    }

    if (curves) {
        curves->dist_m = fit_d;
        curves->spatial_emp = fit_c;
        curves->spatial_fit.clear();
        for (double d : fit_d) curves->spatial_fit.push_back(std::exp(intercept) * std::exp(-d / p.ell));
        curves->lag_s = lag_s;
        curves->temporal_emp = ct;
        curves->temporal_fit.clear();
        const double lam2 = p.lambda * p.lambda;
        for (double tau : lag_s) curves->temporal_fit.push_back(lam2 * h_temporal(tau, p));
    }

    p.validate(window_span_s);  // throws "invalid temporal kernel" if h dips <= 0
    return p;
}

}  // namespace plume
