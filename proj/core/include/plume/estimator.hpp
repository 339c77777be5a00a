#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <span>
#include <vector>

#include "plume/vehicle.hpp"
#include "plume/world.hpp"

namespace plume {

/// Separable spatiotemporal kernel
///   K((x,t),(x',t')) = lambda^2 exp(-|x-x'|/ell) * h(|t-t'|),
///   h(tau) = beta0 - beta1 tau + beta2 (cos(pi tau / t0) - 1).
struct KernelParams {
    double lambda = 1.0;    // psu
    double ell = 1500.0;    // m
    double beta0 = 1.0;
    double beta1 = 0.0;     // 1/s
    double beta2 = 0.0;
    double t0_s = 45000.0;  // tidal period
    double noise_var = 0.01;  // psu^2

    /// Rejects non-positive scales and any h(tau) <= 0 for tau up to
    /// window_span_s.
    void validate(double window_span_s) const;
};

double k_spatial(const Vec2& a, const Vec2& b, const KernelParams& p);
double h_temporal(double tau_s, const KernelParams& p);

struct SpaceTime {
    Vec2 x;
    double t = 0.0;
};

inline double kernel_st(const SpaceTime& a, const SpaceTime& b, const KernelParams& p) {
    return k_spatial(a.x, b.x, p) * h_temporal(std::abs(a.t - b.t), p);
}

struct TrainPoint {
    Vec2 x;
    double t = 0.0;
    double y = 0.0;
    int slot = 0;
};

/// Windowed GPR over the fleet measurement set. The factorization is
/// refreshed on every update; queries never mutate state, so one model may
/// serve concurrent readers between updates.
class GprModel {
public:
    GprModel() = default;
    GprModel(const KernelParams& params, int window_slots, double f_ocn);

    /// Appends the new sample sets, drops records older than
    /// (current_slot - window) slots, and refactorizes.
    void update(std::span<const SampleSet> new_samples, int current_slot);

    std::vector<double> posterior_mean(std::span<const SpaceTime> queries) const;
    std::vector<double> posterior_var(std::span<const SpaceTime> queries) const;

    /// Posterior mean over every cell center at time t (land included).
    GridD posterior_mean_grid(const Domain& domain, double t) const;
    /// Mean and variance over cell centers; var floored at zero.
    void posterior_grid(const Domain& domain, double t, GridD& mean, GridD& var) const;

    double prior_mean() const { return f_ocn_; }
    double prior_var() const { return params_.lambda * params_.lambda * params_.beta0; }
    const KernelParams& params() const { return params_; }
    int window_slots() const { return window_slots_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }
    const std::vector<TrainPoint>& data() const { return data_; }
    double jitter_used() const { return jitter_; }

private:
    void rebuild();
    Eigen::MatrixXd cross_kernel(std::span<const SpaceTime> queries) const;

    KernelParams params_;
    int window_slots_ = 24;
    double f_ocn_ = 35.0;
    std::vector<TrainPoint> data_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

/// Empirical-vs-fitted correlation curves backing a kernel fit.
struct FitCurves {
    std::vector<double> dist_m, spatial_emp, spatial_fit;
    std::vector<double> lag_s, temporal_emp, temporal_fit;
};

/// Fits (lambda, ell) to the binned spatial covariance of per-cell anomalies
/// and (beta0, beta1, beta2) to the pooled temporal autocovariance, with t0
/// fixed. Throws on sequences shorter than 100 slots and on fits whose h
/// turns non-positive inside the window span.
KernelParams fit_kernel(const FieldSequence& seq, double window_span_s = 24 * 1800.0,
                        FitCurves* curves = nullptr);

}  // namespace plume
