#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <vector>

#include "plume/estimator.hpp"
#include "plume/rng.hpp"
#include "plume/world.hpp"

namespace plume::test {

/// Direct dense-inverse GP oracle, independent of the GprModel solve path.
struct DenseGpOracle {
    KernelParams params;
    double f_ocn;
    std::vector<TrainPoint> data;

    Eigen::MatrixXd gram() const {
        const auto n = static_cast<Eigen::Index>(data.size());
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                k(i, j) = k_spatial(data[i].x, data[j].x, params) *
                          h_temporal(std::abs(data[i].t - data[j].t), params);
        k.diagonal().array() += params.noise_var;
        return k;
    }

    std::pair<double, double> mean_var(const SpaceTime& q) const {
        const double prior = params.lambda * params.lambda * params.beta0;
        if (data.empty()) return {f_ocn, prior};
        const auto n = static_cast<Eigen::Index>(data.size());
        const Eigen::MatrixXd kinv = gram().inverse();
        Eigen::VectorXd ks(n), y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ks(i) = k_spatial(q.x, data[i].x, params) * h_temporal(std::abs(q.t - data[i].t), params);
            y(i) = data[i].y - f_ocn;
        }
        const double mean = f_ocn + ks.dot(kinv * y);
        const double var = prior - ks.dot(kinv * ks);
        return {mean, var};
    }
};

/// Draws one exact sample of a separable space-time GP on the grid via the
/// matrix-normal factorization F = Ls Z Lt^T (plus the f_ocn mean).
FieldSequence sample_separable_gp_world(const Domain& domain, const KernelParams& kp, int num_slots,
                                        double f_ocn, std::uint64_t seed);

/// Fresh directory under the system temp root.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace plume::test
