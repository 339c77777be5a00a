#include "support.hpp"

#include <Eigen/Cholesky>

namespace plume::test {

FieldSequence sample_separable_gp_world(const Domain& domain, const KernelParams& kp, int num_slots,
                                        double f_ocn, std::uint64_t seed) {
    const int ncells = domain.nx * domain.ny;
    Eigen::MatrixXd ks(ncells, ncells);
    std::vector<Vec2> pos(static_cast<size_t>(ncells));
    for (int iy = 0; iy < domain.ny; ++iy)
        for (int ix = 0; ix < domain.nx; ++ix)
            pos[static_cast<size_t>(iy * domain.nx + ix)] = domain.cell_center(ix, iy);
    for (int i = 0; i < ncells; ++i)
        for (int j = 0; j < ncells; ++j)
            ks(i, j) = k_spatial(pos[static_cast<size_t>(i)], pos[static_cast<size_t>(j)], kp);
    ks.diagonal().array() += 1e-8;

    Eigen::MatrixXd kt(num_slots, num_slots);
    for (int i = 0; i < num_slots; ++i)
        for (int j = 0; j < num_slots; ++j)
            kt(i, j) = h_temporal(std::abs(i - j) * 1800.0, kp);
    kt.diagonal().array() += 1e-8;

    const Eigen::MatrixXd ls = Eigen::LLT<Eigen::MatrixXd>(ks).matrixL();
    const Eigen::MatrixXd lt = Eigen::LLT<Eigen::MatrixXd>(kt).matrixL();

    std::mt19937_64 rng(seed);
    Eigen::MatrixXd z(ncells, num_slots);
    for (int c = 0; c < ncells; ++c)
        for (int k = 0; k < num_slots; ++k) z(c, k) = std_normal(rng);
    const Eigen::MatrixXd field = ls * z * lt.transpose();

    FieldSequence seq;
    seq.domain = domain;
    seq.f_ocn = f_ocn;
    for (int k = 0; k < num_slots; ++k) {
        FieldFrame fr;
        fr.slot_index = k;
        fr.salinity = GridF(domain.nx, domain.ny);
        fr.cur_u = GridF(domain.nx, domain.ny, 0.0f);
        fr.cur_v = GridF(domain.nx, domain.ny, 0.0f);
        for (int c = 0; c < ncells; ++c)
            fr.salinity.raw()[static_cast<size_t>(c)] = static_cast<float>(f_ocn + field(c, k));
        seq.frames.push_back(std::move(fr));
    }
    return seq;
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("plume_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace plume::test
