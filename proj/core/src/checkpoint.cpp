#include "plume/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace plume {

namespace {

constexpr char kMagic[4] = {'P', 'Q', 'N', '1'};

void write_i64(std::ostream& os, std::int64_t v) {
    unsigned char b[8];
    auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::int64_t read_i64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("truncated checkpoint");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<std::int64_t>(u);
}

void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
    write_i64(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

Eigen::VectorXd read_vec(std::istream& is) {
    const auto n = read_i64(is);
    if (n < 0 || n > (1ll << 32)) throw std::runtime_error("corrupt checkpoint vector");
    Eigen::VectorXd v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
    if (!is) throw std::runtime_error("truncated checkpoint");
    return v;
}

void write_str(std::ostream& os, const std::string& s) {
    write_i64(os, static_cast<std::int64_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    const auto n = read_i64(is);
    if (n < 0 || n > (1 << 20)) throw std::runtime_error("corrupt checkpoint string");
    std::string s(static_cast<size_t>(n), '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("truncated checkpoint");
    return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.write(kMagic, 4);
    write_i64(os, ck.input_res);
    write_i64(os, ck.param_count);
    write_i64(os, ck.episode);
    write_i64(os, ck.adam_t);
    write_vec(os, ck.params);
    write_vec(os, ck.target_params);
    write_vec(os, ck.adam_m);
    write_vec(os, ck.adam_v);
    write_str(os, ck.explore_rng);
    write_str(os, ck.replay_rng);
    if (!os) throw std::runtime_error("checkpoint write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad checkpoint magic");
    Checkpoint ck;
    ck.input_res = static_cast<int>(read_i64(is));
    ck.param_count = static_cast<long>(read_i64(is));
    ck.episode = read_i64(is);
    ck.adam_t = static_cast<long>(read_i64(is));
    ck.params = read_vec(is);
    ck.target_params = read_vec(is);
    ck.adam_m = read_vec(is);
    ck.adam_v = read_vec(is);
    ck.explore_rng = read_str(is);
    ck.replay_rng = read_str(is);

    const auto arch = QNetArch::make(ck.input_res);
    if (arch.param_count != ck.param_count || ck.params.size() != ck.param_count ||
        ck.target_params.size() != ck.param_count)
        throw std::runtime_error("checkpoint fingerprint mismatch");
    return ck;
}

Checkpoint make_checkpoint(const QNet<float>& online, const QNet<float>& target,
                           const AdamState<float>& adam, std::int64_t episode,
                           const std::string& explore_rng, const std::string& replay_rng) {
    Checkpoint ck;
    ck.input_res = online.arch().input_res;
    ck.param_count = online.arch().param_count;
    ck.episode = episode;
    ck.params = online.params().cast<double>();
    ck.target_params = target.params().cast<double>();
    ck.adam_m = adam.m.cast<double>();
    ck.adam_v = adam.v.cast<double>();
    ck.adam_t = adam.t;
    ck.explore_rng = explore_rng;
    ck.replay_rng = replay_rng;
    return ck;
}

void restore_checkpoint(const Checkpoint& ck, QNet<float>& online, QNet<float>& target,
                        AdamState<float>& adam) {
    if (online.arch().input_res != ck.input_res || online.arch().param_count != ck.param_count)
        throw std::runtime_error("checkpoint fingerprint mismatch");
    online.params() = ck.params.cast<float>();
    target.params() = ck.target_params.cast<float>();
    adam.m = ck.adam_m.cast<float>();
    adam.v = ck.adam_v.cast<float>();
    adam.t = ck.adam_t;
}

}  // namespace plume
