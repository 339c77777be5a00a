#include "plume/world.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "plume/rng.hpp"

namespace plume {

namespace {

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

}  // namespace

int Domain::cell_ix(double x) const { return clampi(static_cast<int>(std::floor(x / cell_w())), 0, nx - 1); }
int Domain::cell_iy(double y) const { return clampi(static_cast<int>(std::floor(y / cell_h())), 0, ny - 1); }

bool Domain::is_water(const Vec2& p) const {
    return in_bounds(p) && !is_land_cell(cell_ix(p.x), cell_iy(p.y));
}

int Domain::water_cell_count() const {
    int n = 0;
    for (auto b : land.raw()) n += (b == 0);
    return n;
}

void Domain::validate() const {
    if (nx < 8 || ny < 8) throw std::invalid_argument("domain grid must be at least 8x8");
    if (width_m <= 0 || height_m <= 0) throw std::invalid_argument("domain extent must be positive");
    if (land.nx() != nx || land.ny() != ny) throw std::invalid_argument("land mask dims mismatch");
    if (mouth_ix < 0 || mouth_ix >= nx || mouth_iy < 0 || mouth_iy >= ny)
        throw std::invalid_argument("mouth outside grid");
    const bool on_boundary = mouth_ix == 0 || mouth_ix == nx - 1 || mouth_iy == 0 || mouth_iy == ny - 1;
    if (!on_boundary) throw std::invalid_argument("mouth must sit on the domain boundary");
    const int land_cells = nx * ny - water_cell_count();
    if (2 * land_cells > nx * ny) throw std::invalid_argument("land mask excludes more than 50% of cells");
}

Domain Domain::coastal(int nx, int ny, double cell_m) {
    Domain d;
    d.nx = nx;
    d.ny = ny;
    d.width_m = nx * cell_m;
    d.height_m = ny * cell_m;
    d.mouth_ix = nx - 1;
    d.mouth_iy = ny / 2;
    d.land = GridB(nx, ny, 0);
    for (int iy = 0; iy < ny; ++iy) d.land.at(nx - 1, iy) = 1;
    d.land.at(d.mouth_ix, d.mouth_iy) = 0;  // the mouth is a gap in the coast
    d.validate();
    return d;
}

namespace {

struct LobeFrame {
    Vec2 centroid;
    double sigma_out;
    double sigma_along;
    double amp;
    Vec2 u_out;    // seaward unit
    Vec2 u_along;  // alongshore unit
};

double lobe_value(const LobeFrame& lf, const Vec2& p) {
    const Vec2 d = p - lf.centroid;
    const double so = d.dot(lf.u_out);
    const double sa = d.dot(lf.u_along);
    const double q = (so * so) / (lf.sigma_out * lf.sigma_out) + (sa * sa) / (lf.sigma_along * lf.sigma_along);
    return std::exp(-q);
}

Vec2 lobe_gradient(const LobeFrame& lf, const Vec2& p) {
    const Vec2 d = p - lf.centroid;
    const double so = d.dot(lf.u_out);
    const double sa = d.dot(lf.u_along);
    const double val = lobe_value(lf, p);
    const double go = -2.0 * so / (lf.sigma_out * lf.sigma_out) * val;
    const double ga = -2.0 * sa / (lf.sigma_along * lf.sigma_along) * val;
    return lf.u_out * go + lf.u_along * ga;
}

}  // namespace

FieldSequence generate_sequence(const SynthParams& params, const Domain& domain, int num_slots) {
    domain.validate();
    if (num_slots < 1) throw std::invalid_argument("num_slots must be >= 1");
    if (domain.is_land_cell(domain.mouth_ix, domain.mouth_iy))
        throw std::invalid_argument("mouth cell lies on land");
    if (params.tidal_period_s <= 0) throw std::invalid_argument("tidal period must be positive");
    if (params.current_cap_mps > 1.5) throw std::invalid_argument("current cap above 1.5 m/s");

    FieldSequence seq;
    seq.domain = domain;
    seq.f_ocn = params.f_ocn;
    seq.frames.reserve(num_slots);

    std::mt19937_64 rng(params.seed);

    // Seaward is away from the mouth edge; default coastal domains put the
    // mouth on the east boundary so u_out points west.
    Vec2 u_out{-1.0, 0.0};
    if (domain.mouth_ix == 0) u_out = {1.0, 0.0};
    if (domain.mouth_iy == 0) u_out = {0.0, 1.0};
    if (domain.mouth_iy == domain.ny - 1 && domain.mouth_ix != 0 && domain.mouth_ix != domain.nx - 1)
        u_out = {0.0, -1.0};
    const Vec2 u_along{-u_out.y, u_out.x};
    const Vec2 mouth = domain.mouth_center();
    const double extent = std::min(domain.width_m, domain.height_m);

    double discharge = params.discharge_mean;
    double wind_speed = params.wind_mean_speed;
    double wind_angle = params.wind_angle_mean;
    Vec2 wind_drift{0.0, 0.0};

    const double discharge_sd = std::sqrt(std::max(0.0, params.discharge_var));
    const double discharge_lo = 0.2 * params.discharge_mean;
    const double discharge_hi = std::min(2.5 * params.discharge_mean, params.f_ocn / (1.0 + params.tide_mod));

    for (int k = 0; k < num_slots; ++k) {
        const double t = k * 1800.0;
        // fmod keeps the phase argument bit-identical across tidal cycles
        const double phase = kTwoPi * std::fmod(t, params.tidal_period_s) / params.tidal_period_s;

        LobeFrame lf;
        lf.u_out = u_out;
        lf.u_along = u_along;
        lf.sigma_out = params.sigma_out_frac * extent;
        lf.sigma_along = params.sigma_along_frac * extent;
        lf.amp = std::clamp(discharge * (1.0 + params.tide_mod * std::cos(phase)), 0.0, params.f_ocn);
        const double offset =
            (params.offset_base_frac + params.offset_gain_frac * discharge / params.discharge_mean) * extent;
        const double excursion = params.tide_excursion_frac * extent * std::sin(phase);
        lf.centroid = mouth + u_out * offset + u_along * excursion + wind_drift;

        FieldFrame frame;
        frame.slot_index = k;
        frame.wind = {wind_angle, wind_speed};
        frame.salinity = GridF(domain.nx, domain.ny);
        frame.cur_u = GridF(domain.nx, domain.ny, 0.0f);
        frame.cur_v = GridF(domain.nx, domain.ny, 0.0f);

        const double tide_cur = params.tide_current_mps * std::cos(phase);
        const Vec2 wind_cur = frame.wind.vec() * params.wind_current_gain;

        for (int iy = 0; iy < domain.ny; ++iy) {
            for (int ix = 0; ix < domain.nx; ++ix) {
                const Vec2 p = domain.cell_center(ix, iy);
                const double deficit = lf.amp * lobe_value(lf, p);
                frame.salinity.at(ix, iy) = static_cast<float>(params.f_ocn - deficit);
                if (domain.is_land_cell(ix, iy)) continue;

                const Vec2 grad = lobe_gradient(lf, p) * lf.amp;  // gradient of the deficit
                Vec2 radial = p - mouth;
                const double r = radial.norm();
                radial = (r > 1e-9) ? radial * (1.0 / r) : u_out;
                Vec2 c = u_along * tide_cur + radial * (params.grad_gain * grad.norm() + params.jet_gain * deficit) +
                         wind_cur;
                const double mag = c.norm();
                if (mag > params.current_cap_mps) c = c * (params.current_cap_mps / mag);
                frame.cur_u.at(ix, iy) = static_cast<float>(c.x);
                frame.cur_v.at(ix, iy) = static_cast<float>(c.y);
            }
        }
        seq.frames.push_back(std::move(frame));

        // advance the slot processes
        discharge += params.discharge_revert * (params.discharge_mean - discharge) +
                     discharge_sd * std_normal(rng);
        discharge = std::clamp(discharge, discharge_lo, discharge_hi);
        wind_speed += params.wind_revert * (params.wind_mean_speed - wind_speed) +
                      params.wind_noise_sd * std_normal(rng);
        wind_speed = std::clamp(wind_speed, 0.0, 20.0);
        wind_angle += params.wind_angle_noise_sd * std_normal(rng);
        wind_drift = wind_drift * params.wind_drift_decay +
                     Wind{wind_angle, wind_speed}.vec() * (params.wind_drift_gain * 1800.0);
    }
    return seq;
}

namespace {

double bilinear(const GridF& g, const Domain& dom, const Vec2& p) {
    const double u = p.x / dom.cell_w() - 0.5;
    const double v = p.y / dom.cell_h() - 0.5;
    const int i0 = clampi(static_cast<int>(std::floor(u)), 0, dom.nx - 2);
    const int j0 = clampi(static_cast<int>(std::floor(v)), 0, dom.ny - 2);
    const double fx = std::clamp(u - i0, 0.0, 1.0);
    const double fy = std::clamp(v - j0, 0.0, 1.0);
    const double a = g.at(i0, j0) * (1.0 - fx) + g.at(i0 + 1, j0) * fx;
    const double b = g.at(i0, j0 + 1) * (1.0 - fx) + g.at(i0 + 1, j0 + 1) * fx;
    return a * (1.0 - fy) + b * fy;
}

struct TimeBracket {
    int k0;
    int k1;
    double ft;
};

TimeBracket bracket_time(const FieldSequence& seq, double t) {
    const double tt = t / seq.dt_s;
    int k0 = clampi(static_cast<int>(std::floor(tt)), 0, seq.num_slots() - 1);
    int k1 = std::min(k0 + 1, seq.num_slots() - 1);
    double ft = std::clamp(tt - k0, 0.0, 1.0);
    if (k1 == k0) ft = 0.0;
    return {k0, k1, ft};
}

void check_query(const FieldSequence& seq, const Vec2& x, double t) {
    if (!seq.domain.in_bounds(x) || !seq.domain.is_water(x) || t < 0.0 || t > seq.last_time_s())
        throw std::out_of_range("outside world");
}

}  // namespace

double sample_salinity(const FieldSequence& seq, const Vec2& x, double t, double noise_sd,
                       std::mt19937_64& rng) {
    check_query(seq, x, t);
    const auto br = bracket_time(seq, t);
    const double a = bilinear(seq.frames[br.k0].salinity, seq.domain, x);
    const double b = bilinear(seq.frames[br.k1].salinity, seq.domain, x);
    double y = a * (1.0 - br.ft) + b * br.ft;
    if (noise_sd > 0.0) y += noise_sd * std_normal(rng);
    return y;
}

Vec2 current_at(const FieldSequence& seq, const Vec2& x, double t) {
    check_query(seq, x, t);
    const auto br = bracket_time(seq, t);
    const double u = bilinear(seq.frames[br.k0].cur_u, seq.domain, x) * (1.0 - br.ft) +
                     bilinear(seq.frames[br.k1].cur_u, seq.domain, x) * br.ft;
    const double v = bilinear(seq.frames[br.k0].cur_v, seq.domain, x) * (1.0 - br.ft) +
                     bilinear(seq.frames[br.k1].cur_v, seq.domain, x) * br.ft;
    return {u, v};
}

namespace {

constexpr char kMagic[4] = {'P', 'L', 'M', '1'};

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(sizeof(T) == 4);
    unsigned char b[4];
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    b[0] = u & 0xff;
    b[1] = (u >> 8) & 0xff;
    b[2] = (u >> 16) & 0xff;
    b[3] = (u >> 24) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 4);
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(sizeof(T) == 4);
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("truncated file");
    std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    T v;
    std::memcpy(&v, &u, 4);
    return v;
}

void write_grid(std::ostream& os, const GridF& g) {
    for (float x : g.raw()) write_le<float>(os, x);
}

GridF read_grid(std::istream& is, int nx, int ny) {
    GridF g(nx, ny);
    for (auto& x : g.raw()) x = read_le<float>(is);
    return g;
}

}  // namespace

void save_sequence(const FieldSequence& seq, const std::filesystem::path& path) {
    if (seq.num_slots() == 0) throw std::invalid_argument("empty sequence");
    if (std::abs(seq.domain.cell_w() - seq.domain.cell_h()) > 1e-9)
        throw std::invalid_argument("field files require square cells");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.domain.nx));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.domain.ny));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(seq.num_slots()));
    write_le<float>(os, static_cast<float>(seq.domain.cell_w()));
    write_le<float>(os, static_cast<float>(seq.f_ocn));
    os.write(reinterpret_cast<const char*>(seq.domain.land.data()),
             static_cast<std::streamsize>(seq.domain.land.size()));
    for (const auto& fr : seq.frames) {
        write_le<float>(os, static_cast<float>(fr.wind.angle_rad));
        write_le<float>(os, static_cast<float>(fr.wind.speed_mps));
        write_grid(os, fr.salinity);
        write_grid(os, fr.cur_u);
        write_grid(os, fr.cur_v);
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

FieldSequence load_sequence(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad magic");
    const auto nx = read_le<std::uint32_t>(is);
    const auto ny = read_le<std::uint32_t>(is);
    const auto num_slots = read_le<std::uint32_t>(is);
    const float cell = read_le<float>(is);
    const float f_ocn = read_le<float>(is);
    if (nx < 8 || ny < 8 || nx > 4096 || ny > 4096 || num_slots == 0 || cell <= 0.0f)
        throw std::runtime_error("dimension mismatch");

    FieldSequence seq;
    seq.f_ocn = f_ocn;
    seq.domain.nx = static_cast<int>(nx);
    seq.domain.ny = static_cast<int>(ny);
    seq.domain.width_m = static_cast<double>(cell) * nx;
    seq.domain.height_m = static_cast<double>(cell) * ny;
    seq.domain.land = GridB(seq.domain.nx, seq.domain.ny);
    is.read(reinterpret_cast<char*>(seq.domain.land.data()),
            static_cast<std::streamsize>(seq.domain.land.size()));
    if (!is) throw std::runtime_error("truncated file");

    seq.frames.reserve(num_slots);
    for (std::uint32_t k = 0; k < num_slots; ++k) {
        FieldFrame fr;
        fr.slot_index = static_cast<int>(k);
        fr.wind.angle_rad = read_le<float>(is);
        fr.wind.speed_mps = read_le<float>(is);
        fr.salinity = read_grid(is, seq.domain.nx, seq.domain.ny);
        fr.cur_u = read_grid(is, seq.domain.nx, seq.domain.ny);
        fr.cur_v = read_grid(is, seq.domain.nx, seq.domain.ny);
        seq.frames.push_back(std::move(fr));
    }
    is.peek();
    if (!is.eof()) throw std::runtime_error("trailing bytes");

    // The format carries no mouth coordinate; recover it as the
    // coast/boundary-adjacent water cell with the largest mean deficit.
    double best = -1.0;
    for (int iy = 0; iy < seq.domain.ny; ++iy) {
        for (int ix = 0; ix < seq.domain.nx; ++ix) {
            if (seq.domain.is_land_cell(ix, iy)) continue;
            const bool edge = ix == 0 || iy == 0 || ix == seq.domain.nx - 1 || iy == seq.domain.ny - 1 ||
                              seq.domain.is_land_cell(ix + 1, iy) || seq.domain.is_land_cell(ix - 1, iy) ||
                              seq.domain.is_land_cell(ix, iy + 1) || seq.domain.is_land_cell(ix, iy - 1);
            if (!edge) continue;
            double deficit = 0.0;
            for (const auto& fr : seq.frames) deficit += seq.f_ocn - fr.salinity.at(ix, iy);
            if (deficit > best) {
                best = deficit;
                seq.domain.mouth_ix = ix;
                seq.domain.mouth_iy = iy;
            }
        }
    }
    seq.domain.validate();
    return seq;
}

GridB plume_mask(const FieldFrame& frame, double f_ocn, double zeta) {
    if (zeta <= 0.0) throw std::invalid_argument("zeta must be positive");
    GridB mask(frame.salinity.nx(), frame.salinity.ny(), 0);
    for (size_t i = 0; i < mask.size(); ++i)
        mask.raw()[i] = (f_ocn - static_cast<double>(frame.salinity.raw()[i]) >= zeta) ? 1 : 0;
    return mask;
}

}  // namespace plume
