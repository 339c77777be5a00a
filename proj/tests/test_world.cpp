#include <doctest.h>

#include <cmath>
#include <fstream>

#include "plume/world.hpp"
#include "support.hpp"

using namespace plume;

namespace {

SynthParams calm_params() {
    // no discharge noise, no wind: the world is a pure tidal oscillation
    SynthParams p;
    p.discharge_var = 0.0;
    p.wind_mean_speed = 0.0;
    p.wind_noise_sd = 0.0;
    p.wind_angle_noise_sd = 0.0;
    return p;
}

double mean_salinity(const FieldFrame& fr, const Domain& dom) {
    double acc = 0;
    int n = 0;
    for (int iy = 0; iy < dom.ny; ++iy)
        for (int ix = 0; ix < dom.nx; ++ix) {
            if (dom.is_land_cell(ix, iy)) continue;
            acc += fr.salinity.at(ix, iy);
            ++n;
        }
    return acc / n;
}

int mask_area(const GridB& mask) {
    int n = 0;
    for (auto b : mask.raw()) n += (b != 0);
    return n;
}

}  // namespace

TEST_CASE("domain invariants") {
    auto dom = Domain::coastal(64, 64, 200.0);
    CHECK(dom.width_m == doctest::Approx(12800.0));
    CHECK(dom.mouth_ix == 63);
    CHECK(dom.mouth_iy == 32);
    CHECK_FALSE(dom.is_land_cell(dom.mouth_ix, dom.mouth_iy));
    CHECK(dom.is_land_cell(63, 0));

    Domain bad = dom;
    bad.mouth_ix = 10;
    bad.mouth_iy = 10;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    CHECK_THROWS_AS(Domain::coastal(4, 4, 200.0), std::invalid_argument);
}

TEST_CASE("generation rejects bad inputs") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    CHECK_THROWS_AS(generate_sequence(SynthParams{}, dom, 0), std::invalid_argument);

    Domain mouth_on_land = dom;
    mouth_on_land.land.at(mouth_on_land.mouth_ix, mouth_on_land.mouth_iy) = 1;
    CHECK_THROWS_AS(generate_sequence(SynthParams{}, mouth_on_land, 5), std::invalid_argument);
}

TEST_CASE("determinism: same params give bit-identical sequences") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    SynthParams p;
    p.seed = 77;
    const auto a = generate_sequence(p, dom, 30);
    const auto b = generate_sequence(p, dom, 30);
    REQUIRE(a.num_slots() == b.num_slots());
    for (int k = 0; k < a.num_slots(); ++k) {
        CHECK(a.frames[k].salinity == b.frames[k].salinity);
        CHECK(a.frames[k].cur_u == b.frames[k].cur_u);
        CHECK(a.frames[k].cur_v == b.frames[k].cur_v);
    }
}

TEST_CASE("pure tidal world repeats every 25 slots") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    const auto seq = generate_sequence(calm_params(), dom, 60);
    for (int k = 0; k + 25 < seq.num_slots(); k += 7) {
        double max_diff = 0;
        for (size_t i = 0; i < seq.frames[k].salinity.size(); ++i)
            max_diff = std::max(max_diff,
                                std::abs(static_cast<double>(seq.frames[k].salinity.raw()[i]) -
                                         seq.frames[k + 25].salinity.raw()[i]));
        CHECK(max_diff <= 1e-6);
    }
    // mean salinity oscillates with the tidal period
    const double m0 = mean_salinity(seq.frames[0], dom);
    const double m12 = mean_salinity(seq.frames[12], dom);
    CHECK(std::abs(m0 - m12) > 0.01);
}

TEST_CASE("current magnitude never exceeds the cap") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    SynthParams p;
    p.seed = 5;
    const auto seq = generate_sequence(p, dom, 80);
    double peak = 0;
    for (const auto& fr : seq.frames)
        for (size_t i = 0; i < fr.cur_u.size(); ++i) {
            const double mag = std::hypot(fr.cur_u.raw()[i], fr.cur_v.raw()[i]);
            CHECK(mag <= p.current_cap_mps + 1e-6);
            peak = std::max(peak, mag);
        }
    // qualitative: currents do get above the 1 m/s survey speed
    CHECK(peak > 1.0);
}

TEST_CASE("mean-salinity autocorrelation peaks at the tidal lag") {
    const auto dom = Domain::coastal(64, 64, 200.0);
    SynthParams p;
    p.seed = 3;
    const auto seq = generate_sequence(p, dom, 100);
    std::vector<double> m;
    for (const auto& fr : seq.frames) m.push_back(mean_salinity(fr, dom));
    double mean = 0;
    for (double v : m) mean += v;
    mean /= static_cast<double>(m.size());
    auto autocorr = [&](int lag) {
        double num = 0, den = 0;
        for (size_t i = 0; i < m.size(); ++i) den += (m[i] - mean) * (m[i] - mean);
        for (size_t i = 0; i + lag < m.size(); ++i) num += (m[i] - mean) * (m[i + lag] - mean);
        return num / den;
    };
    int best_lag = 15;
    double best = -2;
    for (int lag = 15; lag <= 35; ++lag)
        if (autocorr(lag) > best) {
            best = autocorr(lag);
            best_lag = lag;
        }
    CHECK(best_lag >= 23);
    CHECK(best_lag <= 27);
}

TEST_CASE("currents correlate with the salinity deficit over plume cells") {
    const auto dom = Domain::coastal(64, 64, 200.0);
    SynthParams p;
    p.seed = 11;
    const auto seq = generate_sequence(p, dom, 100);
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    long n = 0;
    for (const auto& fr : seq.frames) {
        const auto mask = plume_mask(fr, seq.f_ocn, 3.0);
        for (int iy = 0; iy < dom.ny; ++iy)
            for (int ix = 0; ix < dom.nx; ++ix) {
                if (!mask.at(ix, iy) || dom.is_land_cell(ix, iy)) continue;
                const double deficit = seq.f_ocn - fr.salinity.at(ix, iy);
                const double mag = std::hypot(fr.cur_u.at(ix, iy), fr.cur_v.at(ix, iy));
                sx += deficit;
                sy += mag;
                sxx += deficit * deficit;
                syy += mag * mag;
                sxy += deficit * mag;
                ++n;
            }
    }
    REQUIRE(n > 1000);
    const double corr =
        (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    MESSAGE("current-deficit correlation: ", corr);
    CHECK(corr > 0.3);
}

TEST_CASE("sampling interpolates exactly at nodes and midpoints") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    auto seq = generate_sequence(SynthParams{}, dom, 10);
    std::mt19937_64 rng(1);

    const Vec2 node = dom.cell_center(10, 12);
    const double stored = seq.frames[3].salinity.at(10, 12);
    CHECK(sample_salinity(seq, node, 3 * 1800.0, 0.0, rng) == doctest::Approx(stored).epsilon(1e-12));

    // midpoint of two nodes with hand-set values 30 and 34
    seq.frames[0].salinity.at(5, 5) = 30.0f;
    seq.frames[0].salinity.at(6, 5) = 34.0f;
    const Vec2 a = dom.cell_center(5, 5), b = dom.cell_center(6, 5);
    const Vec2 mid{(a.x + b.x) / 2, a.y};
    CHECK(sample_salinity(seq, mid, 0.0, 0.0, rng) == doctest::Approx(32.0).epsilon(1e-12));

    // linear in time
    seq.frames[1].salinity.at(5, 5) = 31.0f;
    CHECK(sample_salinity(seq, a, 900.0, 0.0, rng) == doctest::Approx(30.5).epsilon(1e-12));
}

TEST_CASE("sampling noise has the configured variance") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    const auto seq = generate_sequence(SynthParams{}, dom, 5);
    std::mt19937_64 rng(42);
    const Vec2 x = dom.cell_center(10, 10);
    const int n = 10000;
    double sum = 0, sum2 = 0;
    for (int i = 0; i < n; ++i) {
        const double y = sample_salinity(seq, x, 1800.0, 0.1, rng);
        sum += y;
        sum2 += y * y;
    }
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(var == doctest::Approx(0.01).epsilon(0.2));
}

TEST_CASE("queries outside the world are rejected") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    const auto seq = generate_sequence(SynthParams{}, dom, 5);
    std::mt19937_64 rng(1);
    CHECK_THROWS_WITH_AS(sample_salinity(seq, {-5.0, 100.0}, 0.0, 0.0, rng), "outside world",
                         std::out_of_range);
    CHECK_THROWS_WITH_AS(sample_salinity(seq, {100.0, 100.0}, 1e9, 0.0, rng), "outside world",
                         std::out_of_range);
    // land cell (east column, away from the mouth)
    const Vec2 land = dom.cell_center(31, 2);
    CHECK_THROWS_WITH_AS(current_at(seq, land, 0.0), "outside world", std::out_of_range);
}

TEST_CASE("current lookup matches stored values and points seaward at the mouth on ebb") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    const auto seq = generate_sequence(calm_params(), dom, 30);
    const Vec2 node = dom.cell_center(10, 16);
    const auto c = current_at(seq, node, 2 * 1800.0);
    CHECK(c.x == doctest::Approx(seq.frames[2].cur_u.at(10, 16)).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(seq.frames[2].cur_v.at(10, 16)).epsilon(1e-12));

    // slot 0 is peak outflow in the tidal cycle: the current just seaward of
    // the mouth points away from the coast (-x)
    const Vec2 off_mouth = dom.mouth_center() + Vec2{-2.5 * dom.cell_w(), 0.0};
    const auto cm = current_at(seq, off_mouth, 0.0);
    CHECK(cm.x < 0.0);
}

TEST_CASE("field files round-trip and reject corruption") {
    const auto dir = test::temp_dir("world_io");
    const auto dom = Domain::coastal(32, 32, 200.0);
    SynthParams p;
    p.seed = 9;
    const auto seq = generate_sequence(p, dom, 12);
    const auto path = dir / "world.plm";
    save_sequence(seq, path);

    const auto loaded = load_sequence(path);
    REQUIRE(loaded.num_slots() == seq.num_slots());
    CHECK(loaded.f_ocn == doctest::Approx(seq.f_ocn));
    CHECK(loaded.domain.land == seq.domain.land);
    CHECK(loaded.domain.mouth_ix == seq.domain.mouth_ix);
    CHECK(loaded.domain.mouth_iy == seq.domain.mouth_iy);
    for (int k = 0; k < seq.num_slots(); ++k) {
        CHECK(loaded.frames[k].salinity == seq.frames[k].salinity);
        CHECK(loaded.frames[k].cur_u == seq.frames[k].cur_u);
        CHECK(loaded.frames[k].cur_v == seq.frames[k].cur_v);
        CHECK(loaded.frames[k].wind.angle_rad ==
              doctest::Approx(static_cast<float>(seq.frames[k].wind.angle_rad)));
    }

    // save -> load -> save must be byte stable
    const auto path2 = dir / "world2.plm";
    save_sequence(loaded, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    SUBCASE("bad magic") {
        auto bytes = b1;
        bytes[0] = 'X';
        std::ofstream(dir / "bad.plm", std::ios::binary) << bytes;
        CHECK_THROWS_WITH_AS(load_sequence(dir / "bad.plm"), "bad magic", std::runtime_error);
    }
    SUBCASE("truncated") {
        std::ofstream(dir / "trunc.plm", std::ios::binary) << b1.substr(0, b1.size() / 2);
        CHECK_THROWS_WITH_AS(load_sequence(dir / "trunc.plm"), "truncated file", std::runtime_error);
    }
    SUBCASE("trailing bytes") {
        std::ofstream(dir / "trail.plm", std::ios::binary) << (b1 + "xx");
        CHECK_THROWS_WITH_AS(load_sequence(dir / "trail.plm"), "trailing bytes", std::runtime_error);
    }
}

TEST_CASE("plume mask thresholds") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    FieldFrame fr;
    fr.salinity = GridF(4, 4, 35.0f);
    CHECK(mask_area(plume_mask(fr, 35.0, 3.0)) == 0);

    fr.salinity.at(1, 1) = 32.0f;
    fr.salinity.at(2, 2) = 32.5f;
    const auto mask = plume_mask(fr, 35.0, 3.0);
    CHECK(mask.at(1, 1) == 1);
    CHECK(mask.at(2, 2) == 0);
    CHECK_THROWS_AS(plume_mask(fr, 35.0, 0.0), std::invalid_argument);

    // peak discharge vs slack: strictly larger plume area
    const auto seq = generate_sequence(calm_params(), dom, 30);
    const int peak_area = mask_area(plume_mask(seq.frames[0], seq.f_ocn, 3.0));
    const int slack_area = mask_area(plume_mask(seq.frames[12], seq.f_ocn, 3.0));
    CHECK(peak_area > slack_area);
}

TEST_CASE("salinity stays within physical bounds") {
    const auto dom = Domain::coastal(32, 32, 200.0);
    SynthParams p;
    p.seed = 13;
    p.discharge_var = 4.0;  // stress the clamps
    const auto seq = generate_sequence(p, dom, 120);
    for (const auto& fr : seq.frames)
        for (float s : fr.salinity.raw()) {
            CHECK(s >= 0.0f);
            CHECK(s <= static_cast<float>(p.f_ocn) + 1.0f);
        }
}
