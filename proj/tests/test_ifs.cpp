#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fraclab/error.hpp"
#include "fraclab/ifs.hpp"
#include "fraclab/rng.hpp"

using namespace fraclab;

namespace {

// Standard open-set cells: kites over the base segment pinned at the endpoints.
// The Koch cell has the curve's convex-hull apex; the Minkowski cell matches
// the generator's 0-cell shape.
std::vector<Vec2> koch_cell(double h, double depth) {
    return {{0, 0}, {0.5, -depth}, {1, 0}, {0.5, h}};
}

std::vector<Vec2> minkowski_cell(double h) {
    return {{0, 0}, {0.65, -h}, {1, 0}, {0.35, h}};
}

}  // namespace

TEST_CASE("similitude construction and application") {
    CHECK_THROWS_AS(Similitude(0.0, false, 1.0, {0, 0}), ConfigError);
    CHECK_THROWS_AS(Similitude(0.0, false, 0.0, {0, 0}), ConfigError);
    CHECK_NOTHROW(Similitude(0.0, false, 0.999999, {0, 0}));

    // Koch psi_1: ratio 1/3, no rotation, zero translation.
    const Similitude psi1(0.0, false, 1.0 / 3.0, {0, 0});
    const Vec2 img = psi1.apply({1, 0});
    CHECK(img.x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(img.y == doctest::Approx(0.0).epsilon(1e-14));

    // First Minkowski map fixes the origin.
    const auto mink = IfsSystem::minkowski();
    const Vec2 fixed = mink.families[0].maps[0].apply({0, 0});
    CHECK(fixed.norm() == doctest::Approx(0.0).epsilon(1e-14));

    // Distance contraction equals the ratio for a generic pair.
    const Similitude general(0.7, true, 0.37, {1.5, -2.0});
    const Vec2 a{0.3, 0.9}, b{-1.1, 0.2};
    CHECK(dist(general.apply(a), general.apply(b)) ==
          doctest::Approx(0.37 * dist(a, b)).epsilon(1e-12));
}

TEST_CASE("prefractal generation: koch") {
    const auto koch = IfsSystem::koch();

    const auto k0 = generate_prefractal(koch, 0);
    REQUIRE(k0.segments.size() == 1);
    CHECK(k0.segments[0].p0 == Vec2{0, 0});
    CHECK(k0.segments[0].p1 == Vec2{1, 0});
    CHECK(k0.total_length == doctest::Approx(1.0).epsilon(1e-15));

    const auto k1 = generate_prefractal(koch, 1);
    REQUIRE(k1.segments.size() == 4);
    CHECK(k1.total_length == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    for (const auto& s : k1.segments) CHECK(s.weight == doctest::Approx(0.25).epsilon(1e-15));
    // Apex of the middle bump.
    CHECK(k1.segments[1].p1.x == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(k1.segments[1].p1.y ==
          doctest::Approx(std::sqrt(3.0) / 6.0).epsilon(1e-12));
}

TEST_CASE("prefractal generation: minkowski") {
    const auto mink = IfsSystem::minkowski();
    const auto k1 = generate_prefractal(mink, 1);
    REQUIRE(k1.segments.size() == 8);
    CHECK(k1.total_length == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("level overflow guard") {
    auto koch = IfsSystem::koch();
    koch.segment_cap = 4 * 4;
    CHECK_NOTHROW(generate_prefractal(koch, 2));
    CHECK_THROWS_AS(generate_prefractal(koch, 3), ConfigError);
}

TEST_CASE("contraction sum D and sigma") {
    const auto koch = IfsSystem::koch();
    CHECK(contraction_sum_D(koch)[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    const auto mink = IfsSystem::minkowski();
    CHECK(contraction_sum_D(mink)[0] == doctest::Approx(2.0).epsilon(1e-15));

    IfsSystem single;
    GeneratorFamily fam;
    fam.maps.push_back(Similitude(0.0, false, 0.42, {0, 0}));
    fam.name = "single";
    single.families = {fam};
    CHECK(contraction_sum_D(single)[0] == doctest::Approx(0.42).epsilon(1e-15));

    CHECK(sigma(koch, 0) == 1.0);
    CHECK(sigma(koch, 2) == doctest::Approx(0.5625).epsilon(1e-14));
    CHECK(sigma(mink, 3) == doctest::Approx(0.125).epsilon(1e-14));

    // Acceptance table: sigma exact to 1e-12 over m = 0..8.
    for (int m = 0; m <= 8; ++m) {
        CHECK(std::abs(sigma(koch, m) - std::pow(0.75, m)) < 1e-12);
        CHECK(std::abs(sigma(mink, m) - std::pow(0.5, m)) < 1e-12);
    }
}

TEST_CASE("cell measures") {
    const auto mink = IfsSystem::minkowski();
    CHECK(cell_measure(mink, std::vector<int>{}) == 1.0);
    const std::vector<int> w2{3, 5};
    CHECK(cell_measure(mink, w2) == doctest::Approx(1.0 / 64.0).epsilon(1e-14));

    // Koch mixture: any word of length m has measure 4^-m.
    EnvironmentSpec env;
    env.rule = EnvironmentRule::Periodic;
    env.pattern = {0, 1};
    const auto mix = IfsSystem::koch_mixture(3.0, 3.5, env, 6);
    Rng rng(7);
    for (int m = 1; m <= 6; ++m) {
        std::vector<int> word;
        for (int i = 0; i < m; ++i) word.push_back(rng.uniform_int(0, 3));
        CHECK(cell_measure(mix, word) ==
              doctest::Approx(std::pow(4.0, -m)).epsilon(1e-12));
    }
}

TEST_CASE("weight normalization, length identity, endpoint fixing") {
    for (const auto& ifs : {IfsSystem::koch(), IfsSystem::minkowski()}) {
        for (int m = 0; m <= 6; ++m) {
            const auto curve = generate_prefractal(ifs, m);
            double wsum = 0.0;
            for (const auto& s : curve.segments) wsum += s.weight;
            CHECK(std::abs(wsum - 1.0) < 1e-12);
            CHECK(std::abs(curve.total_length * sigma(ifs, m) - 1.0) < 1e-10);
            CHECK(dist(curve.segments.front().p0, ifs.base_a) == 0.0);
            CHECK(dist(curve.segments.back().p1, ifs.base_b) == 0.0);
            // Consecutive segments share endpoints.
            for (size_t i = 0; i + 1 < curve.segments.size(); ++i)
                CHECK(dist(curve.segments[i].p1, curve.segments[i + 1].p0) < 1e-12);
        }
    }
}

TEST_CASE("word self-similarity of the measure") {
    const auto koch = IfsSystem::koch();
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> word;
        const int len = rng.uniform_int(0, 5);
        for (int i = 0; i < len; ++i) word.push_back(rng.uniform_int(0, 3));
        const double parent = cell_measure(koch, word);
        double children = 0.0;
        for (int c = 0; c < 4; ++c) {
            auto ext = word;
            ext.push_back(c);
            children += cell_measure(koch, ext);
        }
        CHECK(std::abs(parent - children) < 1e-12);
    }
}

TEST_CASE("open set condition: koch and minkowski hold, overlap detected") {
    const auto koch = IfsSystem::koch();
    const auto koch_O = koch_cell(std::sqrt(3.0) / 6.0, 0.1);
    const auto koch_Op = koch_cell(0.35, 0.15);
    const auto rep = check_open_set_condition(koch, koch_O, koch_Op);
    for (const auto& v : rep.violations) INFO(v.kind << ": " << v.detail);
    CHECK(rep.holds);

    const auto mink = IfsSystem::minkowski();
    const auto mink_O = minkowski_cell(0.4);
    const auto mink_Op = minkowski_cell(0.45);
    const auto repm = check_open_set_condition(mink, mink_O, mink_Op);
    for (const auto& v : repm.violations) INFO(v.kind << ": " << v.detail);
    CHECK(repm.holds);

    // Verdicts stable between levels 1 and 2.
    CHECK(check_open_set_condition(koch, koch_O, koch_Op, 2).holds == rep.holds);
    CHECK(check_open_set_condition(mink, mink_O, mink_Op, 2).holds == repm.holds);

    // Deliberately overlapping two-map system.
    IfsSystem overlap;
    GeneratorFamily fam;
    fam.name = "overlap";
    fam.maps.push_back(Similitude(0.0, false, 0.9, {0, 0}));
    fam.maps.push_back(Similitude(0.0, false, 0.9, {0.1, 0}));
    overlap.families = {fam};
    const auto bad = check_open_set_condition(overlap, koch_O, koch_Op);
    CHECK(!bad.holds);
    bool has_overlap_witness = false;
    for (const auto& v : bad.violations)
        if (v.kind == "overlap" && v.magnitude > 0.0) has_overlap_witness = true;
    CHECK(has_overlap_witness);

    // Non-convex polygon rejected.
    const std::vector<Vec2> reflex{{0, 0}, {1, 0}, {0.5, 0.2}, {0.5, 1}};
    CHECK_THROWS_AS(check_open_set_condition(koch, reflex, koch_Op), ConfigError);

    // One-sided cell violates the endpoint pinning of the strong condition.
    const std::vector<Vec2> triangle{{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 6.0}};
    const auto onesided = check_open_set_condition(koch, triangle, koch_Op);
    CHECK(!onesided.holds);
}

TEST_CASE("measure density ratios") {
    const auto koch = IfsSystem::koch();
    const auto k0 = generate_prefractal(koch, 0);

    std::vector<DensitySample> probes{{{0.5, 0.0}, 0.25, 0.0}, {{0.5, 2.0}, 0.5, 0.0}};
    const auto res = measure_density_ratio(koch, k0, probes);
    CHECK(res[0].ratio == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res[1].ratio == 0.0);

    CHECK_THROWS_AS(measure_density_ratio(koch, k0,
                                          std::vector<DensitySample>{{{0, 0}, 0.0, 0.0}}),
                    ConfigError);

    // Uniformity: the m=4 maximum stays within a factor 10 of the m=0 maximum.
    const auto k4 = generate_prefractal(koch, 4);
    Rng rng(123);
    auto random_probes = [&](const PrefractalCurve& curve) {
        std::vector<DensitySample> v;
        for (int i = 0; i < 200; ++i) {
            const auto& seg = curve.segments[rng.uniform_int(
                0, static_cast<int>(curve.segments.size()) - 1)];
            const double t = rng.uniform();
            v.push_back({seg.p0 + t * (seg.p1 - seg.p0), rng.uniform(0.01, 1.0), 0.0});
        }
        return v;
    };
    auto max_ratio = [](const std::vector<DensitySample>& v) {
        double mx = 0.0;
        for (const auto& s : v) mx = std::max(mx, s.ratio);
        return mx;
    };
    const double max0 = max_ratio(measure_density_ratio(koch, k0, random_probes(k0)));
    const double max4 = max_ratio(measure_density_ratio(koch, k4, random_probes(k4)));
    CHECK(max4 < 10.0 * max0);
    CHECK(max0 < 10.0 * max4);
}

TEST_CASE("measure report assembly") {
    const auto koch = IfsSystem::koch();
    const std::vector<DensitySample> probes{{{0.5, 0.0}, 0.5, 0.0}};
    const auto rep = build_measure_report(koch, 4, probes);
    REQUIRE(rep.sigma_per_level.size() == 5);
    for (int m = 0; m <= 4; ++m)
        CHECK(rep.sigma_per_level[m] == sigma(koch, m));  // sigma_m = D^-m by construction
    CHECK(rep.D_per_family[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(rep.dimension == doctest::Approx(std::log(4.0) / std::log(3.0)).epsilon(1e-12));
    CHECK(rep.density_samples.size() == 1);
}

TEST_CASE("mixture dimension") {
    CHECK(mixture_dimension(1.0, 0.0, 3.0, 3.0) ==
          doctest::Approx(std::log(4.0) / std::log(3.0)).epsilon(1e-12));
    CHECK(mixture_dimension(0.5, 0.5, 3.0, 3.0) ==
          doctest::Approx(std::log(4.0) / std::log(3.0)).epsilon(1e-12));
    // l -> 4 pushes the dimension to 1 from above.
    const double near = mixture_dimension(0.0, 1.0, 3.0, 4.0 - 1e-9);
    CHECK(near > 1.0);
    CHECK(near == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(mixture_dimension(0.6, 0.6, 3.0, 3.0), ConfigError);
}

TEST_CASE("environment construction") {
    EnvironmentSpec constant;
    constant.rule = EnvironmentRule::Constant;
    constant.constant_label = 1;
    const auto c = build_environment(constant, 5, 2);
    CHECK(c.sequence == std::vector<int>{1, 1, 1, 1, 1});
    CHECK(c.frequency[1][4] == 1.0);

    EnvironmentSpec periodic;
    periodic.rule = EnvironmentRule::Periodic;
    periodic.pattern = {0, 1};
    const auto p = build_environment(periodic, 4, 2);
    CHECK(p.frequency[0][3] == doctest::Approx(0.5));

    EnvironmentSpec freq;
    freq.rule = EnvironmentRule::FrequencyTarget;
    freq.target_p = {0.75, 0.25};
    freq.c0 = 1.0;
    const auto f = build_environment(freq, 8, 2);
    CHECK(f.feasible);
    for (int m = 1; m <= 8; ++m)
        for (int a = 0; a < 2; ++a)
            CHECK(std::abs(f.frequency[a][m - 1] - freq.target_p[a]) <= 1.0 / m + 1e-12);

    // Infeasible tolerance still returns a best-effort sequence with flags.
    EnvironmentSpec tight;
    tight.rule = EnvironmentRule::FrequencyTarget;
    tight.target_p = {0.6, 0.4};
    tight.c0 = 0.05;
    const auto t = build_environment(tight, 4, 2);
    CHECK(!t.feasible);
    CHECK(!t.violations.empty());
    CHECK(t.sequence.size() == 4);
}

TEST_CASE("mixture sigma uses the per-level family") {
    EnvironmentSpec env;
    env.rule = EnvironmentRule::Periodic;
    env.pattern = {0, 1};
    const auto mix = IfsSystem::koch_mixture(3.0, 3.5, env, 4);
    // D_a = 4 / l_a in the plane.
    const double d0 = 4.0 / 3.0, d1 = 4.0 / 3.5;
    CHECK(sigma(mix, 1) == doctest::Approx(1.0 / d0).epsilon(1e-14));
    CHECK(sigma(mix, 2) == doctest::Approx(1.0 / (d0 * d1)).epsilon(1e-14));
    CHECK(sigma(mix, 4) == doctest::Approx(1.0 / (d0 * d1 * d0 * d1)).epsilon(1e-14));

    const auto curve = generate_prefractal(mix, 3);
    CHECK(curve.segments.size() == 64);
    double wsum = 0.0;
    for (const auto& s : curve.segments) wsum += s.weight;
    CHECK(std::abs(wsum - 1.0) < 1e-12);
}

TEST_CASE("curve export format") {
    const auto koch = IfsSystem::koch();
    const auto k1 = generate_prefractal(koch, 1);
    std::ostringstream os;
    write_curve(k1, koch, os);
    const std::string text = os.str();
    CHECK(text.starts_with("# ifs-curve level=1 D="));
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);  // header + 4 segments
}
