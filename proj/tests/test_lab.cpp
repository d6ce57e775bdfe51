#include "doctest.h"
#include "helpers.hpp"

#include "ks/duhamel.hpp"
#include "ks/inequality_lab.hpp"
#include "ks/semigroup.hpp"

#include <cmath>
#include <sstream>

using namespace ks;

namespace {

// composite Simpson on [a, b] with n (even) panels
template <typename F>
double simpson(F f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// e^{t Delta} 1_[0,1](x1) on the line
double heat_stripe(double t, double x1) {
    return 0.5 * (std::erf((1 - x1) / (2 * std::sqrt(t))) + std::erf(x1 / (2 * std::sqrt(t))));
}

ConstantsSettings quick_constants() {
    ConstantsSettings s;
    s.n = 32;
    s.K = 16;
    s.gaussian_widths = {0.5, 1.0};
    s.modes = {1};
    return s;
}

}  // namespace

TEST_CASE("damped-kernel constant against quadrature") {
    CHECK(lemma23_damped_constant(0.0) == 1.0);
    CHECK(lemma23_damped_constant(1.0) == doctest::Approx(std::sqrt(M_PI / (2 * M_E))).epsilon(1e-14));
    for (double theta : {0.5, 1.0, 1.5}) {
        // int_0^inf e^{-t} t^{-theta/2} dt; t = u^k with k = 2/(2 - theta) removes the singularity
        const double k = 2 / (2 - theta);
        const double time_part = simpson([&](double u) { return k * std::exp(-std::pow(u, k)); }, 0.0, 40.0, 200000);
        double sup = 0.0;
        for (int i = 1; i <= 200000; ++i) {
            const double y = 1e-5 * i;
            sup = std::max(sup, std::pow(y, theta) * std::exp(-y * y));
        }
        CAPTURE(theta);
        CHECK(lemma23_damped_constant(theta) == doctest::Approx(time_part * sup).epsilon(1e-4));
    }
}

TEST_CASE("counterexample constant") {
    // c0 = pi^{-1/2} int_1^3 z e^{-z^2} dz
    const double c0 = simpson([](double z) { return z * std::exp(-z * z); }, 1.0, 3.0) / std::sqrt(M_PI);
    CHECK(counterexample_c0() == doctest::Approx(c0).epsilon(1e-12));
    CHECK(counterexample_c0() == doctest::Approx(0.103742).epsilon(1e-5));
}

TEST_CASE("counterexample profile closed form") {
    CHECK(counterexample_closed_form(0.01, 0.15) == doctest::Approx(0.1607).epsilon(1e-3));
    // finite difference of the erf expression
    for (const auto& [t, x1] : counterexample_sweep()) {
        const double h = 1e-6;
        const double fd = std::sqrt(t) * std::abs(heat_stripe(t, x1 + h) - heat_stripe(t, x1 - h)) / (2 * h);
        CHECK(counterexample_closed_form(t, x1) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("counterexample sweep stays in the window and above c0") {
    const auto pts = counterexample_sweep();
    REQUIRE(pts.size() == 10);
    for (const auto& [t, x1] : pts) {
        CHECK(t < 1.0 / 64);
        CHECK(x1 > std::sqrt(t));
        CHECK(x1 < 2 * std::sqrt(t));
    }
    const CounterexampleReport r = counterexample_profile(pts, make_grid(512, 16.0));
    CHECK(r.verdict == "holds");
    CHECK(r.max_grid_rel_error < 0.01);
    CHECK(r.smoothing_width == doctest::Approx(16.0 / 512));
    for (const auto& p : r.points) {
        CHECK(p.closed_form >= r.c0);
        REQUIRE(p.grid_value);
        CHECK(*p.grid_value >= r.c0);
    }
}

TEST_CASE("points outside the window are flagged") {
    CHECK(counterexample_profile({{0.02, 0.2}}).verdict == "outside hypothesis");
    CHECK(counterexample_profile({{0.01, 0.05}}).verdict == "outside hypothesis");
    CHECK(counterexample_profile({{0.01, 0.15}}).verdict == "holds");
}

TEST_CASE("data families") {
    const Grid2D g = make_grid(64, 16.0);
    CHECK(smoothed_stripe(g).integral() == doctest::Approx(16.0).epsilon(1e-12));
    CHECK(smoothed_box(g, -1.0, 1.0, -1.0, 1.0).integral() == doctest::Approx(4.0).epsilon(1e-12));
    // a box edge inside a cell gives a partial value
    const ScalarField half = smoothed_box(g, 0.1, 1.0, -1.0, 1.0);
    CHECK(half.integral() == doctest::Approx(0.9 * 2.0).epsilon(1e-12));

    // random fields are deterministic and sample the same function at any n
    const ScalarField a = random_field(make_grid(32, 16.0), 7), b = random_field(make_grid(64, 16.0), 7);
    CHECK((random_field(make_grid(32, 16.0), 7).values == a.values).all());
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j) CHECK(a.values(i, j) == doctest::Approx(b.values(2 * i, 2 * j)).epsilon(1e-12));
    CHECK(test::max_abs_diff(random_field(g, 7), random_field(g, 8)) > 0.0);

    const ScalarField m = cosine_mode(g, 2, 1);
    CHECK(m.values(0, 0) == doctest::Approx(std::cos(2 * M_PI * (2 * g.x(0) + g.x(0)) / 16.0)));
}

TEST_CASE("time profiles") {
    const Grid2D g = make_grid(16, 4.0);
    const ScalarField f(g, RealArray::Ones(16, 16));
    const TimeGrid tg = TimeGrid::uniform(0.25, 4.0, 16);
    const Trajectory c = profile_trajectory(f, tg, TimeProfile::constant);
    const Trajectory e = profile_trajectory(f, tg, TimeProfile::exponential, 2.0);
    const Trajectory p = profile_trajectory(f, tg, TimeProfile::pulse, 1.0, 1.0);
    const Trajectory s = profile_trajectory(f, tg, TimeProfile::square_wave, 1.0, 2.0);
    REQUIRE(c.initial);
    CHECK(c.initial->values(0, 0) == 1.0);
    for (size_t j = 0; j < tg.size(); ++j) {
        const double t = tg[j];
        CHECK(c[j].values(3, 3) == 1.0);
        CHECK(e[j].values(3, 3) == doctest::Approx(std::exp(-2 * t)));
        CHECK(p[j].values(3, 3) == (t <= 1.0 ? 1.0 : 0.0));
        // on for the first half of each period
        CHECK(s[j].values(3, 3) == (std::fmod(t, 2.0) < 1.0 ? 1.0 : 0.0));
    }
    CHECK(to_string(TimeProfile::pulse) == "pulse");
}

TEST_CASE("the three estimates hold at the base scale") {
    const LabScale scale;
    for (const LemmaReport& r : {verify_multiplier_lemma(scale), verify_maximal_regularity(scale)}) {
        CAPTURE(r.name);
        for (const auto& f : r.failures) MESSAGE(f);
        CHECK(r.passed());
        CHECK(!r.rows.empty());
        for (const auto& [group, bound] : r.group_bound) CHECK(r.group_max.at(group) <= bound);
    }
    const LemmaReport mult = verify_multiplier_lemma(scale);
    // m = 1 is an equality at every sample
    for (const auto& row : mult.rows)
        if (row.group.rfind("m=1 ", 0) == 0) CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("time-convolution estimates at the base scale") {
    const LemmaReport r = verify_bilinear_lemma23(LabScale{});
    for (const auto& f : r.failures) MESSAGE(f);
    CHECK(r.passed());
    // the closed-form constant caps the damped r = p1 groups
    for (const auto& [group, m] : r.group_max) {
        if (group.rfind("damped theta=1 p1=2 r=2", 0) == 0) CHECK(m <= lemma23_damped_constant(1.0));
        if (group.rfind("damped theta=0 p1=2 r=2", 0) == 0) CHECK(m <= 1.0);
    }
}

TEST_CASE("ratio drift on synthetic reports") {
    LemmaReport a, b;
    a.name = "x";
    a.group_max = {{"g1", 1.0}, {"g2", 0.5}, {"only_a", 3.0}, {"zero", 0.0}};
    b.group_max = {{"g1", 1.05}, {"g2", 0.5}, {"zero", 0.0}};
    const DriftReport d = ratio_drift(a, b);
    CHECK(d.drift.size() == 2);
    CHECK(d.drift.at("g1") == doctest::Approx(0.05 / 1.05));
    CHECK(d.drift.at("g2") == 0.0);
    CHECK(d.passed());
    b.group_max["g2"] = 1.0;
    CHECK_FALSE(ratio_drift(a, b).passed());
    CHECK(ratio_drift(a, b, 0.6).passed());
}

TEST_CASE("CSV quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
    std::ostringstream os;
    write_csv(os, {{"grp", "fam,ily", "p=1", 1.0, 2.0, 0.5}});
    CHECK(os.str() == "family,params,lhs,rhs,ratio\r\n\"fam,ily\",grp;p=1,1,2,0.5\r\n");
}

TEST_CASE("constant estimation") {
    const ConstantsSettings s = quick_constants();
    const ConstantsReport r = estimate_constants(s);
    CHECK(r.c1 > 0.0);
    CHECK(r.c2 > 0.0);
    CHECK(r.c3 > 0.0);
    CHECK(r.raw_max == std::max({r.c1, r.c2, r.c3}));
    CHECK(r.c == doctest::Approx(1.5 * r.raw_max));
    CHECK(r.threshold == doctest::Approx(3.0 / (32 * r.c * r.c)));
    CHECK(r.consistent);
    for (const auto& smp : r.samples) CHECK(std::isfinite(smp.ratio));

    SUBCASE("dropping families can only lower the estimates") {
        const auto fams = constant_families(make_grid(s.n, s.l), s);
        const ConstantsReport sub = estimate_constants(s, {fams.begin(), fams.begin() + 2});
        CHECK(sub.c1 <= r.c1);
        CHECK(sub.c2 <= r.c2);
        CHECK(sub.c3 <= r.c3);
    }
    SUBCASE("forced constants") {
        const ConstantsReport tiny = force_constant(r, 1e-6);
        CHECK_FALSE(tiny.consistent);
        CHECK(!tiny.notices.empty());
        CHECK(tiny.c == 1e-6);
        const ConstantsReport two = force_constant(r, 2.0);
        CHECK(two.threshold == doctest::Approx(3.0 / 128.0));
        CHECK(two.forced_c == 2.0);
        CHECK(two.consistent == (2.0 >= r.raw_max));
        CHECK_THROWS_AS(force_constant(r, 0.0), std::invalid_argument);
    }
    SUBCASE("the estimated c covers L on data outside the families") {
        const Grid2D g = make_grid(s.n, s.l);
        const TimeGrid tg = TimeGrid::geometric(s.t_min, s.T, s.K);
        for (unsigned seed = 1; seed <= 3; ++seed) {
            const Trajectory u = heat_trajectory(gaussian(g, 1.0, 0.7, 0.4 * seed, -0.3), tg);
            const Trajectory L = linear_L(u, QuadratureScheme{});
            for (TheoremMode mode : {TheoremMode::thm1_L1Linf, TheoremMode::thm2_H1bH1})
                CHECK(y_norm(mode, L) <= r.c * x_norm(mode, u));
        }
    }
    SUBCASE("csv has one row per sample") {
        std::ostringstream os;
        write_csv(os, r);
        size_t lines = 0;
        for (char ch : os.str()) lines += ch == '\n';
        CHECK(lines == r.samples.size() + 1);
    }
}
