#include "doctest.h"
#include "helpers.hpp"

#include "ks/duhamel.hpp"
#include "ks/norms.hpp"
#include "ks/semigroup.hpp"

#include <cmath>

using namespace ks;

namespace {

const double kLen = 2 * M_PI;  // wavevectors are integer pairs

// f(x) constant in time, with the initial datum attached.
Trajectory constant_in_time(const ScalarField& f, const TimeGrid& tg) {
    return Trajectory(f.grid, tg, std::vector<ScalarField>(tg.size(), f), f);
}

// a(t) f(x) on the nodes, a(0) f as the initial datum.
template <typename A>
Trajectory modulated(const ScalarField& f, const TimeGrid& tg, A a) {
    std::vector<ScalarField> fields;
    for (size_t j = 0; j < tg.size(); ++j) fields.push_back(a(tg[j]) * f);
    return Trajectory(f.grid, tg, std::move(fields), a(0.0) * f);
}

ScalarField cosine(const Grid2D& g, int k1, int k2) {
    return sample(g, [&](double x1, double x2) { return std::cos(k1 * x1 + k2 * x2); });
}

double max_node_error(const Trajectory& a, const std::function<ScalarField(double)>& exact) {
    double e = 0.0;
    for (size_t j = 0; j < a.size(); ++j) e = std::max(e, test::max_abs_diff(a[j], exact(a.tgrid[j])));
    return e;
}

ScalarField shift_rows(const ScalarField& f) {
    RealArray v(f.values.rows(), f.values.cols());
    const auto n = f.values.rows();
    for (Eigen::Index i = 0; i < n; ++i) v.row((i + 1) % n) = f.values.row(i);
    return ScalarField(f.grid, v);
}

Trajectory shift_rows(const Trajectory& t) {
    std::vector<ScalarField> f;
    for (size_t j = 0; j < t.size(); ++j) f.push_back(shift_rows(t[j]));
    std::optional<ScalarField> init;
    if (t.initial) init = shift_rows(*t.initial);
    return Trajectory(t.grid, t.tgrid, std::move(f), std::move(init));
}

const QuadratureScheme linear{QuadratureKind::etd_piecewise_linear, 1};
const QuadratureScheme heat_frame{QuadratureKind::etd_heat_frame_linear, 1};

}  // namespace

TEST_CASE("ETD weight functions: series and closed form agree across the switch") {
    for (double z : {0.2499, 0.25, 0.2501, 1e-8, -0.1}) {
        const double p1 = z == 0 ? 1.0 : -std::expm1(-z) / z;
        const double p2 = (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
        CHECK(etd_phi1(z) == doctest::Approx(p1).epsilon(1e-12));
        if (std::abs(z) > 1e-3) CHECK(etd_phi2(z) == doctest::Approx(p2).epsilon(1e-10));
    }
    CHECK(etd_phi1(0.0) == 1.0);
    CHECK(etd_phi2(0.0) == 0.5);
}

TEST_CASE("B vanishes when v is constant in space") {
    const Grid2D g = make_grid(32, kLen);
    const TimeGrid tg = TimeGrid::geometric(0.01, 2.0, 10);
    const Trajectory u = constant_in_time(test::random_grid_field(g, 1, 6), tg);
    const Trajectory v = constant_in_time(ScalarField(g, RealArray::Constant(32, 32, 4.0)), tg);
    for (size_t j = 0; j < tg.size(); ++j) CHECK(test::max_abs(bilinear_B(u, v, heat_frame)[j]) < 1e-13);
}

TEST_CASE("B is bilinear") {
    const Grid2D g = make_grid(32, 5.0);
    const TimeGrid tg = TimeGrid::geometric(0.01, 1.0, 8);
    const Trajectory u = heat_trajectory(test::random_grid_field(g, 2, 6), tg);
    const Trajectory v = heat_trajectory(test::random_grid_field(g, 3, 6), tg);
    const Trajectory a = bilinear_B(2.5 * u, v, heat_frame);
    const Trajectory b = bilinear_B(u, v, heat_frame);
    for (size_t j = 0; j < tg.size(); ++j) CHECK(test::max_abs_diff(a[j], 2.5 * b[j]) <= 1e-12 * test::max_abs(a[j]));
}

TEST_CASE("B on time-constant cosines matches the closed form") {
    // u = cos(k.x), v = cos(q.x): div(u grad v) = -(q.(q+k)/2) cos((q+k).x) - (q.(q-k)/2) cos((q-k).x)
    const Grid2D g = make_grid(32, kLen);
    const TimeGrid tg = TimeGrid::geometric(0.01, 3.0, 12);
    const int k1 = 2, k2 = 1, q1 = 1, q2 = -3;
    const Trajectory u = constant_in_time(cosine(g, k1, k2), tg);
    const Trajectory v = constant_in_time(cosine(g, q1, q2), tg);
    auto exact = [&](double t) {
        const int p1 = q1 + k1, p2 = q2 + k2, m1 = q1 - k1, m2 = q2 - k2;
        const double cp = -(q1 * p1 + q2 * p2) / 2.0, cm = -(q1 * m1 + q2 * m2) / 2.0;
        const double lp = p1 * p1 + p2 * p2, lm = m1 * m1 + m2 * m2;
        return cp * (1 - std::exp(-t * lp)) / lp * cosine(g, p1, p2) +
               cm * (1 - std::exp(-t * lm)) / lm * cosine(g, m1, m2);
    };
    CHECK(max_node_error(bilinear_B(u, v, linear), exact) < 1e-8);
}

TEST_CASE("L on a time-constant cosine matches the closed form") {
    const Grid2D g = make_grid(32, kLen);
    const TimeGrid tg = TimeGrid::geometric(0.01, 3.0, 12);
    const ScalarField m = cosine(g, 3, -1);
    const double lam = 10;
    const Trajectory out = linear_L(constant_in_time(m, tg), linear);
    CHECK(max_node_error(out, [&](double t) { return (1 - std::exp(-t * (1 + lam))) / (1 + lam) * m; }) < 1e-8);
    const Trajectory undamped = linear_L(constant_in_time(m, tg), linear, false);
    CHECK(max_node_error(undamped, [&](double t) { return (1 - std::exp(-t * lam)) / lam * m; }) < 1e-8);
    CHECK(max_node_error(linear_L(Trajectory(g, tg), heat_frame), [&](double) { return ScalarField(g); }) == 0.0);
}

TEST_CASE("maximal-regularity operator examples") {
    const Grid2D g = make_grid(32, kLen);
    const TimeGrid tg = TimeGrid::geometric(0.01, 3.0, 12);
    const ScalarField m = cosine(g, 2, 2);
    const Trajectory out = maximal_reg_T(constant_in_time(m, tg), linear);
    CHECK(max_node_error(out, [&](double t) { return -(1 - std::exp(-8 * t)) * m; }) < 1e-8);
    const Trajectory flat = maximal_reg_T(constant_in_time(ScalarField(g, RealArray::Constant(32, 32, 2.0)), tg), linear);
    for (size_t j = 0; j < tg.size(); ++j) CHECK(test::max_abs(flat[j]) < 1e-14);
}

TEST_CASE("B has zero spatial mean at every node") {
    const Grid2D g = make_grid(64, 12.0);
    const TimeGrid tg = TimeGrid::geometric(1e-3, 5.0, 16);
    for (unsigned seed = 0; seed < 3; ++seed) {
        const Trajectory u = heat_trajectory(gaussian(g, 1.0, 0.3, seed * 0.5, 0.0), tg);
        const Trajectory v = heat_trajectory(test::random_grid_field(g, seed, 6), tg);
        const Trajectory b = bilinear_B(u, v, heat_frame);
        for (size_t j = 0; j < tg.size(); ++j) CHECK(std::abs(fft2(b[j].values)(0, 0)) / (64.0 * 64.0) < 1e-12);
    }
}

TEST_CASE("operators commute with translations by one cell") {
    const Grid2D g = make_grid(32, 8.0);
    const TimeGrid tg = TimeGrid::geometric(0.01, 2.0, 8);
    const Trajectory u = heat_trajectory(test::random_grid_field(g, 7, 5), tg);
    const Trajectory v = heat_trajectory(test::random_grid_field(g, 8, 5), tg);
    const Trajectory b1 = shift_rows(bilinear_B(u, v, heat_frame));
    const Trajectory b2 = bilinear_B(shift_rows(u), shift_rows(v), heat_frame);
    const Trajectory l1 = shift_rows(linear_L(u, heat_frame));
    const Trajectory l2 = linear_L(shift_rows(u), heat_frame);
    for (size_t j = 0; j < tg.size(); ++j) {
        CHECK(test::max_abs_diff(b1[j], b2[j]) <= 1e-12 * (1 + test::max_abs(b1[j])));
        CHECK(test::max_abs_diff(l1[j], l2[j]) <= 1e-12 * (1 + test::max_abs(l1[j])));
    }
}

TEST_CASE("L is causal") {
    const Grid2D g = make_grid(16, 4.0);
    const TimeGrid tg = TimeGrid::uniform(0.1, 2.0, 20);
    Trajectory u = heat_trajectory(test::random_grid_field(g, 5, 4), tg);
    const Trajectory before = linear_L(u, heat_frame);
    for (size_t j = 12; j < tg.size(); ++j) u[j] = 3.0 * u[j] + test::random_grid_field(g, 99, 4);
    const Trajectory after = linear_L(u, heat_frame);
    for (size_t j = 0; j < 12; ++j) CHECK((before[j].values == after[j].values).all());
    CHECK(test::max_abs_diff(before[15], after[15]) > 0.0);
}

TEST_CASE("refinement order on smooth single-mode data") {
    // L of sin(t) cos(k.x): int_0^t e^{-mu(t-s)} sin s ds = (mu sin t - cos t + e^{-mu t}) / (mu^2 + 1)
    const Grid2D g = make_grid(16, kLen);
    const ScalarField m = cosine(g, 1, 1);
    const double mu = 3.0;
    auto exact = [&](double t) { return (mu * std::sin(t) - std::cos(t) + std::exp(-mu * t)) / (mu * mu + 1) * m; };
    auto error = [&](int K, const QuadratureScheme& q) {
        const TimeGrid tg = TimeGrid::uniform(4.0 / K, 4.0, K);
        return max_node_error(linear_L(modulated(m, tg, [](double t) { return std::sin(t); }), q), exact);
    };

    SUBCASE("piecewise linear: refining the nodes cuts the error by at least 4") {
        for (int K : {8, 16, 32}) {
            const double e1 = error(K, linear), e2 = error(2 * K, linear);
            CAPTURE(K);
            CHECK(e1 / e2 >= 4.0 * 0.95);
        }
    }
    SUBCASE("piecewise constant: doubling substeps cuts the error by at least 2") {
        // measured against the piecewise-linear result on the same nodes, which is
        // the substep limit of the piecewise-constant scheme
        const TimeGrid tg = TimeGrid::uniform(0.25, 4.0, 16);
        const Trajectory f = modulated(m, tg, [](double t) { return std::sin(t); });
        const Trajectory limit = linear_L(f, linear);
        double prev = 0.0;
        for (int s : {1, 2, 4, 8, 16}) {
            const Trajectory out = linear_L(f, {QuadratureKind::etd_piecewise_constant, s});
            double e = 0.0;
            for (size_t j = 0; j < tg.size(); ++j) e = std::max(e, test::max_abs_diff(out[j], limit[j]));
            CAPTURE(s);
            // first order: the reduction tends to 2 (from below for this datum)
            if (prev > 0) CHECK(prev / e >= 2.0 * 0.9);
            prev = e;
        }
    }
}

TEST_CASE("heat-frame scheme is exact on heat-like data") {
    // L of e^{-lam t} cos(k.x): e^{-lam t} (1 - e^{-t}); undamped: t e^{-lam t}
    const Grid2D g = make_grid(32, kLen);
    const TimeGrid tg = TimeGrid::geometric(1e-3, 4.0, 10);
    const ScalarField m = cosine(g, 4, -3);
    const double lam = 25;
    const Trajectory u = heat_trajectory(m, tg);
    const Trajectory damped = linear_L(u, heat_frame);
    CHECK(max_node_error(damped, [&](double t) { return std::exp(-lam * t) * -std::expm1(-t) * m; }) < 1e-13);
    const Trajectory undamped = linear_L(u, heat_frame, false);
    CHECK(max_node_error(undamped, [&](double t) { return t * std::exp(-lam * t) * m; }) < 1e-13);
    // the plain linear scheme is not exact here on the coarse grid
    CHECK(max_node_error(linear_L(u, linear), [&](double t) { return std::exp(-lam * t) * -std::expm1(-t) * m; }) >
          1e-6);
}

TEST_CASE("the two linear schemes converge to the same limit") {
    const Grid2D g = make_grid(32, 10.0);
    auto run = [&](int K, const QuadratureScheme& q) {
        const TimeGrid tg = TimeGrid::uniform(2.0 / K, 2.0, K);
        const Trajectory u = heat_trajectory(gaussian(g, 1.0, 0.5), tg);
        const Trajectory w = damped_heat_trajectory(gaussian(g, 1.0, 0.8, 1.0, -1.0), tg);
        return bilinear_B(u, w, q)[K - 1];
    };
    const ScalarField ref = run(1024, linear);
    const double e_lin = test::max_abs_diff(run(64, linear), ref), e_hf = test::max_abs_diff(run(64, heat_frame), ref);
    MESSAGE("K = 64 errors: piecewise linear " << e_lin << ", heat frame " << e_hf);
    CHECK(e_lin / test::max_abs(ref) < 1e-3);
    CHECK(e_hf / test::max_abs(ref) < 1e-3);
}

TEST_CASE("head segment without an origin datum") {
    const Grid2D g = make_grid(16, kLen);
    const TimeGrid tg = TimeGrid::geometric(0.1, 1.0, 6);
    const ScalarField m = cosine(g, 1, 0);
    Trajectory u(g, tg, std::vector<ScalarField>(tg.size(), m));
    HeadSegment head;
    const Trajectory out = linear_L(u, heat_frame, true, &head);
    CHECK_FALSE(head.included);
    CHECK(head.deficit_estimate > 0.0);
    CHECK(test::max_abs(out[0]) == 0.0);
    u.initial = m;
    linear_L(u, heat_frame, true, &head);
    CHECK(head.included);
    CHECK(head.deficit_estimate == 0.0);
}

TEST_CASE("input validation") {
    const Grid2D g = make_grid(16, 1.0);
    const TimeGrid tg = TimeGrid::geometric(0.1, 1.0, 4);
    CHECK_THROWS_AS(linear_L(Trajectory(), heat_frame), std::invalid_argument);
    const Trajectory a(g, tg), b(make_grid(32, 1.0), tg);
    CHECK_THROWS_AS(bilinear_B(a, b, heat_frame), std::invalid_argument);
    CHECK_THROWS_AS(linear_L(a, {QuadratureKind::etd_piecewise_constant, 0}), std::invalid_argument);
    CHECK(quadrature_kind_from_string(to_string(QuadratureKind::etd_piecewise_constant)) ==
          QuadratureKind::etd_piecewise_constant);
    CHECK_THROWS_AS(quadrature_kind_from_string("simpson"), std::invalid_argument);
}
