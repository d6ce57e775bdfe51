#include "doctest.h"
#include "helpers.hpp"

#include "ks/field.hpp"

#include <cmath>
#include <sstream>

using namespace ks;

namespace {

// Direct O(n^4) DFT in the library's sign and index convention.
ComplexArray direct_dft(const RealArray& f) {
    const int n = static_cast<int>(f.rows());
    ComplexArray F(n, n);
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < n; ++k2) {
            Complex s = 0.0;
            for (int j1 = 0; j1 < n; ++j1)
                for (int j2 = 0; j2 < n; ++j2)
                    s += f(j1, j2) * std::polar(1.0, -2.0 * M_PI * (k1 * j1 + k2 * j2) / n);
            F(k1, k2) = s;
        }
    return F;
}

}  // namespace

TEST_CASE("grid geometry") {
    const Grid2D g = make_grid(16, 16.0);
    CHECK(g.h() == doctest::Approx(1.0));
    CHECK(g.x(0) == doctest::Approx(-8.0));
    // wavenumbers -pi .. pi in steps of pi/8
    CHECK(g.wavenumber(1) == doctest::Approx(M_PI / 8));
    CHECK(g.wavenumber(8) == doctest::Approx(-M_PI));
    CHECK(g.wavenumber(15) == doctest::Approx(-M_PI / 8));
    CHECK(g.max_wavenumber() == doctest::Approx(M_PI));
    CHECK(make_grid(128, 32.0).h() == doctest::Approx(0.25));
    CHECK_THROWS_AS(make_grid(100, 32.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(64, -1.0), std::invalid_argument);
}

TEST_CASE("constant field has only the zero mode") {
    const Grid2D g = make_grid(16, 4.0);
    const ScalarField one(g, RealArray::Ones(16, 16));
    SpectralField F = to_spectral(one);
    CHECK(std::abs(F.coeffs(0, 0) - Complex(256.0, 0.0)) < 1e-12);
    F.coeffs(0, 0) = 0.0;
    CHECK(F.coeffs.abs().maxCoeff() < 1e-12);
}

TEST_CASE("single cosine gives a conjugate pair at k = (+-1, 0)") {
    const Grid2D g = make_grid(32, 8.0);
    const ScalarField f = sample(g, [&](double x1, double) { return std::cos(2 * M_PI * x1 / g.l); });
    ComplexArray F = to_spectral(f).coeffs;
    const double half = 32.0 * 32.0 / 2.0;
    CHECK(std::abs(F(1, 0)) == doctest::Approx(half));
    CHECK(std::abs(F(31, 0) - std::conj(F(1, 0))) < 1e-10);
    F(1, 0) = F(31, 0) = 0.0;
    CHECK(F.abs().maxCoeff() < 1e-10);
}

TEST_CASE("transform matches direct summation at n = 16") {
    const Grid2D g = make_grid(16, 3.0);
    const ScalarField f = test::random_grid_field(g, 11, 7);
    const ComplexArray F = fft2(f.values);
    const ComplexArray D = direct_dft(f.values);
    CHECK((F - D).abs().maxCoeff() / D.abs().maxCoeff() < 1e-12);
}

TEST_CASE("round trip on random real fields") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const Grid2D g = make_grid(64, 10.0);
        const ScalarField f = test::random_grid_field(g, seed, 20);
        const ScalarField back = from_spectral(to_spectral(f));
        CHECK(test::max_abs_diff(f, back) / test::max_abs(f) < 1e-12);
        CHECK(to_spectral(f).is_hermitian());
    }
}

TEST_CASE("Parseval between lp_norm-style sums and spectral sums") {
    const Grid2D g = make_grid(64, 7.0);
    const ScalarField f = test::random_grid_field(g, 5, 12);
    const double physical = f.values.square().sum() * g.cell_area();
    const double spectral = fft2(f.values).abs2().sum() * g.l * g.l / std::pow(64.0, 4);
    CHECK(std::abs(physical - spectral) / physical < 1e-10);
}

TEST_CASE("multiplier examples") {
    const Grid2D g = make_grid(32, 2 * M_PI);
    const ScalarField f = test::random_grid_field(g, 8, 6);
    SUBCASE("heat at t = 0 is the identity") {
        CHECK(test::max_abs_diff(multiplier_apply(MultiplierSpec::heat(0.0), f), f) < 1e-13);
    }
    SUBCASE("heat on an eigenfunction") {
        const ScalarField m = sample(g, [](double x1, double x2) { return std::cos(3 * x1 + 2 * x2); });
        const ScalarField out = multiplier_apply(MultiplierSpec::heat(0.1), m);
        CHECK(test::max_abs_diff(out, std::exp(-0.1 * 13) * m) < 1e-13);
    }
    SUBCASE("Lambda on cos(k.x) gives |k| cos(k.x)") {
        const ScalarField m = sample(g, [](double x1, double x2) { return std::cos(3 * x1 + 4 * x2); });
        const ScalarField out = multiplier_apply(MultiplierSpec::fractional_laplacian(1.0), m);
        CHECK(test::max_abs_diff(out, 5.0 * m) < 1e-12);
    }
    SUBCASE("heat semigroup composition") {
        const ScalarField a = multiplier_apply(MultiplierSpec::heat(0.3),
                                               multiplier_apply(MultiplierSpec::heat(0.2), f));
        const ScalarField b = multiplier_apply(MultiplierSpec::heat(0.5), f);
        CHECK(test::max_abs_diff(a, b) / test::max_abs(b) < 1e-12);
    }
    SUBCASE("negative-order Lambda is not finite at the zero mode") {
        CHECK_THROWS_AS(multiplier_symbol(MultiplierSpec::fractional_laplacian(-1.0), g), std::domain_error);
    }
}

TEST_CASE("pointwise product identities") {
    const Grid2D g = make_grid(32, 2 * M_PI);
    const ScalarField f = test::random_grid_field(g, 21, 4);
    const ScalarField one(g, RealArray::Ones(32, 32));
    CHECK(test::max_abs_diff(pointwise_product(f, one), f) < 1e-12);

    // cos^2 = 1/2 + cos(2 k x)/2 with 2k inside the retained band
    const ScalarField c = sample(g, [](double x1, double) { return std::cos(3 * x1); });
    const ScalarField expect = sample(g, [](double x1, double) { return 0.5 + 0.5 * std::cos(6 * x1); });
    CHECK(test::max_abs_diff(pointwise_product(c, c), expect) < 1e-12);
}

TEST_CASE("dealiased product equals the exact product on the retained modes") {
    // Full-band random fields at n = 32; the oracle samples the exact product
    // on a 96-point grid, where the trapezoid rule integrates every term of
    // the product times a retained mode exactly.
    const int n = 32, N = 96;
    const double l = 5.0;
    const Grid2D g = make_grid(n, l);
    const test::TrigField a = test::random_trig(l, 15, 3), b = test::random_trig(l, 15, 4);
    const ComplexArray P = fft2(pointwise_product(sample(g, a), sample(g, b)).values);
    RealArray ab(N, N);
    for (int i1 = 0; i1 < N; ++i1)
        for (int i2 = 0; i2 < N; ++i2) {
            const double y1 = -l / 2 + i1 * l / N, y2 = -l / 2 + i2 * l / N;
            ab(i1, i2) = a(y1, y2) * b(y1, y2);
        }
    double worst = 0.0, scale = 0.0;
    for (int k1 = -n / 2 + 1; k1 < n / 2; ++k1)
        for (int k2 = -n / 2 + 1; k2 < n / 2; ++k2) {
            Complex s = 0.0;
            for (int i1 = 0; i1 < N; ++i1)
                for (int i2 = 0; i2 < N; ++i2) {
                    const double phase = 2 * M_PI * (k1 * i1 + k2 * i2) / static_cast<double>(N);
                    s += ab(i1, i2) * std::polar(1.0, -phase);
                }
            s *= static_cast<double>(n) * n / (static_cast<double>(N) * N);
            const Complex got = P((k1 + n) % n, (k2 + n) % n);
            worst = std::max(worst, std::abs(got - s));
            scale = std::max(scale, std::abs(s));
        }
    CHECK(worst / scale < 1e-10);
}

TEST_CASE("pointwise product is symmetric and bilinear") {
    const Grid2D g = make_grid(32, 4.0);
    for (unsigned seed = 0; seed < 5; ++seed) {
        const ScalarField f = test::random_grid_field(g, 100 + seed, 10);
        const ScalarField h = test::random_grid_field(g, 200 + seed, 10);
        const ScalarField k = test::random_grid_field(g, 300 + seed, 10);
        const double alpha = 0.7 + seed;
        CHECK(test::max_abs_diff(pointwise_product(f, h), pointwise_product(h, f)) < 1e-12);
        const ScalarField lhs = pointwise_product(alpha * f + h, k);
        const ScalarField rhs = alpha * pointwise_product(f, k) + pointwise_product(h, k);
        CHECK(test::max_abs_diff(lhs, rhs) / test::max_abs(rhs) < 1e-12);
    }
}

TEST_CASE("gradient and divergence") {
    const Grid2D g = make_grid(32, 6.0);
    const double k = 2 * M_PI / g.l;
    const ScalarField c(g, RealArray::Constant(32, 32, 3.0));
    const auto [c1, c2] = gradient(c);
    CHECK(test::max_abs(c1) < 1e-12);
    CHECK(test::max_abs(c2) < 1e-12);

    const ScalarField s = sample(g, [&](double x1, double) { return std::sin(k * x1); });
    const auto [g1, g2] = gradient(s);
    const ScalarField expect = sample(g, [&](double x1, double) { return k * std::cos(k * x1); });
    CHECK(test::max_abs_diff(g1, expect) < 1e-12);
    CHECK(test::max_abs(g2) < 1e-12);

    for (unsigned seed = 0; seed < 3; ++seed) {
        const ScalarField d = divergence(test::random_grid_field(g, seed, 12), test::random_grid_field(g, seed + 9, 12));
        CHECK(std::abs(d.integral()) < 1e-12);
    }
}

TEST_CASE("derivative symbols vanish on the Nyquist slots") {
    const Grid2D g = make_grid(16, 1.0);
    const ComplexArray D1 = derivative_symbol(g, 0), D2 = derivative_symbol(g, 1);
    for (int j = 0; j < 16; ++j) {
        CHECK(D1(8, j) == Complex(0.0));
        CHECK(D2(j, 8) == Complex(0.0));
    }
    CHECK(D1(1, 0).imag() == doctest::Approx(2 * M_PI));
}

TEST_CASE("padding then truncation is the identity") {
    const Grid2D g = make_grid(32, 1.0);
    const ComplexArray F = fft2(test::random_grid_field(g, 77, 15).values);
    const ComplexArray back = truncate_spectrum(pad_spectrum(F, 48), 32);
    CHECK((back - F).abs().maxCoeff() < 1e-9);
}

TEST_CASE("KSF1 snapshots round trip bit for bit") {
    const Grid2D g = make_grid(16, 2.5);
    const ScalarField f = test::random_grid_field(g, 4, 5);
    std::stringstream ss;
    write_snapshot(ss, f, 0.125);
    write_snapshot(ss, 2.0 * f, 0.25);
    const Snapshot s = read_snapshot(ss);
    CHECK(s.t == 0.125);
    CHECK(s.field.grid == g);
    CHECK((s.field.values == f.values).all());

    std::stringstream bad("KSF2garbage");
    CHECK_THROWS(read_snapshot(bad));
}
