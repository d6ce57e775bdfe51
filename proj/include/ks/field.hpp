#pragma once

// Periodic-torus fields and Fourier machinery.
//
// Transform convention: for samples f_j at x_j = -l/2 + j*h (j = 0..n-1 per
// axis), the spectral coefficients are the unnormalized DFT
//
//     F_k = sum_j f_j exp(-2 pi i k.j / n)
//
// indexed in FFT order (k = 0..n/2-1, then -n/2..-1). The inverse divides by
// n^2. Parseval then reads  sum |f|^2 h^2 = (l^2 / n^4) sum |F|^2.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ks {

using Complex = std::complex<double>;

/// n x n real samples, x1 indexes rows, x2 varies fastest.
using RealArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexArray = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Grid2D {
    int n = 0;
    double l = 0.0;

    double h() const { return l / n; }
    double cell_area() const { return h() * h(); }
    double x(int i) const { return -0.5 * l + i * h(); }
    /// Signed integer mode index of FFT slot j.
    int mode_index(int j) const { return j < n / 2 ? j : j - n; }
    double wavenumber(int j) const;
    /// Largest |xi| along one axis, pi*n/l.
    double max_wavenumber() const;
    /// |xi|^2 on the full spectral array.
    RealArray wavenumber_sq() const;

    bool operator==(const Grid2D&) const = default;
};

Grid2D make_grid(int n, double l);

struct ScalarField {
    Grid2D grid;
    RealArray values;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g) : grid(g), values(RealArray::Zero(g.n, g.n)) {}
    ScalarField(const Grid2D& g, RealArray v);

    bool all_finite() const { return values.allFinite(); }
    double integral() const { return values.sum() * grid.cell_area(); }
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);

/// Samples f(x1, x2) on the grid.
template <typename F>
ScalarField sample(const Grid2D& g, F&& f) {
    ScalarField out(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) out.values(i, j) = f(g.x(i), g.x(j));
    return out;
}

struct SpectralField {
    Grid2D grid;
    ComplexArray coeffs;

    SpectralField() = default;
    explicit SpectralField(const Grid2D& g) : grid(g), coeffs(ComplexArray::Zero(g.n, g.n)) {}
    SpectralField(const Grid2D& g, ComplexArray c) : grid(g), coeffs(std::move(c)) {}

    /// True when coeffs(-k) == conj(coeffs(k)) to the given relative tolerance.
    bool is_hermitian(double rel_tol = 1e-12) const;
};

SpectralField to_spectral(const ScalarField& f);
/// Inverse transform; the imaginary part is discarded, which projects onto
/// the Hermitian-symmetric (real) subspace.
ScalarField from_spectral(const SpectralField& F);

// Raw array transforms, used by the hot loops in duhamel/solver.
ComplexArray fft2(const RealArray& f);
ComplexArray fft2(const ComplexArray& f);
ComplexArray ifft2(const ComplexArray& F);
RealArray ifft2_real(const ComplexArray& F);

struct MultiplierSpec {
    struct Heat { double t; };
    struct DampedHeat { double t; };
    struct GradComponent { int axis; };
    struct Laplacian {};
    struct FractionalLaplacian { double alpha; };
    struct Composite { std::vector<MultiplierSpec> factors; };

    using Kind = std::variant<Heat, DampedHeat, GradComponent, Laplacian, FractionalLaplacian, Composite>;
    Kind kind;

    static MultiplierSpec heat(double t) { return {Heat{t}}; }
    static MultiplierSpec damped_heat(double t) { return {DampedHeat{t}}; }
    static MultiplierSpec grad(int axis) { return {GradComponent{axis}}; }
    static MultiplierSpec laplacian() { return {Laplacian{}}; }
    static MultiplierSpec fractional_laplacian(double alpha) { return {FractionalLaplacian{alpha}}; }
    static MultiplierSpec composite(std::vector<MultiplierSpec> f) { return {Composite{std::move(f)}}; }

    Complex evaluate(double xi1, double xi2) const;
};

/// Symbol of m on every grid wavenumber. Throws std::domain_error if any
/// value is not finite (e.g. a negative-order fractional Laplacian at 0).
ComplexArray multiplier_symbol(const MultiplierSpec& m, const Grid2D& g);

ScalarField multiplier_apply(const MultiplierSpec& m, const ScalarField& f);

/// Product with 3/2 zero padding: the result carries exactly the modes of the
/// true product that fit on the grid (the top third never aliases back).
ScalarField pointwise_product(const ScalarField& f, const ScalarField& g);

/// Spectral versions; operate on fft2 coefficient arrays of the same grid.
ComplexArray dealiased_product(const ComplexArray& F, const ComplexArray& G, int n);
/// Zero-pad coefficients from n to m >= n modes per side (m even), splitting
/// the Nyquist row/column symmetrically so real fields stay real.
ComplexArray pad_spectrum(const ComplexArray& F, int m);
/// Truncate from m back to n modes per side, folding +n/2 onto -n/2.
ComplexArray truncate_spectrum(const ComplexArray& F, int n);

std::pair<ScalarField, ScalarField> gradient(const ScalarField& f);
ScalarField divergence(const ScalarField& g1, const ScalarField& g2);

/// i*xi_axis on the spectral array; Nyquist slots set to zero so that
/// derivatives of real fields stay real.
ComplexArray derivative_symbol(const Grid2D& g, int axis);

// KSF1 snapshot: "KSF1", u32 n, f64 l, f64 t, n*n f64 row-major, little endian.
struct Snapshot {
    ScalarField field;
    double t = 0.0;
};

void write_snapshot(std::ostream& os, const ScalarField& f, double t);
Snapshot read_snapshot(std::istream& is);
void write_snapshot_file(const std::string& path, const ScalarField& f, double t);
Snapshot read_snapshot_file(const std::string& path);
/// A sequence file is a concatenation of snapshots.
std::vector<Snapshot> read_snapshot_sequence(const std::string& path);

}  // namespace ks
