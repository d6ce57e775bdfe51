#include "ks/field.hpp"

#include <fftw3.h>

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace ks {

namespace {

// FFTW planning is not thread safe; execution through the new-array
// interface is. Plans are built once per size under a lock and reused.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        auto* in = fftw_alloc_complex(static_cast<size_t>(n) * n);
        auto* out = fftw_alloc_complex(static_cast<size_t>(n) * n);
        // ESTIMATE keeps plan choice, and therefore every output bit, reproducible.
        fftw_plan p = fftw_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (!p) throw std::runtime_error("FFTW failed to build a plan");
        plans_.emplace(key, p);
        return p;
    }

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

void execute(int n, int sign, const ComplexArray& in, ComplexArray& out) {
    fftw_plan p = PlanCache::instance().get(n, sign);
    // c2c out-of-place plans preserve their input, so the const_cast is safe.
    fftw_execute_dft(p, as_fftw(const_cast<Complex*>(in.data())), as_fftw(out.data()));
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_same_grid(const Grid2D& a, const Grid2D& b) {
    if (!(a == b)) throw std::invalid_argument("fields live on different grids");
}

// Axis-wise source/target slot lists used by pad/truncate. Returns (slot, weight) pairs.
std::vector<std::pair<int, double>> pad_targets(int k, int n, int m) {
    auto slot = [m](int kk) { return kk >= 0 ? kk : kk + m; };
    if (k == -n / 2) return {{slot(-n / 2), 0.5}, {slot(n / 2), 0.5}};
    return {{slot(k), 1.0}};
}

}  // namespace

double Grid2D::wavenumber(int j) const { return 2.0 * std::numbers::pi * mode_index(j) / l; }

double Grid2D::max_wavenumber() const { return std::numbers::pi * n / l; }

RealArray Grid2D::wavenumber_sq() const {
    RealArray out(n, n);
    for (int i = 0; i < n; ++i) {
        const double a = wavenumber(i);
        for (int j = 0; j < n; ++j) {
            const double b = wavenumber(j);
            out(i, j) = a * a + b * b;
        }
    }
    return out;
}

Grid2D make_grid(int n, double l) {
    if (!is_power_of_two(n) || n < 16)
        throw std::invalid_argument("grid size n must be a power of two >= 16, got " + std::to_string(n));
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("grid side length must be positive");
    return Grid2D{n, l};
}

ScalarField::ScalarField(const Grid2D& g, RealArray v) : grid(g), values(std::move(v)) {
    if (values.rows() != g.n || values.cols() != g.n)
        throw std::invalid_argument("field shape does not match grid");
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid);
    return ScalarField(a.grid, a.values + b.values);
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid);
    return ScalarField(a.grid, a.values - b.values);
}

ScalarField operator*(double s, const ScalarField& a) { return ScalarField(a.grid, s * a.values); }

bool SpectralField::is_hermitian(double rel_tol) const {
    const int n = grid.n;
    const double scale = std::max(coeffs.abs().maxCoeff(), 1e-300);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Complex a = coeffs(i, j);
            const Complex b = std::conj(coeffs((n - i) % n, (n - j) % n));
            if (std::abs(a - b) > rel_tol * scale) return false;
        }
    }
    return true;
}

ComplexArray fft2(const ComplexArray& f) {
    const int n = static_cast<int>(f.rows());
    ComplexArray out(n, n);
    execute(n, FFTW_FORWARD, f, out);
    return out;
}

ComplexArray fft2(const RealArray& f) { return fft2(ComplexArray(f.cast<Complex>())); }

ComplexArray ifft2(const ComplexArray& F) {
    const int n = static_cast<int>(F.rows());
    ComplexArray out(n, n);
    execute(n, FFTW_BACKWARD, F, out);
    out /= static_cast<double>(n) * n;
    return out;
}

RealArray ifft2_real(const ComplexArray& F) { return ifft2(F).real(); }

SpectralField to_spectral(const ScalarField& f) { return SpectralField(f.grid, fft2(f.values)); }

ScalarField from_spectral(const SpectralField& F) { return ScalarField(F.grid, ifft2_real(F.coeffs)); }

Complex MultiplierSpec::evaluate(double xi1, double xi2) const {
    const double r2 = xi1 * xi1 + xi2 * xi2;
    return std::visit(
        [&](const auto& k) -> Complex {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Heat>) {
                return std::exp(-k.t * r2);
            } else if constexpr (std::is_same_v<T, DampedHeat>) {
                return std::exp(-k.t * (1.0 + r2));
            } else if constexpr (std::is_same_v<T, GradComponent>) {
                if (k.axis != 0 && k.axis != 1) throw std::invalid_argument("gradient axis must be 0 or 1");
                return Complex(0.0, k.axis == 0 ? xi1 : xi2);
            } else if constexpr (std::is_same_v<T, Laplacian>) {
                return -r2;
            } else if constexpr (std::is_same_v<T, FractionalLaplacian>) {
                if (!(k.alpha > 0.0))
                    throw std::domain_error("fractional Laplacian order must be positive");
                return std::pow(r2, 0.5 * k.alpha);
            } else {
                Complex v = 1.0;
                for (const auto& f : k.factors) v *= f.evaluate(xi1, xi2);
                return v;
            }
        },
        kind);
}

ComplexArray multiplier_symbol(const MultiplierSpec& m, const Grid2D& g) {
    ComplexArray out(g.n, g.n);
    for (int i = 0; i < g.n; ++i) {
        const double a = g.wavenumber(i);
        for (int j = 0; j < g.n; ++j) {
            const Complex v = m.evaluate(a, g.wavenumber(j));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::domain_error("multiplier is not finite at wavenumber (" + std::to_string(a) + ", " +
                                        std::to_string(g.wavenumber(j)) + ")");
            out(i, j) = v;
        }
    }
    return out;
}

ScalarField multiplier_apply(const MultiplierSpec& m, const ScalarField& f) {
    const ComplexArray sym = multiplier_symbol(m, f.grid);
    return ScalarField(f.grid, ifft2_real(fft2(f.values) * sym));
}

ComplexArray pad_spectrum(const ComplexArray& F, int m) {
    const int n = static_cast<int>(F.rows());
    if (m < n || m % 2 != 0) throw std::invalid_argument("pad size must be even and >= n");
    ComplexArray out = ComplexArray::Zero(m, m);
    for (int i = 0; i < n; ++i) {
        const int ki = i < n / 2 ? i : i - n;
        const auto ti = pad_targets(ki, n, m);
        for (int j = 0; j < n; ++j) {
            const int kj = j < n / 2 ? j : j - n;
            for (const auto& [si, wi] : ti)
                for (const auto& [sj, wj] : pad_targets(kj, n, m)) out(si, sj) += wi * wj * F(i, j);
        }
    }
    return out;
}

ComplexArray truncate_spectrum(const ComplexArray& F, int n) {
    const int m = static_cast<int>(F.rows());
    if (m < n || m % 2 != 0) throw std::invalid_argument("truncate size must be even and <= source");
    auto slot = [m](int k) { return k >= 0 ? k : k + m; };
    ComplexArray out(n, n);
    for (int i = 0; i < n; ++i) {
        const int ki = i < n / 2 ? i : i - n;
        std::array<int, 2> si{slot(ki), -1};
        if (ki == -n / 2 && m > n) si[1] = slot(n / 2);
        for (int j = 0; j < n; ++j) {
            const int kj = j < n / 2 ? j : j - n;
            std::array<int, 2> sj{slot(kj), -1};
            if (kj == -n / 2 && m > n) sj[1] = slot(n / 2);
            Complex acc = 0.0;
            for (int a : si) {
                if (a < 0) continue;
                for (int b : sj)
                    if (b >= 0) acc += F(a, b);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

ComplexArray dealiased_product(const ComplexArray& F, const ComplexArray& G, int n) {
    const int m = 3 * n / 2;
    const double up = static_cast<double>(m) * m / (static_cast<double>(n) * n);
    const RealArray f = ifft2_real(pad_spectrum(F, m) * up);
    const RealArray g = ifft2_real(pad_spectrum(G, m) * up);
    return truncate_spectrum(fft2(RealArray(f * g)), n) / up;
}

ScalarField pointwise_product(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f.grid, g.grid);
    const int n = f.grid.n;
    return ScalarField(f.grid, ifft2_real(dealiased_product(fft2(f.values), fft2(g.values), n)));
}

ComplexArray derivative_symbol(const Grid2D& g, int axis) {
    ComplexArray out(g.n, g.n);
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            const int slot = axis == 0 ? i : j;
            const double xi = slot == g.n / 2 ? 0.0 : g.wavenumber(slot);
            out(i, j) = Complex(0.0, xi);
        }
    }
    return out;
}

std::pair<ScalarField, ScalarField> gradient(const ScalarField& f) {
    const ComplexArray F = fft2(f.values);
    return {ScalarField(f.grid, ifft2_real(F * derivative_symbol(f.grid, 0))),
            ScalarField(f.grid, ifft2_real(F * derivative_symbol(f.grid, 1)))};
}

ScalarField divergence(const ScalarField& g1, const ScalarField& g2) {
    require_same_grid(g1.grid, g2.grid);
    const ComplexArray D = fft2(g1.values) * derivative_symbol(g1.grid, 0) +
                           fft2(g2.values) * derivative_symbol(g2.grid, 1);
    return ScalarField(g1.grid, ifft2_real(D));
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b.data(), 8);
}

std::uint64_t get_bytes(std::istream& is, int count) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), count);
    if (!is) throw std::runtime_error("KSF1: truncated snapshot");
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const ScalarField& f, double t) {
    os.write("KSF1", 4);
    put_u32(os, static_cast<std::uint32_t>(f.grid.n));
    put_f64(os, f.grid.l);
    put_f64(os, t);
    for (int i = 0; i < f.grid.n; ++i)
        for (int j = 0; j < f.grid.n; ++j) put_f64(os, f.values(i, j));
    if (!os) throw std::runtime_error("KSF1: write failed");
}

Snapshot read_snapshot(std::istream& is) {
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (!is || std::string(magic.data(), 4) != "KSF1") throw std::runtime_error("KSF1: bad magic");
    const auto n = static_cast<int>(get_bytes(is, 4));
    const double l = std::bit_cast<double>(get_bytes(is, 8));
    const double t = std::bit_cast<double>(get_bytes(is, 8));
    Snapshot s{ScalarField(make_grid(n, l)), t};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.field.values(i, j) = std::bit_cast<double>(get_bytes(is, 8));
    return s;
}

void write_snapshot_file(const std::string& path, const ScalarField& f, double t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_snapshot(os, f, t);
}

Snapshot read_snapshot_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_snapshot(is);
}

std::vector<Snapshot> read_snapshot_sequence(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::vector<Snapshot> out;
    while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_snapshot(is));
    return out;
}

}  // namespace ks
