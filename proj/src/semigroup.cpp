#include "ks/semigroup.hpp"

#include "ks/norms.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace ks {

namespace {

void require_nonnegative_time(double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be >= 0");
}

void check_resolution(const Grid2D& g, double t) {
    const double width = std::sqrt(4.0 * t);
    if (width < 4.0 * g.h() || width > g.l / 8.0)
        throw ResolutionError("heat kernel at t=" + std::to_string(t) + " is not resolved on grid n=" +
                              std::to_string(g.n) + ", l=" + std::to_string(g.l));
}

std::string format_p(double p) { return std::isinf(p) ? "inf" : std::to_string(p); }

}  // namespace

ScalarField heat(double t, const ScalarField& f) {
    require_nonnegative_time(t);
    if (t == 0.0) return f;
    const RealArray decay = (-t * f.grid.wavenumber_sq()).exp();
    return ScalarField(f.grid, ifft2_real(fft2(f.values) * decay.cast<Complex>()));
}

ScalarField damped_heat(double t, const ScalarField& f) {
    require_nonnegative_time(t);
    return std::exp(-t) * heat(t, f);
}

std::pair<ScalarField, ScalarField> grad_heat(double t, const ScalarField& f) {
    if (!(t > 0.0)) throw std::invalid_argument("grad_heat needs t > 0");
    const ComplexArray F = fft2(f.values) * (-t * f.grid.wavenumber_sq()).exp().cast<Complex>();
    return {ScalarField(f.grid, ifft2_real(F * derivative_symbol(f.grid, 0))),
            ScalarField(f.grid, ifft2_real(F * derivative_symbol(f.grid, 1)))};
}

ScalarField gaussian(const Grid2D& g, double mass, double s, double c1, double c2) {
    if (!(s > 0.0)) throw std::invalid_argument("gaussian width must be positive");
    const double amp = mass / (4.0 * std::numbers::pi * s);
    return sample(g, [&](double x1, double x2) {
        const double r2 = (x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2);
        return amp * std::exp(-r2 / (4.0 * s));
    });
}

double heat_kernel_lp_exact(double p, double t) {
    const double peak = 1.0 / (4.0 * std::numbers::pi * t);
    if (std::isinf(p)) return peak;
    return std::pow(p, -1.0 / p) * std::pow(4.0 * std::numbers::pi * t, -1.0 + 1.0 / p);
}

double grad_heat_kernel_lp_exact(double p, double t) {
    // |grad K| = C r e^{-r^2/4t} with C = (4 pi t)^{-1} / (2t).
    const double C = 1.0 / (8.0 * std::numbers::pi * t * t);
    if (std::isinf(p)) return C * std::sqrt(2.0 * t) * std::exp(-0.5);
    const double integral =
        std::numbers::pi * std::pow(C, p) * std::tgamma(0.5 * p + 1.0) * std::pow(4.0 * t / p, 0.5 * p + 1.0);
    return std::pow(integral, 1.0 / p);
}

bool KernelNormTable::all_within_bound() const {
    for (const auto& e : entries)
        if (!(e.value <= e.bound)) return false;
    return true;
}

void KernelNormTable::write_csv(std::ostream& os) const {
    os << "p,t,value,bound,ratio\r\n";
    os.precision(17);
    for (const auto& e : entries)
        os << format_p(e.p) << ',' << e.t << ',' << e.value << ',' << e.bound << ',' << e.ratio() << "\r\n";
}

KernelNormTable heat_kernel_norms(const Grid2D& g, const std::vector<double>& p_list,
                                  const std::vector<double>& t_list) {
    KernelNormTable table;
    for (double t : t_list) {
        if (!(t > 0.0)) throw std::invalid_argument("kernel time must be positive");
        check_resolution(g, t);
        const ScalarField k = gaussian(g, 1.0, t);
        for (double p : p_list) {
            if (!(p >= 1.0)) throw std::invalid_argument("Lebesgue exponent must be >= 1");
            const double bound = std::isinf(p) ? 1.0 / t : std::pow(t, -1.0 + 1.0 / p);
            table.entries.push_back({p, t, lp_norm(k, p), heat_kernel_lp_exact(p, t), bound});
        }
    }
    return table;
}

KernelNormTable grad_heat_kernel_norms(const Grid2D& g, const std::vector<double>& p_list,
                                       const std::vector<double>& t_list) {
    KernelNormTable table;
    for (double t : t_list) {
        if (!(t > 0.0)) throw std::invalid_argument("kernel time must be positive");
        check_resolution(g, t);
        // Unit-mass discrete delta at the origin pushed through the grid semigroup.
        ScalarField delta(g);
        delta.values(g.n / 2, g.n / 2) = 1.0 / g.cell_area();
        const auto [g1, g2] = grad_heat(t, delta);
        const ScalarField mag(g, (g1.values.square() + g2.values.square()).sqrt());
        for (double p : p_list) {
            if (!(p >= 1.0)) throw std::invalid_argument("Lebesgue exponent must be >= 1");
            const double bound = std::isinf(p) ? std::pow(t, -1.5) : std::pow(t, -1.5 + 1.0 / p);
            table.entries.push_back({p, t, lp_norm(mag, p), grad_heat_kernel_lp_exact(p, t), bound});
        }
    }
    return table;
}

}  // namespace ks
