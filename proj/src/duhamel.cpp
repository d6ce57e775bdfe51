#include "ks/duhamel.hpp"

#include "ks/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace ks {

std::string to_string(QuadratureKind k) {
    switch (k) {
        case QuadratureKind::etd_piecewise_constant: return "etd_piecewise_constant";
        case QuadratureKind::etd_piecewise_linear: return "etd_piecewise_linear";
        case QuadratureKind::etd_heat_frame_linear: return "etd_heat_frame_linear";
    }
    return "unknown";
}

QuadratureKind quadrature_kind_from_string(const std::string& s) {
    if (s == "etd_piecewise_constant") return QuadratureKind::etd_piecewise_constant;
    if (s == "etd_piecewise_linear") return QuadratureKind::etd_piecewise_linear;
    if (s == "etd_heat_frame_linear") return QuadratureKind::etd_heat_frame_linear;
    throw std::invalid_argument("unknown quadrature kind: " + s);
}

double etd_phi1(double z) {
    if (std::abs(z) < 0.25) {
        // sum (-z)^j / (j! (j+1))
        double term = 1.0, sum = 0.0;
        for (int j = 0; j < 18; ++j) {
            sum += term / (j + 1);
            term *= -z / (j + 1);
        }
        return sum;
    }
    return -std::expm1(-z) / z;
}

double etd_phi2(double z) {
    if (std::abs(z) < 0.25) {
        // sum (-z)^j / (j! (j+2))
        double term = 1.0, sum = 0.0;
        for (int j = 0; j < 18; ++j) {
            sum += term / (j + 2);
            term *= -z / (j + 1);
        }
        return sum;
    }
    return (-std::expm1(-z) - z * std::exp(-z)) / (z * z);
}

namespace {

RealArray phi1(const RealArray& z) { return z.unaryExpr([](double v) { return etd_phi1(v); }); }
RealArray phi2(const RealArray& z) { return z.unaryExpr([](double v) { return etd_phi2(v); }); }

ComplexArray cplx(const RealArray& a) { return a.cast<Complex>(); }

}  // namespace

Trajectory duhamel_integrate(const Grid2D& grid, const TimeGrid& tg, const std::vector<ComplexArray>& nodes,
                             const std::optional<ComplexArray>& origin, const DuhamelKernel& kernel,
                             const QuadratureScheme& q, HeadSegment* head) {
    if (nodes.empty()) throw std::invalid_argument("Duhamel integral of an empty trajectory");
    if (nodes.size() != tg.size()) throw std::invalid_argument("node data do not match the time grid");
    if (q.substeps < 1) throw std::invalid_argument("quadrature substeps must be >= 1");
    const int n = grid.n;
    const RealArray& mu = kernel.rate;
    const RealArray lambda = grid.wavenumber_sq();

    // Integration nodes: optionally tau = 0, then the grid nodes.
    std::vector<double> tau;
    std::vector<const ComplexArray*> data;
    if (origin) {
        tau.push_back(0.0);
        data.push_back(&*origin);
    }
    for (size_t j = 0; j < tg.size(); ++j) {
        tau.push_back(tg[j]);
        data.push_back(&nodes[j]);
    }

    if (head) {
        head->included = origin.has_value();
        head->deficit_estimate =
            origin ? 0.0 : tg[0] * (kernel.symbol * nodes[0]).abs().sum() / (static_cast<double>(n) * n);
    }

    Trajectory out(grid, tg);
    ComplexArray acc = ComplexArray::Zero(n, n);
    size_t out_index = 0;
    if (!origin) out[out_index++] = ScalarField(grid);

    for (size_t i = 0; i + 1 < tau.size(); ++i) {
        const double d = tau[i + 1] - tau[i];
        const ComplexArray& ga = *data[i];
        const ComplexArray& gb = *data[i + 1];
        switch (q.kind) {
            case QuadratureKind::etd_piecewise_linear: {
                const RealArray z = mu * d;
                const RealArray p1 = phi1(z), p2 = phi2(z);
                acc = cplx((-z).exp()) * acc + kernel.symbol * (cplx(d * p2) * ga + cplx(d * (p1 - p2)) * gb);
                break;
            }
            case QuadratureKind::etd_heat_frame_linear: {
                const RealArray z = (mu - lambda) * d;
                const RealArray p1 = phi1(z), p2 = phi2(z);
                const RealArray wa = (-d * lambda).exp() * d * p2;
                acc = cplx((-mu * d).exp()) * acc + kernel.symbol * (cplx(wa) * ga + cplx(d * (p1 - p2)) * gb);
                break;
            }
            case QuadratureKind::etd_piecewise_constant: {
                const int m = q.substeps;
                const double delta = d / m;
                const RealArray z = mu * delta;
                const ComplexArray decay = cplx((-z).exp());
                const ComplexArray weight = kernel.symbol * cplx(delta * phi1(z));
                for (int s = 1; s <= m; ++s) {
                    const double theta = static_cast<double>(s) / m;
                    acc = decay * acc + weight * ((1.0 - theta) * ga + theta * gb);
                }
                break;
            }
        }
        out[out_index++] = ScalarField(grid, ifft2_real(acc));
    }
    return out;
}

ComplexArray divergence_flux(const ScalarField& u, const ScalarField& v) {
    return divergence_flux(u.grid, fft2(u.values), fft2(v.values));
}

ComplexArray divergence_flux(const Grid2D& g, const ComplexArray& U, const ComplexArray& V) {
    const ComplexArray D1 = derivative_symbol(g, 0);
    const ComplexArray D2 = derivative_symbol(g, 1);
    const ComplexArray f1 = dealiased_product(U, V * D1, g.n);
    const ComplexArray f2 = dealiased_product(U, V * D2, g.n);
    return D1 * f1 + D2 * f2;
}

namespace {

void require_nonempty(const Trajectory& t) {
    if (t.size() == 0) throw std::invalid_argument("empty trajectory");
    t.validate();
}

std::vector<ComplexArray> spectral_nodes(const Trajectory& t) {
    std::vector<ComplexArray> out(t.size());
    parallel_for(t.size(), [&](size_t j) { out[j] = fft2(t[j].values); });
    return out;
}

}  // namespace

Trajectory bilinear_B(const Trajectory& u, const Trajectory& v, const QuadratureScheme& q, HeadSegment* head) {
    require_nonempty(u);
    require_nonempty(v);
    if (!(u.grid == v.grid) || u.tgrid.times() != v.tgrid.times())
        throw std::invalid_argument("bilinear_B: trajectories do not share grids");
    std::vector<ComplexArray> g(u.size());
    parallel_for(u.size(), [&](size_t j) { g[j] = divergence_flux(u[j], v[j]); });
    std::optional<ComplexArray> g0;
    if (u.initial && v.initial) g0 = divergence_flux(*u.initial, *v.initial);
    const DuhamelKernel k{u.grid.wavenumber_sq(), ComplexArray::Ones(u.grid.n, u.grid.n)};
    return duhamel_integrate(u.grid, u.tgrid, g, g0, k, q, head);
}

Trajectory linear_L(const Trajectory& u, const QuadratureScheme& q, bool damped, HeadSegment* head) {
    require_nonempty(u);
    std::optional<ComplexArray> g0;
    if (u.initial) g0 = fft2(u.initial->values);
    const DuhamelKernel k{u.grid.wavenumber_sq() + (damped ? 1.0 : 0.0), ComplexArray::Ones(u.grid.n, u.grid.n)};
    return duhamel_integrate(u.grid, u.tgrid, spectral_nodes(u), g0, k, q, head);
}

Trajectory maximal_reg_T(const Trajectory& g, const QuadratureScheme& q, HeadSegment* head) {
    require_nonempty(g);
    std::optional<ComplexArray> g0;
    if (g.initial) g0 = fft2(g.initial->values);
    const RealArray k2 = g.grid.wavenumber_sq();
    const DuhamelKernel k{k2, cplx(-k2)};
    return duhamel_integrate(g.grid, g.tgrid, spectral_nodes(g), g0, k, q, head);
}

}  // namespace ks
