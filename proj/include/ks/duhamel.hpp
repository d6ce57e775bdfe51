#pragma once

// Duhamel integrals on trajectories,
//
//     out(t_j) = int_0^{t_j} e^{-(t_j - tau) mu(xi)} P(xi) g^(tau, xi) dtau,
//
// evaluated per Fourier mode with exponential time differencing: the
// integrand data are reconstructed between nodes and the exponential factor
// is integrated against the reconstruction in closed form.

#include "ks/field.hpp"
#include "ks/norms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ks {

enum class QuadratureKind {
    etd_piecewise_constant,  // right-endpoint value on each (sub)interval
    etd_piecewise_linear,    // linear in tau between nodes
    etd_heat_frame_linear,   // linear in tau after undoing e^{tau Delta}; exact for free heat data
};

struct QuadratureScheme {
    QuadratureKind kind = QuadratureKind::etd_heat_frame_linear;
    int substeps = 1;  // only refines etd_piecewise_constant
};

std::string to_string(QuadratureKind k);
QuadratureKind quadrature_kind_from_string(const std::string& s);

/// How the segment [0, t_1] before the first node was treated.
struct HeadSegment {
    bool included = true;
    double deficit_estimate = 0.0;  // L^inf-size estimate of the dropped part
};

struct DuhamelKernel {
    RealArray rate;       // mu(xi) >= 0
    ComplexArray symbol;  // P(xi)
};

/// (1 - e^{-z}) / z and (1 - (1+z) e^{-z}) / z^2, stable near 0.
double etd_phi1(double z);
double etd_phi2(double z);

/// Core integrator on spectral node data (fft2 convention). `origin` is the
/// integrand at tau = 0; without it the head segment is dropped.
Trajectory duhamel_integrate(const Grid2D& grid, const TimeGrid& tg, const std::vector<ComplexArray>& nodes,
                             const std::optional<ComplexArray>& origin, const DuhamelKernel& kernel,
                             const QuadratureScheme& q, HeadSegment* head = nullptr);

/// Spectral div(u grad v) with the dealiased product.
ComplexArray divergence_flux(const ScalarField& u, const ScalarField& v);
ComplexArray divergence_flux(const Grid2D& g, const ComplexArray& U, const ComplexArray& V);

/// int_0^t e^{(t-tau) Delta} div(u grad v) dtau.
Trajectory bilinear_B(const Trajectory& u, const Trajectory& v, const QuadratureScheme& q,
                      HeadSegment* head = nullptr);
/// int_0^t e^{(t-tau)(Delta - 1)} u dtau, or with e^{(t-tau) Delta} when damped == false.
Trajectory linear_L(const Trajectory& u, const QuadratureScheme& q, bool damped = true, HeadSegment* head = nullptr);
/// int_0^t e^{(t-tau) Delta} Delta g dtau.
Trajectory maximal_reg_T(const Trajectory& g, const QuadratureScheme& q, HeadSegment* head = nullptr);

}  // namespace ks
