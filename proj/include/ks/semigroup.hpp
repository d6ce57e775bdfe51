#pragma once

// Spectral heat semigroups and the analytic heat-kernel norms used to
// cross-check them.

#include "ks/field.hpp"

#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ks {

class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// e^{t Delta} f. Throws std::invalid_argument for t < 0.
ScalarField heat(double t, const ScalarField& f);
/// e^{t (Delta - 1)} f, computed as e^{-t} * heat(t, f).
ScalarField damped_heat(double t, const ScalarField& f);
/// grad e^{t Delta} f, t > 0.
std::pair<ScalarField, ScalarField> grad_heat(double t, const ScalarField& f);

/// M (4 pi s)^{-1} exp(-|x - c|^2 / 4s), i.e. the heat kernel at time s with
/// mass M, centred at c. Not periodized.
ScalarField gaussian(const Grid2D& g, double mass, double s, double c1 = 0.0, double c2 = 0.0);

/// Exact L^p norm of (4 pi t)^{-1} exp(-|x|^2/4t) on R^2: p^{-1/p} (4 pi t)^{-1+1/p}.
double heat_kernel_lp_exact(double p, double t);
/// Exact L^p norm of its gradient magnitude.
double grad_heat_kernel_lp_exact(double p, double t);

struct KernelNormEntry {
    double p = 1.0;
    double t = 0.0;
    double value = 0.0;  // discrete norm of the sampled kernel
    double exact = 0.0;  // closed form on R^2
    double bound = 0.0;  // t^{-1+1/p} (kernel) or t^{-3/2+1/p} (gradient)
    double ratio() const { return value / bound; }
};

struct KernelNormTable {
    std::vector<KernelNormEntry> entries;
    bool all_within_bound() const;
    /// Columns p, t, value, bound, ratio. p = inf is written as "inf".
    void write_csv(std::ostream& os) const;
};

/// Samples the heat kernel on the torus and tabulates its L^p norms. Throws
/// ResolutionError when sqrt(4t) < 4h or sqrt(4t) > l/8. Use
/// std::numeric_limits<double>::infinity() for p = infinity.
KernelNormTable heat_kernel_norms(const Grid2D& g, const std::vector<double>& p_list,
                                  const std::vector<double>& t_list);
KernelNormTable grad_heat_kernel_norms(const Grid2D& g, const std::vector<double>& p_list,
                                       const std::vector<double>& t_list);

}  // namespace ks
