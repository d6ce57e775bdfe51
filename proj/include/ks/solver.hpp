#pragma once

// Picard iteration for the mild formulation of the parabolic-parabolic
// Keller-Segel system on the torus,
//
//     u = e^{t Delta} u0 - 4c B(u, w),    w = e^{t(Delta-1)} w0 + L(u) / (4c),
//
// with w = v / (4c), plus an independent integrating-factor time stepper used
// as an oracle, and checks of the two global-in-time bounds.

#include "ks/duhamel.hpp"
#include "ks/field.hpp"
#include "ks/norms.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ks {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReferenceSettings {
    double dt_max = 0.05;       // cap on the step inside one node interval
    int steps_per_gap = 4;      // at least this many steps per node interval
    int max_halvings = 12;      // step rejections allowed per interval
    bool nonlinear = true;      // false drops -div(u grad v)
};

struct SolverConfig {
    Grid2D grid;
    TimeGrid tgrid;
    double c = 1.0;
    int max_iter = 60;
    double tol = 1e-12;
    TheoremMode mode = TheoremMode::thm1_L1Linf;
    QuadratureScheme quadrature;
    /// v_t = Delta v - u instead of v_t = Delta v - v + u.
    bool remark_ii = false;
    ReferenceSettings reference;

    /// Throws std::invalid_argument on c <= 0, tol <= 0, max_iter < 1, empty grids.
    void validate() const;
};

struct ThresholdCheck {
    double A0 = 0.0;         // X x Y norm of the free evolution
    double threshold = 0.0;  // 3 / (32 c^2)
    bool satisfied = false;  // A0 < threshold
};

enum class Verdict { holds, violated, hypothesis_not_satisfied, not_converged };
std::string to_string(Verdict v);

struct BoundCheck {
    Verdict verdict = Verdict::holds;
    double lhs = 0.0;
    double rhs = 0.0;  // the bound (2 * free sup-sum, or 2 eps0)
    std::string detail;
    std::map<std::string, double> values;  // components and auxiliary quantities
};

void to_json(nlohmann::json& j, const BoundCheck& b);

struct SolutionReport {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residuals;            // X x Y norm of successive differences
    std::vector<double> contraction_factors;  // residuals[m] / residuals[m-1]
    std::vector<double> iterate_norms;        // X x Y norm of each iterate
    double contraction_bound = 0.0;           // 8 c^2 A0 + 1/4
    bool ball_ok = true;                      // every iterate within 2 A0
    ThresholdCheck threshold;
    double c = 1.0;
    TheoremMode mode = TheoremMode::thm1_L1Linf;
    bool remark_ii = false;
    HeadSegment head_B, head_L;
    Trajectory u, w, v;  // v = 4c w; all carry their initial data
    NormReport norms_thm1, norms_thm2;
    std::optional<BoundCheck> thm1, thm2;
};

void to_json(nlohmann::json& j, const SolutionReport& r);

/// v0 / (4c).
ScalarField rescale_chemical(const ScalarField& v0, double c);

/// Iterates the Picard map from the free evolution. Non-convergence is a
/// reported outcome; a non-finite iterate throws NumericalError.
SolutionReport picard_solve(const ScalarField& u0, const ScalarField& w0, const SolverConfig& cfg);

/// One application of the Picard map to (u, w).
std::pair<Trajectory, Trajectory> picard_map(const Trajectory& u, const Trajectory& w, const ScalarField& u0,
                                             const ScalarField& w0, const SolverConfig& cfg);

/// Integrating-factor RK4 (Lawson) on the differential system, sampled at the
/// TimeGrid nodes. Returns (u, v) with initial data attached.
std::pair<Trajectory, Trajectory> reference_solve(const ScalarField& u0, const ScalarField& v0,
                                                  const SolverConfig& cfg);

BoundCheck check_theorem1_bound(const SolutionReport& r);
/// eps0 defaults to ||u0||_inf + ||u0||_{H^1} + ||v0||_{H^1} / (4c).
BoundCheck check_theorem2_bound(const SolutionReport& r, std::optional<double> eps0 = std::nullopt);

struct MassSweepEntry {
    double mass = 0.0;
    double A0 = 0.0;
    bool threshold_ok = false;
    bool converged = false;
    int iterations = 0;
    double max_contraction = 0.0;
};

struct MassSweep {
    std::vector<MassSweepEntry> entries;
    std::optional<double> first_violating_mass;  // first mass with A0 >= threshold
};

/// Gaussian u0 of width s0 and each mass, v0 = 0.
MassSweep mass_sweep(const std::vector<double>& masses, double s0, const SolverConfig& cfg);

/// Largest over nodes of ||a_j - b_j||_inf / ||b_j||_inf (absolute when b_j = 0).
double max_relative_difference(const Trajectory& a, const Trajectory& b);
std::vector<double> relative_differences(const Trajectory& a, const Trajectory& b);

}  // namespace ks
