#pragma once

// Numerical checks of the linear, multiplier and bilinear estimates behind
// the well-posedness argument, and empirical estimation of the constant c.
//
// Every check produces one row per sample (family, params, lhs, rhs, ratio).
// Rows are grouped by the estimate and parameter tuple they exercise; the
// maximum ratio per group is what gets compared across resolutions.

#include "ks/duhamel.hpp"
#include "ks/field.hpp"
#include "ks/norms.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ks {

/// Resolution of a lab run; doubled() doubles n, K and T together.
struct LabScale {
    int n = 64;
    double l = 16.0;
    int K = 32;
    double T = 16.0;
    std::uint64_t seed = 20240917;

    LabScale doubled() const { return {2 * n, l, 2 * K, 2 * T, seed}; }
};

struct SampleRow {
    std::string group;   // estimate + parameter tuple
    std::string family;  // data family
    std::string params;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct LemmaReport {
    std::string name;
    std::vector<SampleRow> rows;
    std::map<std::string, double> group_max;    // max ratio per group
    std::map<std::string, double> group_bound;  // asserted bound per group (absent: finiteness only)
    std::map<std::string, double> metrics;      // extra diagnostics (uniformity, stability)
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
    double max_ratio() const;
};

void to_json(nlohmann::json& j, const LemmaReport& r);
/// RFC-4180 CSV with columns family,params,lhs,rhs,ratio.
void write_csv(std::ostream& os, const std::vector<SampleRow>& rows);
std::string csv_field(const std::string& s);

/// Fields built from a fixed list of Fourier modes |j1|,|j2| <= max_mode with
/// amplitudes decaying like (1 + |xi|^2)^{-decay/2}; the function does not
/// depend on n, so refinements sample the same field.
ScalarField random_field(const Grid2D& g, std::uint64_t seed, int max_mode = 6, double decay = 2.0);
/// cos(2 pi (j1 x1 + j2 x2) / l).
ScalarField cosine_mode(const Grid2D& g, int j1, int j2);
/// Cell averages of the indicator of [a1,b1] x [a2,b2] (one-cell smoothing).
ScalarField smoothed_box(const Grid2D& g, double a1, double b1, double a2, double b2);
/// Cell averages of 1_{[0,1]}(x1).
ScalarField smoothed_stripe(const Grid2D& g);

/// pulse: 1 on [0, width], 0 afterwards (width passed as `period`).
enum class TimeProfile { constant, exponential, square_wave, pulse };
std::string to_string(TimeProfile p);
/// p(t) * f on the nodes, with initial datum p(0) f.
Trajectory profile_trajectory(const ScalarField& f, const TimeGrid& tg, TimeProfile p, double rate = 1.0,
                              double period = 1.0);

/// Discrete multiplier estimates: ||m(t,D)v||_{L^r_t H^s} <= ||m||_{L^r_t L^inf_xi} ||v||_{H^s}
/// and the |xi|^delta-weighted form with the norms interchanged.
LemmaReport verify_multiplier_lemma(const LabScale& scale);
/// Time-convolution estimates with the damped kernel and Lambda^theta, and
/// with the heat kernel and Lambda^{2+2/p-2/r}.
LemmaReport verify_bilinear_lemma23(const LabScale& scale);
/// ||T g||_{L^2_t L^2} / ||g||_{L^2_t L^2} for the maximal-regularity operator.
LemmaReport verify_maximal_regularity(const LabScale& scale);

/// Closed-form constant for the damped-kernel estimate with Lambda^theta and
/// p1 = r: int_0^inf e^{-t} t^{-theta/2} dt * sup_y y^theta e^{-y^2}.
double lemma23_damped_constant(double theta);

struct DriftReport {
    std::string name;
    std::map<std::string, double> drift;  // |r2 - r1| / r1 per group
    double max_drift = 0.0;
    double tolerance = 0.10;
    bool passed() const { return max_drift < tolerance; }
};

void to_json(nlohmann::json& j, const DriftReport& r);
DriftReport ratio_drift(const LemmaReport& base, const LemmaReport& refined, double tolerance = 0.10);

struct ConstantsSettings {
    int n = 64;
    double l = 16.0;
    int K = 40;
    double t_min = 1e-3;
    double T = 10.0;
    std::vector<double> gaussian_widths{0.25, 0.5, 1.0, 2.0};
    std::vector<int> modes{1, 2, 3};
    bool indicators = true;
    double safety = 1.5;
};

struct ConstantSample {
    std::string constant;  // c1, c2 or c3
    std::string mode;      // theorem mode
    std::string family;
    std::string params;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct ConstantsReport {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;
    double raw_max = 0.0;  // max(c1, c2, c3)
    double safety = 1.5;
    double c = 0.0;          // safety * raw_max, or the forced value
    double threshold = 0.0;  // 3 / (32 c^2)
    std::optional<double> forced_c;
    bool consistent = true;  // false when a forced c is below the observed maxima
    std::vector<ConstantSample> samples;
    std::vector<std::string> notices;
    nlohmann::json metadata;
};

void to_json(nlohmann::json& j, const ConstantsReport& r);
void write_csv(std::ostream& os, const ConstantsReport& r);

/// Named initial fields for the constant estimation.
struct NamedField {
    std::string family;
    std::string params;
    ScalarField field;
};
std::vector<NamedField> constant_families(const Grid2D& g, const ConstantsSettings& s);

ConstantsReport estimate_constants(const ConstantsSettings& s);
ConstantsReport estimate_constants(const ConstantsSettings& s, const std::vector<NamedField>& families);
/// Replaces c by a user value and records whether it covers the observed ratios.
ConstantsReport force_constant(ConstantsReport r, double c);

/// (e^{-1} - e^{-9}) / (2 sqrt(pi)).
double counterexample_c0();
/// t^{1/2} |d_1 e^{t Delta} 1_{[0,1]}(x1)| in closed form.
double counterexample_closed_form(double t, double x1);

struct CounterexamplePoint {
    double t = 0.0;
    double x1 = 0.0;
    double closed_form = 0.0;
    std::optional<double> grid_value;
    bool in_window = true;
};

struct CounterexampleReport {
    double c0 = 0.0;
    std::vector<CounterexamplePoint> points;
    std::string verdict;  // "holds", "violated" or "outside hypothesis"
    double max_grid_rel_error = 0.0;
    int n = 0;
    double l = 0.0;
    double smoothing_width = 0.0;
};

void to_json(nlohmann::json& j, const CounterexampleReport& r);

/// Closed-form profile at (t, x1) pairs. Points outside 0 < t < 1/64,
/// sqrt(t) < x1 < 2 sqrt(t) make the verdict "outside hypothesis".
CounterexampleReport counterexample_profile(const std::vector<std::pair<double, double>>& points);
/// Same plus the grid semigroup applied to the one-cell smoothed stripe.
CounterexampleReport counterexample_profile(const std::vector<std::pair<double, double>>& points, const Grid2D& g);
/// Ten points with t in [0.005, 0.015] and x1 spread over (sqrt t, 2 sqrt t).
std::vector<std::pair<double, double>> counterexample_sweep();

}  // namespace ks
