#pragma once

// Norms on fields and on space-time trajectories.
//
// Trajectory sup norms are maxima over the TimeGrid nodes; L^2_t norms use
// the trapezoid rule on the (generally geometric) nodes, with the segment
// [0, t_1] included only when the trajectory carries its initial datum.

#include "ks/field.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace ks {

enum class Spacing { geometric, uniform };

class TimeGrid {
public:
    TimeGrid() = default;
    static TimeGrid geometric(double t_min, double t_max, int count);
    static TimeGrid uniform(double t_min, double t_max, int count);
    /// Arbitrary strictly increasing positive nodes.
    static TimeGrid from_nodes(std::vector<double> nodes);

    const std::vector<double>& times() const { return times_; }
    double operator[](size_t j) const { return times_[j]; }
    size_t size() const { return times_.size(); }
    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }
    Spacing spacing() const { return spacing_; }

private:
    std::vector<double> times_;
    Spacing spacing_ = Spacing::geometric;
};

struct Trajectory {
    Grid2D grid;
    TimeGrid tgrid;
    std::vector<ScalarField> fields;
    std::optional<ScalarField> initial;

    Trajectory() = default;
    Trajectory(const Grid2D& g, TimeGrid tg);  // zero fields
    Trajectory(const Grid2D& g, TimeGrid tg, std::vector<ScalarField> f, std::optional<ScalarField> init = {});

    size_t size() const { return fields.size(); }
    const ScalarField& operator[](size_t j) const { return fields[j]; }
    ScalarField& operator[](size_t j) { return fields[j]; }
    /// Throws std::invalid_argument if fields and grids disagree.
    void validate() const;
};

Trajectory operator+(const Trajectory& a, const Trajectory& b);
Trajectory operator-(const Trajectory& a, const Trajectory& b);
Trajectory operator*(double s, const Trajectory& a);

/// Free evolutions sampled on the time grid; the initial datum is attached.
Trajectory heat_trajectory(const ScalarField& f0, const TimeGrid& tg);
Trajectory damped_heat_trajectory(const ScalarField& f0, const TimeGrid& tg);

struct NormEntry {
    double value = 0.0;
    std::string equation;            // defining formula, plain text
    std::optional<double> argmax_time;
};

struct NormReport {
    std::map<std::string, NormEntry> entries;

    void set(const std::string& name, double value, std::string equation,
             std::optional<double> argmax = std::nullopt);
    double operator[](const std::string& name) const;
    bool all_finite_nonnegative() const;
};

void to_json(nlohmann::json& j, const NormReport& r);
void from_json(const nlohmann::json& j, NormReport& r);

/// (sum |f|^p h^2)^{1/p}; p = inf gives the grid maximum of |f|.
double lp_norm(const ScalarField& f, double p);
/// Euclidean magnitude field |(g1, g2)|.
ScalarField magnitude(const ScalarField& g1, const ScalarField& g2);
/// grid max |grad f|.
double grad_linf(const ScalarField& f);
/// ||(1 + |xi|^2)^{s/2} f^||, normalized so hs_norm(f, 0) == lp_norm(f, 2).
double hs_norm(const ScalarField& f, double s);
/// Homogeneous version with weight |xi|^s; the zero mode is excluded.
double hs_dot_norm(const ScalarField& f, double s);
/// ||grad f||_{H^1}^2 = sum (1+|xi|^2)|xi|^2 |f^|^2, returned as the norm.
double grad_h1_norm(const ScalarField& f);

double sigma(double t);

struct BesovResult {
    double value = 0.0;
    double argmax_time = 0.0;
    bool boundary_argmax = false;  // sup attained at the first or last probe time
};

/// sup over probe times of t^{-s/2} ||e^{t Delta} f||_{L^p}, s < 0.
BesovResult besov_norm(const ScalarField& f, double s, double p, const TimeGrid& probe);
/// Same for the vector field grad f, using the Euclidean magnitude.
BesovResult besov_norm_gradient(const ScalarField& f, double s, double p, const TimeGrid& probe);

/// Quadrature weights of the trapezoid rule on the nodes, optionally
/// preceded by the node t = 0 (returned weight first).
std::vector<double> trapezoid_weights(const TimeGrid& tg, bool include_origin);
/// (int |a(t)|^p dt)^{1/p} from node samples; p = inf gives the max.
/// `origin_value` adds the sample at t = 0 when present.
double time_lp_norm(const std::vector<double>& node_values, const TimeGrid& tg, double p,
                    std::optional<double> origin_value = std::nullopt);

enum class TheoremMode { thm1_L1Linf, thm2_H1bH1 };
std::string to_string(TheoremMode m);
TheoremMode theorem_mode_from_string(const std::string& s);

/// Space-time norms of a (u, w) pair, keys "X", "Y", "XY" plus components.
NormReport xy_norms_thm1(const Trajectory& u, const Trajectory& w);
NormReport xy_norms_thm2(const Trajectory& u, const Trajectory& w);
NormReport xy_norms(TheoremMode mode, const Trajectory& u, const Trajectory& w);

// Individual pieces, used by the solver and the inequality lab.
double x_norm(TheoremMode mode, const Trajectory& u);
double y_norm(TheoremMode mode, const Trajectory& w);

}  // namespace ks
