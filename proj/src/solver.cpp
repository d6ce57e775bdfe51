#include "ks/solver.hpp"

#include "ks/parallel.hpp"
#include "ks/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ks {

void SolverConfig::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("picard.c must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("picard.tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("picard.max_iter must be >= 1");
    if (grid.n <= 0 || !(grid.l > 0.0)) throw std::invalid_argument("solver grid is not set");
    if (tgrid.size() == 0) throw std::invalid_argument("solver time grid is empty");
    if (quadrature.substeps < 1) throw std::invalid_argument("quadrature substeps must be >= 1");
    if (!(reference.dt_max > 0.0) || reference.steps_per_gap < 1 || reference.max_halvings < 0)
        throw std::invalid_argument("invalid reference stepper settings");
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::violated: return "violated";
        case Verdict::hypothesis_not_satisfied: return "hypothesis not satisfied";
        case Verdict::not_converged: return "not converged";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const BoundCheck& b) {
    j = nlohmann::json{{"verdict", to_string(b.verdict)},
                       {"lhs", b.lhs},
                       {"rhs", b.rhs},
                       {"detail", b.detail},
                       {"values", b.values}};
}

void to_json(nlohmann::json& j, const SolutionReport& r) {
    j = nlohmann::json::object();
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["residuals"] = r.residuals;
    j["contraction_factors"] = r.contraction_factors;
    j["iterate_norms"] = r.iterate_norms;
    j["contraction_bound"] = r.contraction_bound;
    j["ball_ok"] = r.ball_ok;
    j["threshold"] = {{"A0", r.threshold.A0}, {"threshold", r.threshold.threshold},
                      {"satisfied", r.threshold.satisfied}};
    j["c"] = r.c;
    j["mode"] = to_string(r.mode);
    j["remark_ii"] = r.remark_ii;
    j["head_segment"] = {{"B_included", r.head_B.included},
                         {"B_deficit", r.head_B.deficit_estimate},
                         {"L_included", r.head_L.included},
                         {"L_deficit", r.head_L.deficit_estimate}};
    j["norms"] = {{"thm1_L1Linf", r.norms_thm1}, {"thm2_H1bH1", r.norms_thm2}};
    if (r.thm1) j["theorem1"] = *r.thm1;
    if (r.thm2) j["theorem2"] = *r.thm2;
    j["time_nodes"] = r.u.tgrid.times();
}

ScalarField rescale_chemical(const ScalarField& v0, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("rescaling constant must be positive");
    return (1.0 / (4.0 * c)) * v0;
}

namespace {

void require_finite(const Trajectory& tr, const char* name, int iteration) {
    for (size_t j = 0; j < tr.size(); ++j) {
        if (!tr[j].all_finite()) {
            std::ostringstream os;
            os << "non-finite value in " << name << " at node " << j << " (t = " << tr.tgrid[j]
               << ") in Picard iteration " << iteration;
            throw NumericalError(os.str());
        }
    }
}

double xy_distance(TheoremMode mode, const Trajectory& u1, const Trajectory& w1, const Trajectory& u2,
                   const Trajectory& w2) {
    return x_norm(mode, u1 - u2) + y_norm(mode, w1 - w2);
}

struct Free {
    Trajectory U, W;
};

Free free_evolution(const ScalarField& u0, const ScalarField& w0, const SolverConfig& cfg) {
    return {heat_trajectory(u0, cfg.tgrid),
            cfg.remark_ii ? heat_trajectory(w0, cfg.tgrid) : damped_heat_trajectory(w0, cfg.tgrid)};
}

std::pair<Trajectory, Trajectory> apply_map(const Trajectory& u, const Trajectory& w, const Free& free,
                                            const SolverConfig& cfg, HeadSegment* hb, HeadSegment* hl) {
    const double four_c = 4.0 * cfg.c;
    const Trajectory b = bilinear_B(u, w, cfg.quadrature, hb);
    const Trajectory l = linear_L(u, cfg.quadrature, !cfg.remark_ii, hl);
    const double l_sign = cfg.remark_ii ? -1.0 : 1.0;
    Trajectory un = free.U - four_c * b;
    Trajectory wn = free.W + (l_sign / four_c) * l;
    un.initial = free.U.initial;
    wn.initial = free.W.initial;
    return {std::move(un), std::move(wn)};
}

}  // namespace

std::pair<Trajectory, Trajectory> picard_map(const Trajectory& u, const Trajectory& w, const ScalarField& u0,
                                             const ScalarField& w0, const SolverConfig& cfg) {
    cfg.validate();
    return apply_map(u, w, free_evolution(u0, w0, cfg), cfg, nullptr, nullptr);
}

SolutionReport picard_solve(const ScalarField& u0, const ScalarField& w0, const SolverConfig& cfg) {
    cfg.validate();
    if (!(u0.grid == cfg.grid) || !(w0.grid == cfg.grid))
        throw std::invalid_argument("initial data do not live on the configured grid");
    if (!u0.all_finite() || !w0.all_finite()) throw NumericalError("non-finite initial data");

    SolutionReport r;
    r.c = cfg.c;
    r.mode = cfg.mode;
    r.remark_ii = cfg.remark_ii;

    const Free free = free_evolution(u0, w0, cfg);
    const double A0 = x_norm(cfg.mode, free.U) + y_norm(cfg.mode, free.W);
    r.threshold = {A0, 3.0 / (32.0 * cfg.c * cfg.c), A0 < 3.0 / (32.0 * cfg.c * cfg.c)};
    r.contraction_bound = 8.0 * cfg.c * cfg.c * A0 + 0.25;
    r.iterate_norms.push_back(A0);

    Trajectory u = free.U, w = free.W;
    const double ball = 2.0 * A0 * (1.0 + 1e-12);
    for (int m = 1; m <= cfg.max_iter; ++m) {
        auto [un, wn] = apply_map(u, w, free, cfg, &r.head_B, &r.head_L);
        require_finite(un, "u", m);
        require_finite(wn, "w", m);
        const double d = xy_distance(cfg.mode, un, wn, u, w);
        if (!r.residuals.empty() && r.residuals.back() > 0.0) r.contraction_factors.push_back(d / r.residuals.back());
        r.residuals.push_back(d);
        const double norm = x_norm(cfg.mode, un) + y_norm(cfg.mode, wn);
        r.iterate_norms.push_back(norm);
        if (norm > ball) r.ball_ok = false;
        u = std::move(un);
        w = std::move(wn);
        r.iterations = m;
        if (d <= cfg.tol) {
            r.converged = true;
            break;
        }
        if (!(d <= 1e6 * std::max(A0, cfg.tol))) break;  // diverging
    }

    r.u = std::move(u);
    r.w = std::move(w);
    r.v = (4.0 * cfg.c) * r.w;
    r.norms_thm1 = xy_norms_thm1(r.u, r.w);
    r.norms_thm2 = xy_norms_thm2(r.u, r.w);
    if (cfg.mode == TheoremMode::thm1_L1Linf)
        r.thm1 = check_theorem1_bound(r);
    else
        r.thm2 = check_theorem2_bound(r);
    return r;
}

// ---------------------------------------------------------------------------
// Reference stepper

namespace {

struct Propagator {
    ComplexArray eu, ev, e21;
};

// Exact solution operator of a' = -lambda a, b' = -kappa b + s a over time h.
Propagator make_propagator(const RealArray& lambda, double h, bool remark_ii) {
    const RealArray eu = (-h * lambda).exp();
    Propagator p;
    p.eu = eu.cast<Complex>();
    if (remark_ii) {
        p.ev = p.eu;
        p.e21 = (-h * eu).cast<Complex>();
    } else {
        p.ev = (std::exp(-h) * eu).cast<Complex>();
        p.e21 = (-std::expm1(-h) * eu).cast<Complex>();
    }
    return p;
}

struct State {
    ComplexArray a, b;
};

State apply(const Propagator& p, const State& y) { return {p.eu * y.a, p.ev * y.b + p.e21 * y.a}; }

State axpy(const State& y, double s, const State& k) { return {y.a + s * k.a, y.b + s * k.b}; }

double spectral_norm(const ComplexArray& a) { return std::sqrt(a.abs2().sum()); }

}  // namespace

std::pair<Trajectory, Trajectory> reference_solve(const ScalarField& u0, const ScalarField& v0,
                                                  const SolverConfig& cfg) {
    cfg.validate();
    if (!(u0.grid == cfg.grid) || !(v0.grid == cfg.grid))
        throw std::invalid_argument("initial data do not live on the configured grid");
    const Grid2D& g = cfg.grid;
    const RealArray lambda = g.wavenumber_sq();
    const auto& settings = cfg.reference;

    auto nonlinear = [&](const State& y) -> State {
        State k{ComplexArray::Zero(g.n, g.n), ComplexArray::Zero(g.n, g.n)};
        if (settings.nonlinear) k.a = -divergence_flux(g, y.a, y.b);
        return k;
    };

    Trajectory u(g, cfg.tgrid), v(g, cfg.tgrid);
    u.initial = u0;
    v.initial = v0;
    State y{fft2(u0.values), fft2(v0.values)};
    State k1 = nonlinear(y);

    double t = 0.0;
    for (size_t j = 0; j < cfg.tgrid.size(); ++j) {
        const double b = cfg.tgrid[j];
        const double gap = b - t;
        const int nominal = std::max(settings.steps_per_gap, static_cast<int>(std::ceil(gap / settings.dt_max)));
        double h_cur = gap / nominal;
        const bool check_growth = t > 0.0;
        int halvings = 0;
        double h_prop = -1.0;
        Propagator full, half;
        while (t < b) {
            const bool last = b - t <= h_cur * (1.0 + 1e-9);
            const double h = last ? b - t : h_cur;
            if (h != h_prop) {
                full = make_propagator(lambda, h, cfg.remark_ii);
                half = make_propagator(lambda, 0.5 * h, cfg.remark_ii);
                h_prop = h;
            }
            const State k2 = nonlinear(apply(half, axpy(y, 0.5 * h, k1)));
            const State k3 = nonlinear(axpy(apply(half, y), 0.5 * h, k2));
            const State k4 = nonlinear(axpy(apply(full, y), h, apply(half, k3)));
            const State ek1 = apply(full, k1);
            const State ek23 = apply(half, State{k2.a + k3.a, k2.b + k3.b});
            State yn = apply(full, y);
            yn.a += (h / 6.0) * (ek1.a + 2.0 * ek23.a + k4.a);
            yn.b += (h / 6.0) * (ek1.b + 2.0 * ek23.b + k4.b);
            const State k1n = nonlinear(yn);

            const double prev = spectral_norm(k1.a);
            const double next = spectral_norm(k1n.a);
            if (!std::isfinite(next) || !yn.a.allFinite() || !yn.b.allFinite()) {
                if (++halvings > settings.max_halvings)
                    throw NumericalError("reference stepper produced non-finite values near t = " + std::to_string(t));
                h_cur *= 0.5;
                continue;
            }
            if (check_growth && prev > 0.0 && next > 2.0 * prev) {
                if (++halvings > settings.max_halvings)
                    throw NumericalError("reference stepper: step rejected too often near t = " + std::to_string(t));
                h_cur *= 0.5;
                continue;
            }
            y = std::move(yn);
            k1 = std::move(k1n);
            t = last ? b : t + h;
        }
        u[j] = ScalarField(g, ifft2_real(y.a));
        v[j] = ScalarField(g, ifft2_real(y.b));
    }
    return {std::move(u), std::move(v)};
}

// ---------------------------------------------------------------------------
// Bound checks

namespace {

template <typename F>
std::vector<double> node_values(const Trajectory& tr, F f) {
    std::vector<double> out(tr.size());
    parallel_for(tr.size(), [&](size_t j) { out[j] = f(tr.tgrid[j], tr[j]); });
    return out;
}

double vmax(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

BoundCheck check_theorem1_bound(const SolutionReport& r) {
    BoundCheck out;
    if (!r.converged) {
        out.verdict = Verdict::not_converged;
        out.detail = "Picard iteration did not converge";
        return out;
    }
    if (!r.u.initial || !r.v.initial) throw std::invalid_argument("solution report lacks initial data");
    const ScalarField& u0 = *r.u.initial;
    const ScalarField& v0 = *r.v.initial;
    const double inv4c = 1.0 / (4.0 * r.c);
    const TimeGrid& tg = r.u.tgrid;

    std::vector<double> lhs(tg.size()), rhs(tg.size()), t_u_linf(tg.size()), sqrt_t_grad_v(tg.size());
    parallel_for(tg.size(), [&](size_t j) {
        const double t = tg[j];
        t_u_linf[j] = t * lp_norm(r.u[j], INFINITY);
        sqrt_t_grad_v[j] = std::sqrt(t) * grad_linf(r.v[j]);
        lhs[j] = lp_norm(r.u[j], 1.0) + t_u_linf[j] + inv4c * sqrt_t_grad_v[j];
        const ScalarField hu = heat(t, u0);
        rhs[j] = lp_norm(hu, 1.0) + t * lp_norm(hu, INFINITY) + inv4c * std::sqrt(t) * grad_linf(heat(t, v0));
    });
    out.lhs = vmax(lhs);
    const double rhs_sup = vmax(rhs);
    out.rhs = 2.0 * rhs_sup;

    const double threshold = 3.0 / (32.0 * r.c * r.c);
    const BesovResult bes =
        besov_norm_gradient(v0, -1.0, std::numeric_limits<double>::infinity(), TimeGrid::geometric(1e-5, 1e3, 81));
    const double sufficient = 2.0 * lp_norm(u0, 1.0) + inv4c * bes.value;

    const auto t_arg = static_cast<size_t>(std::max_element(t_u_linf.begin(), t_u_linf.end()) - t_u_linf.begin());
    const auto g_arg =
        static_cast<size_t>(std::max_element(sqrt_t_grad_v.begin(), sqrt_t_grad_v.end()) - sqrt_t_grad_v.begin());
    out.values = {{"free_sup_sum", rhs_sup},
                  {"ratio_lhs_over_free", rhs_sup > 0.0 ? out.lhs / rhs_sup : 0.0},
                  {"smallness_threshold", threshold},
                  {"sufficient_condition_lhs", sufficient},
                  {"sufficient_condition_holds", sufficient <= threshold ? 1.0 : 0.0},
                  {"besov_grad_v0", bes.value},
                  {"besov_boundary_argmax", bes.boundary_argmax ? 1.0 : 0.0},
                  {"t_u_Linf_argmax_time", tg[t_arg]},
                  {"t_u_Linf_final_over_max", t_u_linf[t_arg] > 0.0 ? t_u_linf.back() / t_u_linf[t_arg] : 0.0},
                  {"sqrt_t_grad_v_Linf_argmax_time", tg[g_arg]},
                  {"sqrt_t_grad_v_Linf_final_over_max",
                   sqrt_t_grad_v[g_arg] > 0.0 ? sqrt_t_grad_v.back() / sqrt_t_grad_v[g_arg] : 0.0}};

    if (!(rhs_sup <= threshold)) {
        out.verdict = Verdict::hypothesis_not_satisfied;
        out.detail = "free sup-sum exceeds the smallness threshold 3/(32c^2)";
        return out;
    }
    out.verdict = out.lhs <= out.rhs * (1.0 + 1e-12) ? Verdict::holds : Verdict::violated;
    out.detail = "sup_t(||u||_L1 + t||u||_Linf + t^(1/2)||grad v||_Linf/(4c)) <= 2 sup_t(same for the free evolution)";
    return out;
}

BoundCheck check_theorem2_bound(const SolutionReport& r, std::optional<double> eps0) {
    BoundCheck out;
    if (!r.converged) {
        out.verdict = Verdict::not_converged;
        out.detail = "Picard iteration did not converge";
        return out;
    }
    if (!r.u.initial || !r.v.initial) throw std::invalid_argument("solution report lacks initial data");
    const ScalarField& u0 = *r.u.initial;
    const ScalarField& v0 = *r.v.initial;
    const double inv4c = 1.0 / (4.0 * r.c);
    const TimeGrid& tg = r.u.tgrid;

    const double data_norm = lp_norm(u0, INFINITY) + hs_norm(u0, 1.0) + inv4c * hs_norm(v0, 1.0);
    const double eps = eps0.value_or(data_norm);

    const auto u_h1 = node_values(r.u, [](double, const ScalarField& f) { return hs_norm(f, 1.0); });
    const auto w_h1 = node_values(r.v, [&](double, const ScalarField& f) { return inv4c * hs_norm(f, 1.0); });
    const auto u_inf = node_values(r.u, [](double, const ScalarField& f) { return lp_norm(f, INFINITY); });
    const auto sig = node_values(r.v, [&](double t, const ScalarField& f) { return inv4c * sigma(t) * grad_linf(f); });
    const auto gu = node_values(r.u, [](double, const ScalarField& f) { return hs_dot_norm(f, 1.0); });
    const auto gv = node_values(r.v, [&](double, const ScalarField& f) { return inv4c * grad_h1_norm(f); });

    const double c_u_h1 = std::max(hs_norm(u0, 1.0), vmax(u_h1));
    const double c_w_h1 = std::max(inv4c * hs_norm(v0, 1.0), vmax(w_h1));
    const double c_u_inf = std::max(lp_norm(u0, INFINITY), vmax(u_inf));
    const double c_sig = vmax(sig);
    const double c_gu = time_lp_norm(gu, tg, 2.0, hs_dot_norm(u0, 1.0));
    const double c_gv = time_lp_norm(gv, tg, 2.0, inv4c * grad_h1_norm(v0));

    out.lhs = c_u_h1 + c_w_h1 + c_u_inf + c_sig + c_gu + c_gv;
    out.rhs = 2.0 * eps;
    out.values = {{"u_Linf_t_H1", c_u_h1},
                  {"v_over_4c_Linf_t_H1", c_w_h1},
                  {"u_Linf_t_Linf", c_u_inf},
                  {"sigma_grad_v_over_4c_Linf_t_Linf", c_sig},
                  {"grad_u_L2_t_L2", c_gu},
                  {"grad_v_over_4c_L2_t_H1", c_gv},
                  {"data_norm", data_norm},
                  {"eps0", eps}};
    if (data_norm > eps * (1.0 + 1e-12)) {
        out.verdict = Verdict::hypothesis_not_satisfied;
        out.detail = "||u0||_Linf + ||u0||_H1 + ||v0||_H1/(4c) exceeds eps0";
        return out;
    }
    out.verdict = out.lhs <= out.rhs * (1.0 + 1e-12) ? Verdict::holds : Verdict::violated;
    out.detail = "sum of the solution norms <= 2 eps0";
    return out;
}

MassSweep mass_sweep(const std::vector<double>& masses, double s0, const SolverConfig& cfg) {
    MassSweep out;
    for (double M : masses) {
        MassSweepEntry e;
        e.mass = M;
        const ScalarField u0 = gaussian(cfg.grid, M, s0);
        const ScalarField w0(cfg.grid);
        try {
            const SolutionReport r = picard_solve(u0, w0, cfg);
            e.A0 = r.threshold.A0;
            e.threshold_ok = r.threshold.satisfied;
            e.converged = r.converged;
            e.iterations = r.iterations;
            for (double f : r.contraction_factors) e.max_contraction = std::max(e.max_contraction, f);
        } catch (const NumericalError&) {
            const double A0 = x_norm(cfg.mode, heat_trajectory(u0, cfg.tgrid));
            e.A0 = A0;
            e.threshold_ok = A0 < 3.0 / (32.0 * cfg.c * cfg.c);
            e.converged = false;
            e.max_contraction = std::numeric_limits<double>::infinity();
        }
        if (!e.threshold_ok && !out.first_violating_mass) out.first_violating_mass = M;
        out.entries.push_back(e);
    }
    return out;
}

std::vector<double> relative_differences(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || !(a.grid == b.grid)) throw std::invalid_argument("trajectories differ in shape");
    std::vector<double> out(a.size());
    for (size_t j = 0; j < a.size(); ++j) {
        const double diff = (a[j].values - b[j].values).abs().maxCoeff();
        const double ref = b[j].values.abs().maxCoeff();
        out[j] = ref > 0.0 ? diff / ref : diff;
    }
    return out;
}

double max_relative_difference(const Trajectory& a, const Trajectory& b) {
    const auto d = relative_differences(a, b);
    return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

}  // namespace ks
