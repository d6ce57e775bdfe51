#include "ks/inequality_lab.hpp"

#include "ks/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <functional>
#include <tuple>

namespace ks {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << v;
    return os.str();
}

// Uniform double in [-1, 1) from raw engine output, independent of the
// standard library's distribution implementations.
double unit_symmetric(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; }

void add_row(LemmaReport& r, SampleRow row) {
    auto [it, inserted] = r.group_max.try_emplace(row.group, row.ratio);
    if (!inserted) it->second = std::max(it->second, row.ratio);
    if (!std::isfinite(row.ratio))
        r.failures.push_back(r.name + ": non-finite ratio for " + row.group + " / " + row.family + " " + row.params);
    r.rows.push_back(std::move(row));
}

void check_bounds(LemmaReport& r) {
    for (const auto& [group, bound] : r.group_bound) {
        const auto it = r.group_max.find(group);
        if (it == r.group_max.end()) continue;
        if (!(it->second <= bound)) {
            std::ostringstream os;
            os << r.name << ": " << group << " max ratio " << it->second << " exceeds " << bound;
            // name the worst sample
            for (const auto& row : r.rows)
                if (row.group == group && row.ratio == it->second) os << " (sample " << row.family << " " << row.params << ")";
            r.failures.push_back(os.str());
        }
    }
}

/// Per-node values of a spatial norm, plus the origin value when present.
template <typename F>
double trajectory_time_norm(const Trajectory& tr, double p, F spatial) {
    std::vector<double> vals(tr.size());
    for (size_t j = 0; j < tr.size(); ++j) vals[j] = spatial(tr[j]);
    std::optional<double> origin;
    if (tr.initial) origin = spatial(*tr.initial);
    return time_lp_norm(vals, tr.tgrid, p, origin);
}

std::vector<ComplexArray> spectral_nodes(const Trajectory& t) {
    std::vector<ComplexArray> out(t.size());
    for (size_t j = 0; j < t.size(); ++j) out[j] = fft2(t[j].values);
    return out;
}

Trajectory convolve(const Trajectory& F, const RealArray& rate, const RealArray& symbol) {
    std::optional<ComplexArray> origin;
    if (F.initial) origin = fft2(F.initial->values);
    const QuadratureScheme q{QuadratureKind::etd_piecewise_linear, 1};
    return duhamel_integrate(F.grid, F.tgrid, spectral_nodes(F), origin, DuhamelKernel{rate, symbol.cast<Complex>()},
                             q);
}

}  // namespace

double LemmaReport::max_ratio() const {
    double m = 0.0;
    for (const auto& [g, v] : group_max) m = std::max(m, v);
    return m;
}

void to_json(nlohmann::json& j, const LemmaReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"group", row.group},
                        {"family", row.family},
                        {"params", row.params},
                        {"lhs", row.lhs},
                        {"rhs", row.rhs},
                        {"ratio", row.ratio}});
    j = nlohmann::json{{"name", r.name},
                       {"passed", r.passed()},
                       {"max_ratio", r.max_ratio()},
                       {"group_max", r.group_max},
                       {"group_bound", r.group_bound},
                       {"metrics", r.metrics},
                       {"failures", r.failures},
                       {"samples", rows}};
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

namespace {
std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
}  // namespace

void write_csv(std::ostream& os, const std::vector<SampleRow>& rows) {
    os << "family,params,lhs,rhs,ratio\r\n";
    for (const auto& r : rows)
        os << csv_field(r.family) << ',' << csv_field(r.group + ";" + r.params) << ',' << csv_number(r.lhs) << ','
           << csv_number(r.rhs) << ',' << csv_number(r.ratio) << "\r\n";
}

// ---------------------------------------------------------------------------
// Data families

ScalarField random_field(const Grid2D& g, std::uint64_t seed, int max_mode, double decay) {
    std::mt19937_64 rng(seed);
    struct Mode {
        double k1, k2, a, b;
    };
    std::vector<Mode> modes;
    const double base = 2.0 * std::numbers::pi / g.l;
    for (int j1 = -max_mode; j1 <= max_mode; ++j1) {
        for (int j2 = -max_mode; j2 <= max_mode; ++j2) {
            const double k1 = base * j1, k2 = base * j2;
            const double amp = std::pow(1.0 + k1 * k1 + k2 * k2, -0.5 * decay);
            const double a = amp * unit_symmetric(rng);
            const double b = amp * unit_symmetric(rng);
            modes.push_back({k1, k2, a, b});
        }
    }
    return sample(g, [&](double x1, double x2) {
        double v = 0.0;
        for (const auto& m : modes) {
            const double ph = m.k1 * x1 + m.k2 * x2;
            v += m.a * std::cos(ph) + m.b * std::sin(ph);
        }
        return v;
    });
}

ScalarField cosine_mode(const Grid2D& g, int j1, int j2) {
    const double base = 2.0 * std::numbers::pi / g.l;
    return sample(g, [&](double x1, double x2) { return std::cos(base * (j1 * x1 + j2 * x2)); });
}

namespace {
// Fraction of [x - h/2, x + h/2] inside [a, b].
double cell_overlap(double x, double h, double a, double b) {
    const double lo = std::max(x - 0.5 * h, a);
    const double hi = std::min(x + 0.5 * h, b);
    return std::max(0.0, hi - lo) / h;
}
}  // namespace

ScalarField smoothed_box(const Grid2D& g, double a1, double b1, double a2, double b2) {
    const double h = g.h();
    return sample(g, [&](double x1, double x2) { return cell_overlap(x1, h, a1, b1) * cell_overlap(x2, h, a2, b2); });
}

ScalarField smoothed_stripe(const Grid2D& g) {
    const double h = g.h();
    return sample(g, [&](double x1, double) { return cell_overlap(x1, h, 0.0, 1.0); });
}

std::string to_string(TimeProfile p) {
    switch (p) {
        case TimeProfile::constant: return "constant";
        case TimeProfile::exponential: return "exponential";
        case TimeProfile::square_wave: return "square_wave";
        case TimeProfile::pulse: return "pulse";
    }
    return "unknown";
}

namespace {
double profile_value(TimeProfile p, double t, double rate, double period) {
    switch (p) {
        case TimeProfile::constant: return 1.0;
        case TimeProfile::exponential: return std::exp(-rate * t);
        case TimeProfile::square_wave: {
            const double phase = t / period - std::floor(t / period + 1e-12);
            return phase < 0.5 - 1e-12 ? 1.0 : 0.0;
        }
        case TimeProfile::pulse: return t <= period * (1.0 + 1e-12) ? 1.0 : 0.0;
    }
    return 0.0;
}
}  // namespace

Trajectory profile_trajectory(const ScalarField& f, const TimeGrid& tg, TimeProfile p, double rate, double period) {
    std::vector<ScalarField> fields;
    fields.reserve(tg.size());
    for (size_t j = 0; j < tg.size(); ++j) fields.push_back(profile_value(p, tg[j], rate, period) * f);
    return Trajectory(f.grid, tg, std::move(fields), profile_value(p, 0.0, rate, period) * f);
}

// ---------------------------------------------------------------------------
// Multiplier estimates

namespace {

struct MultiplierCase {
    std::string group;
    bool weighted;  // |xi|^delta form: sup over xi of the time norm
    double r;       // time exponent
    std::function<double(double t, double lambda)> m;
};

}  // namespace

LemmaReport verify_multiplier_lemma(const LabScale& scale) {
    LemmaReport rep;
    rep.name = "multiplier_lemma";
    const Grid2D g = make_grid(scale.n, scale.l);
    // The first node resolves the largest grid wavenumber.
    const double t_first = std::min(1e-4 * scale.T, 0.01 / g.wavenumber_sq().maxCoeff());
    const TimeGrid tg = TimeGrid::geometric(t_first, scale.T, scale.K);
    std::vector<double> times{0.0};
    times.insert(times.end(), tg.times().begin(), tg.times().end());
    const auto weights = trapezoid_weights(tg, true);

    auto heat = [](double t, double lam) { return std::exp(-t * lam); };
    std::vector<MultiplierCase> cases{
        {"m=1 r=inf", false, kInf, [](double, double) { return 1.0; }},
        {"m=heat r=inf", false, kInf, heat},
        {"m=damped_heat r=2", false, 2.0, [](double t, double lam) { return std::exp(-t * (1.0 + lam)); }},
        {"m=damped_heat r=inf", false, kInf, [](double t, double lam) { return std::exp(-t * (1.0 + lam)); }},
        {"m=heat*|xi|^1 rho=2", true, 2.0, [](double t, double lam) { return std::sqrt(lam) * std::exp(-t * lam); }},
        {"m=heat*|xi|^0 rho=inf", true, kInf, heat},
        {"m=heat*|xi|^0.5 rho=4", true, 4.0,
         [](double t, double lam) { return std::pow(lam, 0.25) * std::exp(-t * lam); }},
    };

    struct Family {
        std::string name, params;
        ScalarField f;
    };
    std::vector<Family> fams{{"gaussian", "mass=1;s0=0.5", gaussian(g, 1.0, 0.5)},
                             {"mode", "j=(1,0)", cosine_mode(g, 1, 0)},
                             {"mode", "j=(3,2)", cosine_mode(g, 3, 2)},
                             {"random", "seed=" + std::to_string(scale.seed), random_field(g, scale.seed)}};

    const RealArray lambda = g.wavenumber_sq();
    const double norm_factor = g.l * g.l / std::pow(static_cast<double>(g.n), 4);

    // Time norm of a sampled function of t (origin included).
    auto tnorm = [&](const std::vector<double>& vals, double r) {
        if (std::isinf(r)) {
            double m = 0.0;
            for (double v : vals) m = std::max(m, std::abs(v));
            return m;
        }
        double acc = 0.0;
        for (size_t i = 0; i < vals.size(); ++i) acc += weights[i] * std::pow(std::abs(vals[i]), r);
        return std::pow(acc, 1.0 / r);
    };

    // Distinct |xi|^2 values on the grid.
    std::vector<double> lam_values(lambda.data(), lambda.data() + lambda.size());
    std::sort(lam_values.begin(), lam_values.end());
    lam_values.erase(std::unique(lam_values.begin(), lam_values.end()), lam_values.end());

    for (const auto& mc : cases) {
        // Multiplier side, independent of v.
        double mnorm = 0.0;
        std::vector<double> vals(times.size());
        if (mc.weighted) {
            for (double lam : lam_values) {
                for (size_t i = 0; i < times.size(); ++i) vals[i] = mc.m(times[i], lam);
                mnorm = std::max(mnorm, tnorm(vals, mc.r));
            }
        } else {
            for (size_t i = 0; i < times.size(); ++i) {
                double sup = 0.0;
                for (double lam : lam_values) sup = std::max(sup, std::abs(mc.m(times[i], lam)));
                vals[i] = sup;
            }
            mnorm = tnorm(vals, mc.r);
        }
        for (double s : {0.0, 1.0}) {
            for (const auto& fam : fams) {
                const ComplexArray F = fft2(fam.f.values);
                const RealArray energy = F.abs2() * (1.0 + lambda).pow(s) * norm_factor;
                const double vnorm = std::sqrt(energy.sum());
                std::vector<double> lhs_t(times.size());
                for (size_t i = 0; i < times.size(); ++i) {
                    const double t = times[i];
                    const RealArray mult = lambda.unaryExpr([&](double lam) { return mc.m(t, lam); });
                    lhs_t[i] = std::sqrt((mult.square() * energy).sum());
                }
                const double lhs = tnorm(lhs_t, mc.r);
                const double rhs = mnorm * vnorm;
                add_row(rep, {mc.group + " s=" + fmt(s), fam.name, fam.params, lhs, rhs, rhs > 0 ? lhs / rhs : 0.0});
                rep.group_bound[mc.group + " s=" + fmt(s)] = 1.0 + 1e-12;
            }
        }
    }

    // Single-mode closed form for the |xi|-weighted L^2_t norm.
    {
        const double k = 2.0 * std::numbers::pi / g.l;
        const double lam = k * k;
        std::vector<double> vals(times.size());
        for (size_t i = 0; i < times.size(); ++i) vals[i] = k * std::exp(-times[i] * lam);
        const double exact = k / std::sqrt(2.0 * lam) * std::sqrt(-std::expm1(-2.0 * scale.T * lam));
        rep.metrics["weighted_L2t_single_mode_rel_error"] = std::abs(tnorm(vals, 2.0) - exact) / exact;
    }
    check_bounds(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Time-convolution estimates

double lemma23_damped_constant(double theta) {
    if (theta == 0.0) return 1.0;
    // Gamma(1 - theta/2) * (theta / (2e))^{theta/2}
    return std::tgamma(1.0 - 0.5 * theta) * std::pow(theta / (2.0 * std::numbers::e), 0.5 * theta);
}

namespace {

struct ProfileSpec {
    TimeProfile kind;
    double param;  // rate, period or width
    std::string label;
};

// Profiles whose time scales follow T, so that doubling T maps the family
// onto itself up to the mode set.
std::vector<ProfileSpec> lab_profiles(double T, bool with_pulses) {
    std::vector<ProfileSpec> out{{TimeProfile::constant, 1.0, "constant"},
                                 {TimeProfile::exponential, 1.0, "exponential;rate=1"},
                                 {TimeProfile::square_wave, T / 8.0, "square_wave;period=T/8"}};
    if (with_pulses)
        for (int i = 1; i <= 5; ++i)
            out.push_back({TimeProfile::pulse, T / std::pow(2.0, i), "pulse;width=T/" + std::to_string(1 << i)});
    return out;
}

Trajectory profile_of(const ScalarField& f, const TimeGrid& tg, const ProfileSpec& p) {
    return profile_trajectory(f, tg, p.kind, p.kind == TimeProfile::exponential ? p.param : 1.0, p.param);
}

using ModeList = std::vector<std::pair<int, int>>;

ScalarField mode_sum(const Grid2D& g, const ModeList& modes) {
    ScalarField f(g);
    for (const auto& [j1, j2] : modes) f = f + cosine_mode(g, j1, j2);
    return f;
}

// Cosine amplitude of each listed mode at every node of a trajectory. The
// operators here are Fourier multipliers, so a sum of distinct modes evolves
// mode by mode.
std::vector<std::vector<double>> mode_amplitudes(const Trajectory& tr, const ModeList& modes) {
    const int n = tr.grid.n;
    std::vector<std::vector<double>> out(modes.size(), std::vector<double>(tr.size()));
    for (size_t j = 0; j < tr.size(); ++j) {
        const ComplexArray F = fft2(tr[j].values);
        for (size_t m = 0; m < modes.size(); ++m) {
            const int a = (modes[m].first % n + n) % n, b = (modes[m].second % n + n) % n;
            out[m][j] = 2.0 * std::abs(F(a, b)) / (static_cast<double>(n) * n);
        }
    }
    return out;
}

std::vector<double> profile_values(const TimeGrid& tg, const ProfileSpec& p) {
    std::vector<double> v(tg.size());
    const Trajectory one = profile_of(ScalarField(make_grid(16, 1.0), RealArray::Ones(16, 16)), tg, p);
    for (size_t j = 0; j < tg.size(); ++j) v[j] = one[j].values(0, 0);
    return v;
}

double profile_origin(const TimeGrid& tg, const ProfileSpec& p) {
    const Trajectory one = profile_of(ScalarField(make_grid(16, 1.0), RealArray::Ones(16, 16)), tg, p);
    return one.initial->values(0, 0);
}

std::string mode_label(int j1, int j2) { return "j=(" + std::to_string(j1) + "," + std::to_string(j2) + ")"; }

}  // namespace

LemmaReport verify_bilinear_lemma23(const LabScale& scale) {
    LemmaReport rep;
    rep.name = "bilinear_lemma23";
    const Grid2D g = make_grid(scale.n, scale.l);
    const TimeGrid tg = TimeGrid::uniform(scale.T / scale.K, scale.T, scale.K);
    const RealArray lambda = g.wavenumber_sq();

    struct Tuple {
        std::string group;
        RealArray rate, symbol;
        double p_out, r_in;
        bool homogeneous;
        std::optional<double> bound;
    };
    std::vector<Tuple> tuples;
    for (auto [theta, p1, r] : std::vector<std::tuple<double, double, double>>{
             {0.0, kInf, kInf}, {1.0, 2.0, 2.0}, {0.0, 2.0, 2.0}, {1.0, kInf, kInf}}) {
        tuples.push_back({"damped theta=" + fmt(theta) + " p1=" + fmt(p1) + " r=" + fmt(r), 1.0 + lambda,
                          lambda.pow(0.5 * theta), p1, r, true, lemma23_damped_constant(theta) * 1.01});
    }
    for (auto [p, r] : std::vector<std::pair<double, double>>{{kInf, 2.0}, {kInf, kInf}, {2.0, 2.0}}) {
        const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
        const double inv_r = std::isinf(r) ? 0.0 : 1.0 / r;
        const double alpha = 2.0 + 2.0 * inv_p - 2.0 * inv_r;
        // sup_xi || |xi|^alpha e^{-t |xi|^2} ||_{L^q_t} = q^{-1/q}, 1/q = 1 + 1/p - 1/r
        const double q = 1.0 / (1.0 + inv_p - inv_r);
        std::optional<double> bound;
        if (r <= 2.0) bound = std::pow(q, -1.0 / q) * 1.01;  // r = inf lies outside the lemma's range
        tuples.push_back({"heat alpha=" + fmt(alpha) + " p=" + fmt(p) + " r=" + fmt(r), lambda,
                          lambda.pow(0.5 * alpha), p, r, false, bound});
    }

    ModeList modes;
    for (int j = 1; j <= scale.n / 3; ++j) modes.push_back({j, 0});
    const ScalarField sweep_field = mode_sum(g, modes);
    const ScalarField rnd = random_field(g, scale.seed);
    const auto profiles = lab_profiles(scale.T, true);

    for (const auto& tu : tuples) {
        double sup_low = 0.0, sup_all = 0.0;
        for (const auto& prof : profiles) {
            // Mode sweep: the ratio of one mode does not depend on s.
            const auto pv = profile_values(tg, prof);
            const double rhs_t = time_lp_norm(pv, tg, tu.r_in, profile_origin(tg, prof));
            const auto amps = mode_amplitudes(convolve(profile_of(sweep_field, tg, prof), tu.rate, tu.symbol), modes);
            for (size_t m = 0; m < modes.size(); ++m) {
                const double lhs_t = time_lp_norm(amps[m], tg, tu.p_out, 0.0);
                const double ratio = rhs_t > 0 ? lhs_t / rhs_t : 0.0;
                for (double s : {0.0, 1.0})
                    add_row(rep, {tu.group + " s=" + fmt(s), "mode", mode_label(modes[m].first, 0) + ";" + prof.label,
                                  lhs_t, rhs_t, ratio});
                sup_all = std::max(sup_all, ratio);
                if (modes[m].first <= scale.n / 6) sup_low = std::max(sup_low, ratio);
            }
            // Random field, full spatial norms.
            const Trajectory F = profile_of(rnd, tg, prof);
            Trajectory out = convolve(F, tu.rate, tu.symbol);
            out.initial = ScalarField(g);
            for (double s : {0.0, 1.0}) {
                auto spatial = [&](const ScalarField& f) { return tu.homogeneous ? hs_dot_norm(f, s) : hs_norm(f, s); };
                const double lhs = trajectory_time_norm(out, tu.p_out, spatial);
                const double rhs = trajectory_time_norm(F, tu.r_in, spatial);
                add_row(rep, {tu.group + " s=" + fmt(s), "random",
                              "seed=" + std::to_string(scale.seed) + ";" + prof.label, lhs, rhs,
                              rhs > 0 ? lhs / rhs : 0.0});
            }
        }
        for (double s : {0.0, 1.0})
            if (tu.bound) rep.group_bound[tu.group + " s=" + fmt(s)] = *tu.bound;
        const double spread = sup_all > 0 ? (sup_all - sup_low) / sup_all : 0.0;
        rep.metrics["mode_uniformity " + tu.group] = spread;
        if (!(spread < 0.10))
            rep.failures.push_back(rep.name + ": " + tu.group + " mode sweep max ratio varies by " + fmt(spread));
    }
    check_bounds(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Maximal regularity

namespace {

struct MaxRegSup {
    double all = 0.0, low_modes = 0.0;
    std::map<std::string, double> by_profile;
};

MaxRegSup maximal_regularity_pass(const LabScale& scale, int K, LemmaReport* rep) {
    const Grid2D g = make_grid(scale.n, scale.l);
    const TimeGrid tg = TimeGrid::uniform(scale.T / K, scale.T, K);
    ModeList modes;
    for (int j = 1; j <= scale.n / 4; ++j) modes.push_back({j, 0});
    for (int j = 1; j <= scale.n / 8; ++j) modes.push_back({j, j});
    const ScalarField f = mode_sum(g, modes);
    const QuadratureScheme q{QuadratureKind::etd_piecewise_linear, 1};
    MaxRegSup sup;
    for (const auto& prof : lab_profiles(scale.T, false)) {
        const auto pv = profile_values(tg, prof);
        const double rhs = time_lp_norm(pv, tg, 2.0, profile_origin(tg, prof));
        const auto amps = mode_amplitudes(maximal_reg_T(profile_of(f, tg, prof), q), modes);
        for (size_t m = 0; m < modes.size(); ++m) {
            const double lhs = time_lp_norm(amps[m], tg, 2.0, 0.0);
            const double ratio = rhs > 0 ? lhs / rhs : 0.0;
            const auto [j1, j2] = modes[m];
            if (rep) add_row(*rep, {"p=q=2 profile=" + to_string(prof.kind), "mode", mode_label(j1, j2) + ";" + prof.label,
                                    lhs, rhs, ratio});
            sup.all = std::max(sup.all, ratio);
            if (std::max(j1, j2) <= scale.n / 8) sup.low_modes = std::max(sup.low_modes, ratio);
            auto& bp = sup.by_profile[to_string(prof.kind)];
            bp = std::max(bp, ratio);
        }
    }
    return sup;
}

}  // namespace

LemmaReport verify_maximal_regularity(const LabScale& scale) {
    LemmaReport rep;
    rep.name = "maximal_regularity";
    const MaxRegSup base = maximal_regularity_pass(scale, scale.K, &rep);
    const MaxRegSup fine = maximal_regularity_pass(scale, 2 * scale.K, nullptr);
    for (const auto& [group, v] : rep.group_max) rep.group_bound[group] = 1.01;

    auto stable = [&](const std::string& what, double a, double b) {
        const double d = std::abs(a - b) / std::max(a, b);
        rep.metrics[what] = d;
        if (!(d < 0.05)) rep.failures.push_back(rep.name + ": " + what + " changes by " + fmt(d));
    };
    stable("mode_count_doubling", base.low_modes, base.all);
    stable("time_refinement", base.all, fine.all);
    stable("square_wave_refinement", base.by_profile.at("square_wave"), fine.by_profile.at("square_wave"));
    for (const auto& [p, v] : base.by_profile) rep.metrics["sup_profile_" + p] = v;
    check_bounds(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Drift

void to_json(nlohmann::json& j, const DriftReport& r) {
    j = nlohmann::json{{"name", r.name},
                       {"drift", r.drift},
                       {"max_drift", r.max_drift},
                       {"tolerance", r.tolerance},
                       {"passed", r.passed()}};
}

DriftReport ratio_drift(const LemmaReport& base, const LemmaReport& refined, double tolerance) {
    DriftReport d;
    d.name = base.name;
    d.tolerance = tolerance;
    for (const auto& [group, a] : base.group_max) {
        const auto it = refined.group_max.find(group);
        if (it == refined.group_max.end()) continue;
        const double b = it->second;
        if (std::max(std::abs(a), std::abs(b)) < 1e-14) continue;
        const double drift = std::abs(b - a) / std::max(std::abs(a), std::abs(b));
        d.drift[group] = drift;
        d.max_drift = std::max(d.max_drift, drift);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Constants

void to_json(nlohmann::json& j, const ConstantsReport& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : r.samples)
        samples.push_back({{"constant", s.constant},
                           {"mode", s.mode},
                           {"family", s.family},
                           {"params", s.params},
                           {"lhs", s.lhs},
                           {"rhs", s.rhs},
                           {"ratio", s.ratio}});
    j = nlohmann::json{{"c1", r.c1},
                       {"c2", r.c2},
                       {"c3", r.c3},
                       {"raw_max", r.raw_max},
                       {"safety", r.safety},
                       {"c", r.c},
                       {"threshold", r.threshold},
                       {"consistent", r.consistent},
                       {"notices", r.notices},
                       {"metadata", r.metadata},
                       {"samples", samples}};
    j["forced_c"] = r.forced_c ? nlohmann::json(*r.forced_c) : nlohmann::json(nullptr);
}

void write_csv(std::ostream& os, const ConstantsReport& r) {
    os << "family,params,lhs,rhs,ratio\r\n";
    for (const auto& s : r.samples)
        os << csv_field(s.family) << ',' << csv_field(s.constant + ";" + s.mode + ";" + s.params) << ','
           << csv_number(s.lhs) << ',' << csv_number(s.rhs) << ',' << csv_number(s.ratio) << "\r\n";
}

std::vector<NamedField> constant_families(const Grid2D& g, const ConstantsSettings& s) {
    std::vector<NamedField> out;
    for (double w : s.gaussian_widths) out.push_back({"gaussian", "mass=1;s0=" + fmt(w), gaussian(g, 1.0, w)});
    if (!s.gaussian_widths.empty())
        out.push_back({"gaussian", "mass=1;s0=" + fmt(s.gaussian_widths.front()) + ";center=(1.3,-0.7)",
                       gaussian(g, 1.0, s.gaussian_widths.front(), 1.3, -0.7)});
    for (int j : s.modes) out.push_back({"mode", "j=(" + std::to_string(j) + ",0)", cosine_mode(g, j, 0)});
    if (s.indicators) {
        out.push_back({"indicator", "box=[-1,1]^2", smoothed_box(g, -1.0, 1.0, -1.0, 1.0)});
        out.push_back({"indicator", "stripe=[0,1]", smoothed_stripe(g)});
    }
    return out;
}

ConstantsReport estimate_constants(const ConstantsSettings& s) {
    return estimate_constants(s, constant_families(make_grid(s.n, s.l), s));
}

ConstantsReport estimate_constants(const ConstantsSettings& s, const std::vector<NamedField>& families) {
    if (!(s.safety >= 1.0)) throw std::invalid_argument("safety factor must be >= 1");
    ConstantsReport rep;
    rep.safety = s.safety;
    const Grid2D g = make_grid(s.n, s.l);
    const TimeGrid tg = TimeGrid::geometric(s.t_min, s.T, s.K);
    const QuadratureScheme q;

    auto record = [&](const std::string& constant, TheoremMode mode, const NamedField& f, const std::string& extra,
                      double lhs, double rhs) {
        if (!(rhs > 0.0) || !std::isfinite(rhs)) {
            rep.notices.push_back("skipped " + constant + " sample " + f.family + " " + f.params + extra +
                                  " (zero reference norm)");
            return;
        }
        const double ratio = lhs / rhs;
        rep.samples.push_back({constant, to_string(mode), f.family, f.params + extra, lhs, rhs, ratio});
        double& target = constant == "c1" ? rep.c1 : constant == "c2" ? rep.c2 : rep.c3;
        target = std::max(target, ratio);
    };

    std::vector<Trajectory> heat_tr, damped_tr;
    for (const auto& f : families) {
        if (!(f.field.grid == g)) throw std::invalid_argument("constant family lives on a different grid");
        heat_tr.push_back(heat_trajectory(f.field, tg));
        damped_tr.push_back(damped_heat_trajectory(f.field, tg));
    }

    for (TheoremMode mode : {TheoremMode::thm1_L1Linf, TheoremMode::thm2_H1bH1}) {
        std::vector<double> xn(families.size()), yn(families.size());
        for (size_t i = 0; i < families.size(); ++i) {
            const ScalarField& f = families[i].field;
            xn[i] = x_norm(mode, heat_tr[i]);
            yn[i] = y_norm(mode, damped_tr[i]);
            if (mode == TheoremMode::thm1_L1Linf) {
                record("c1", mode, families[i], ";free_u/L1", xn[i], lp_norm(f, 1.0));
                record("c1", mode, families[i], ";free_w/Linf", yn[i], lp_norm(f, kInf));
            } else {
                record("c1", mode, families[i], ";free_u/H1b", xn[i], hs_norm(f, 1.0) + lp_norm(f, kInf));
                record("c1", mode, families[i], ";free_w/H1", yn[i], hs_norm(f, 1.0));
            }
            const Trajectory L = linear_L(heat_tr[i], q);
            record("c3", mode, families[i], "", y_norm(mode, L), xn[i]);
        }
        for (size_t i = 0; i < families.size(); ++i) {
            for (size_t k = 0; k < families.size(); ++k) {
                const double rhs = xn[i] * yn[k];
                if (!(rhs > 0.0)) {
                    rep.notices.push_back("skipped c2 pair " + families[i].params + " x " + families[k].params +
                                          " (zero reference norm)");
                    continue;
                }
                const Trajectory B = bilinear_B(heat_tr[i], damped_tr[k], q);
                record("c2", mode, families[i], ";w=" + families[k].family + ":" + families[k].params,
                       x_norm(mode, B), rhs);
            }
        }
    }

    rep.raw_max = std::max({rep.c1, rep.c2, rep.c3});
    rep.c = s.safety * rep.raw_max;
    rep.threshold = 3.0 / (32.0 * rep.c * rep.c);
    std::vector<std::string> fam_names;
    for (const auto& f : families) fam_names.push_back(f.family + ":" + f.params);
    rep.metadata = {{"n", s.n}, {"l", s.l},       {"K", s.K},         {"t_min", s.t_min},
                    {"T", s.T}, {"families", fam_names}, {"quadrature", to_string(q.kind)}};
    return rep;
}

ConstantsReport force_constant(ConstantsReport r, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("forced c must be positive");
    r.forced_c = c;
    r.c = c;
    r.threshold = 3.0 / (32.0 * c * c);
    r.consistent = c >= r.raw_max;
    if (!r.consistent)
        r.notices.push_back("forced c = " + fmt(c) + " is below the observed ratio maximum " + fmt(r.raw_max) +
                            "; the threshold 3/(32c^2) is not backed by the estimates");
    return r;
}

// ---------------------------------------------------------------------------
// Counterexample

double counterexample_c0() { return (std::exp(-1.0) - std::exp(-9.0)) / (2.0 * std::sqrt(std::numbers::pi)); }

double counterexample_closed_form(double t, double x1) {
    return std::abs(std::exp(-x1 * x1 / (4.0 * t)) - std::exp(-(x1 - 1.0) * (x1 - 1.0) / (4.0 * t))) /
           (2.0 * std::sqrt(std::numbers::pi));
}

void to_json(nlohmann::json& j, const CounterexampleReport& r) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) {
        nlohmann::json e{{"t", p.t}, {"x1", p.x1}, {"closed_form", p.closed_form}, {"in_window", p.in_window}};
        e["grid"] = p.grid_value ? nlohmann::json(*p.grid_value) : nlohmann::json(nullptr);
        pts.push_back(e);
    }
    j = nlohmann::json{{"c0", r.c0},
                       {"verdict", r.verdict},
                       {"points", pts},
                       {"max_grid_rel_error", r.max_grid_rel_error},
                       {"n", r.n},
                       {"l", r.l},
                       {"smoothing_width", r.smoothing_width}};
}

namespace {

bool in_window(double t, double x1) {
    return t > 0.0 && t < 1.0 / 64.0 && x1 > std::sqrt(t) && x1 < 2.0 * std::sqrt(t);
}

void finish_verdict(CounterexampleReport& r) {
    bool outside = false, ok = true;
    for (const auto& p : r.points) {
        if (!p.in_window) outside = true;
        if (!(p.closed_form >= r.c0)) ok = false;
        if (p.grid_value && !(*p.grid_value >= r.c0)) ok = false;
    }
    r.verdict = outside ? "outside hypothesis" : ok ? "holds" : "violated";
}

}  // namespace

CounterexampleReport counterexample_profile(const std::vector<std::pair<double, double>>& points) {
    CounterexampleReport r;
    r.c0 = counterexample_c0();
    for (const auto& [t, x1] : points) {
        CounterexamplePoint p;
        p.t = t;
        p.x1 = x1;
        p.in_window = in_window(t, x1);
        p.closed_form = t > 0.0 ? counterexample_closed_form(t, x1) : std::numeric_limits<double>::quiet_NaN();
        r.points.push_back(p);
    }
    finish_verdict(r);
    return r;
}

CounterexampleReport counterexample_profile(const std::vector<std::pair<double, double>>& points, const Grid2D& g) {
    CounterexampleReport r = counterexample_profile(points);
    r.n = g.n;
    r.l = g.l;
    r.smoothing_width = g.h();
    const ScalarField v0 = smoothed_stripe(g);
    // The datum depends on x1 only: the k2 = 0 column carries everything.
    const ComplexArray F = fft2(v0.values);
    const double x0 = g.x(0);
    for (auto& p : r.points) {
        if (!(p.t > 0.0)) continue;
        double acc = 0.0;
        for (int j = 0; j < g.n; ++j) {
            if (j == g.n / 2) continue;  // Nyquist slot of the derivative
            const double xi = g.wavenumber(j);
            const Complex c = F(j, 0) * Complex(0.0, xi) * std::exp(-p.t * xi * xi) *
                              std::exp(Complex(0.0, xi * (p.x1 - x0)));
            acc += c.real();
        }
        const double val = std::sqrt(p.t) * std::abs(acc / (static_cast<double>(g.n) * g.n));
        p.grid_value = val;
        r.max_grid_rel_error = std::max(r.max_grid_rel_error, std::abs(val - p.closed_form) / p.closed_form);
    }
    finish_verdict(r);
    return r;
}

std::vector<std::pair<double, double>> counterexample_sweep() {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 10; ++i) {
        const double t = 0.005 + 0.01 * i / 9.0;
        const double x1 = std::sqrt(t) * (1.1 + 0.8 * i / 9.0);
        pts.push_back({t, x1});
    }
    return pts;
}

}  // namespace ks
