#include "ks/norms.hpp"

#include "ks/parallel.hpp"
#include "ks/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ks {

TimeGrid TimeGrid::geometric(double t_min, double t_max, int count) {
    if (!(t_min > 0.0) || !(t_max > t_min) || count < 2)
        throw std::invalid_argument("geometric time grid needs 0 < t_min < t_max and >= 2 nodes");
    TimeGrid g;
    g.spacing_ = Spacing::geometric;
    g.times_.resize(count);
    const double log_ratio = std::log(t_max / t_min) / (count - 1);
    for (int j = 0; j < count; ++j) g.times_[j] = t_min * std::exp(log_ratio * j);
    g.times_.back() = t_max;
    return g;
}

TimeGrid TimeGrid::uniform(double t_min, double t_max, int count) {
    if (!(t_min > 0.0) || !(t_max > t_min) || count < 2)
        throw std::invalid_argument("uniform time grid needs 0 < t_min < t_max and >= 2 nodes");
    TimeGrid g;
    g.spacing_ = Spacing::uniform;
    g.times_.resize(count);
    for (int j = 0; j < count; ++j) g.times_[j] = t_min + (t_max - t_min) * j / (count - 1);
    return g;
}

TimeGrid TimeGrid::from_nodes(std::vector<double> nodes) {
    if (nodes.empty() || !(nodes.front() > 0.0)) throw std::invalid_argument("time nodes must be positive");
    for (size_t j = 1; j < nodes.size(); ++j)
        if (!(nodes[j] > nodes[j - 1])) throw std::invalid_argument("time nodes must be strictly increasing");
    TimeGrid g;
    g.spacing_ = Spacing::uniform;
    g.times_ = std::move(nodes);
    return g;
}

Trajectory::Trajectory(const Grid2D& g, TimeGrid tg)
    : grid(g), tgrid(std::move(tg)), fields(tgrid.size(), ScalarField(g)) {}

Trajectory::Trajectory(const Grid2D& g, TimeGrid tg, std::vector<ScalarField> f, std::optional<ScalarField> init)
    : grid(g), tgrid(std::move(tg)), fields(std::move(f)), initial(std::move(init)) {
    validate();
}

void Trajectory::validate() const {
    if (fields.size() != tgrid.size()) throw std::invalid_argument("trajectory field count does not match time grid");
    for (const auto& f : fields)
        if (!(f.grid == grid)) throw std::invalid_argument("trajectory fields live on different grids");
    if (initial && !(initial->grid == grid)) throw std::invalid_argument("initial datum lives on a different grid");
}

namespace {

void require_compatible(const Trajectory& a, const Trajectory& b) {
    if (!(a.grid == b.grid) || a.tgrid.times() != b.tgrid.times())
        throw std::invalid_argument("trajectories do not share grids");
}

template <typename Op>
Trajectory combine(const Trajectory& a, const Trajectory& b, Op op) {
    require_compatible(a, b);
    Trajectory out(a.grid, a.tgrid);
    for (size_t j = 0; j < a.size(); ++j) out[j] = op(a[j], b[j]);
    if (a.initial && b.initial) out.initial = op(*a.initial, *b.initial);
    return out;
}

}  // namespace

Trajectory operator+(const Trajectory& a, const Trajectory& b) {
    return combine(a, b, [](const ScalarField& x, const ScalarField& y) { return x + y; });
}

Trajectory operator-(const Trajectory& a, const Trajectory& b) {
    return combine(a, b, [](const ScalarField& x, const ScalarField& y) { return x - y; });
}

Trajectory operator*(double s, const Trajectory& a) {
    Trajectory out(a.grid, a.tgrid);
    for (size_t j = 0; j < a.size(); ++j) out[j] = s * a[j];
    if (a.initial) out.initial = s * *a.initial;
    return out;
}

namespace {

Trajectory evolve(const ScalarField& f0, const TimeGrid& tg, double damping) {
    const ComplexArray F = fft2(f0.values);
    const RealArray k2 = f0.grid.wavenumber_sq();
    Trajectory out(f0.grid, tg);
    parallel_for(tg.size(), [&](size_t j) {
        const double t = tg[j];
        const RealArray decay = (-t * (k2 + damping)).exp();
        out[j] = ScalarField(f0.grid, ifft2_real(F * decay.cast<Complex>()));
    });
    out.initial = f0;
    return out;
}

}  // namespace

Trajectory heat_trajectory(const ScalarField& f0, const TimeGrid& tg) { return evolve(f0, tg, 0.0); }
Trajectory damped_heat_trajectory(const ScalarField& f0, const TimeGrid& tg) { return evolve(f0, tg, 1.0); }

void NormReport::set(const std::string& name, double value, std::string equation, std::optional<double> argmax) {
    entries[name] = NormEntry{value, std::move(equation), argmax};
}

double NormReport::operator[](const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw std::out_of_range("no norm named " + name);
    return it->second.value;
}

bool NormReport::all_finite_nonnegative() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const auto& e) { return std::isfinite(e.second.value) && e.second.value >= 0.0; });
}

void to_json(nlohmann::json& j, const NormReport& r) {
    j = nlohmann::json::object();
    for (const auto& [name, e] : r.entries) {
        nlohmann::json item{{"value", e.value}, {"equation_tag", e.equation}};
        if (e.argmax_time) item["argmax_time"] = *e.argmax_time;
        j[name] = item;
    }
}

void from_json(const nlohmann::json& j, NormReport& r) {
    r.entries.clear();
    for (const auto& [name, item] : j.items()) {
        NormEntry e{item.at("value").get<double>(), item.at("equation_tag").get<std::string>(), std::nullopt};
        if (item.contains("argmax_time")) e.argmax_time = item["argmax_time"].get<double>();
        r.entries[name] = e;
    }
}

double lp_norm(const ScalarField& f, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("Lebesgue exponent must be >= 1");
    if (std::isinf(p)) return f.values.abs().maxCoeff();
    const double area = f.grid.cell_area();
    if (p == 1.0) return f.values.abs().sum() * area;
    if (p == 2.0) return std::sqrt(f.values.square().sum() * area);
    return std::pow(f.values.abs().pow(p).sum() * area, 1.0 / p);
}

ScalarField magnitude(const ScalarField& g1, const ScalarField& g2) {
    return ScalarField(g1.grid, (g1.values.square() + g2.values.square()).sqrt());
}

double grad_linf(const ScalarField& f) {
    const auto [g1, g2] = gradient(f);
    return (g1.values.square() + g2.values.square()).sqrt().maxCoeff();
}

namespace {

// (l^2 / n^4) sum weight * |F|^2
double weighted_spectral_sq(const ScalarField& f, const RealArray& weight) {
    const double n = f.grid.n;
    const double scale = f.grid.l * f.grid.l / (n * n * n * n);
    return scale * (fft2(f.values).abs2() * weight).sum();
}

}  // namespace

double hs_norm(const ScalarField& f, double s) {
    const RealArray w = (1.0 + f.grid.wavenumber_sq()).pow(s);
    return std::sqrt(weighted_spectral_sq(f, w));
}

double hs_dot_norm(const ScalarField& f, double s) {
    RealArray w = f.grid.wavenumber_sq().pow(s);
    w(0, 0) = 0.0;
    return std::sqrt(weighted_spectral_sq(f, w));
}

double grad_h1_norm(const ScalarField& f) {
    const RealArray k2 = f.grid.wavenumber_sq();
    return std::sqrt(weighted_spectral_sq(f, k2 * (1.0 + k2)));
}

double sigma(double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("sigma needs t >= 0");
    return std::sqrt(t / (1.0 + t));
}

namespace {

void require_probe(double s, const TimeGrid& probe) {
    if (!(s < 0.0)) throw std::invalid_argument("heat-flow Besov norm needs s < 0");
    if (probe.size() < 2 || std::log10(probe.t_max() / probe.t_min()) < 6.0 - 1e-9)
        throw std::invalid_argument("Besov probe must cover at least 6 decades");
}

template <typename NormAt>
BesovResult besov_sup(const TimeGrid& probe, double s, NormAt norm_at) {
    std::vector<double> vals(probe.size());
    parallel_for(probe.size(), [&](size_t j) { vals[j] = std::pow(probe[j], -0.5 * s) * norm_at(probe[j]); });
    const auto it = std::max_element(vals.begin(), vals.end());
    const size_t k = static_cast<size_t>(it - vals.begin());
    return BesovResult{*it, probe[k], k == 0 || k + 1 == probe.size()};
}

}  // namespace

BesovResult besov_norm(const ScalarField& f, double s, double p, const TimeGrid& probe) {
    require_probe(s, probe);
    return besov_sup(probe, s, [&](double t) { return lp_norm(heat(t, f), p); });
}

BesovResult besov_norm_gradient(const ScalarField& f, double s, double p, const TimeGrid& probe) {
    require_probe(s, probe);
    return besov_sup(probe, s, [&](double t) {
        const auto [g1, g2] = grad_heat(t, f);
        return lp_norm(magnitude(g1, g2), p);
    });
}

std::vector<double> trapezoid_weights(const TimeGrid& tg, bool include_origin) {
    std::vector<double> nodes;
    if (include_origin) nodes.push_back(0.0);
    nodes.insert(nodes.end(), tg.times().begin(), tg.times().end());
    std::vector<double> w(nodes.size(), 0.0);
    for (size_t j = 0; j + 1 < nodes.size(); ++j) {
        const double d = nodes[j + 1] - nodes[j];
        w[j] += 0.5 * d;
        w[j + 1] += 0.5 * d;
    }
    return w;
}

double time_lp_norm(const std::vector<double>& node_values, const TimeGrid& tg, double p,
                    std::optional<double> origin_value) {
    if (node_values.size() != tg.size()) throw std::invalid_argument("node value count does not match time grid");
    if (std::isinf(p)) {
        double m = origin_value ? std::abs(*origin_value) : 0.0;
        for (double v : node_values) m = std::max(m, std::abs(v));
        return m;
    }
    const auto w = trapezoid_weights(tg, origin_value.has_value());
    double acc = 0.0;
    size_t k = 0;
    if (origin_value) acc += w[k++] * std::pow(std::abs(*origin_value), p);
    for (double v : node_values) acc += w[k++] * std::pow(std::abs(v), p);
    return std::pow(acc, 1.0 / p);
}

namespace {

struct SupResult {
    double value = 0.0;
    double argmax = 0.0;
};

SupResult node_sup(const TimeGrid& tg, const std::vector<double>& vals) {
    const auto it = std::max_element(vals.begin(), vals.end());
    return {*it, tg[static_cast<size_t>(it - vals.begin())]};
}

template <typename F>
std::vector<double> per_node(const Trajectory& tr, F f) {
    std::vector<double> out(tr.size());
    parallel_for(tr.size(), [&](size_t j) { out[j] = f(tr.tgrid[j], tr[j]); });
    return out;
}

struct Thm1U {
    SupResult l1, tlinf;
};
struct Thm2Parts {
    SupResult h1, linf_or_sigma;
    double grad_l2t_h1 = 0.0;
};

Thm1U thm1_u(const Trajectory& u) {
    return {node_sup(u.tgrid, per_node(u, [](double, const ScalarField& f) { return lp_norm(f, 1.0); })),
            node_sup(u.tgrid, per_node(u, [](double t, const ScalarField& f) { return t * lp_norm(f, INFINITY); }))};
}

SupResult thm1_w(const Trajectory& w) {
    return node_sup(w.tgrid, per_node(w, [](double t, const ScalarField& f) { return std::sqrt(t) * grad_linf(f); }));
}

double grad_l2t_h1(const Trajectory& tr) {
    const auto vals = per_node(tr, [](double, const ScalarField& f) { return grad_h1_norm(f); });
    std::optional<double> origin;
    if (tr.initial) origin = grad_h1_norm(*tr.initial);
    return time_lp_norm(vals, tr.tgrid, 2.0, origin);
}

Thm2Parts thm2_u(const Trajectory& u) {
    return {node_sup(u.tgrid, per_node(u, [](double, const ScalarField& f) { return hs_norm(f, 1.0); })),
            node_sup(u.tgrid, per_node(u, [](double, const ScalarField& f) { return lp_norm(f, INFINITY); })),
            grad_l2t_h1(u)};
}

Thm2Parts thm2_w(const Trajectory& w) {
    return {node_sup(w.tgrid, per_node(w, [](double, const ScalarField& f) { return hs_norm(f, 1.0); })),
            node_sup(w.tgrid, per_node(w, [](double t, const ScalarField& f) { return sigma(t) * grad_linf(f); })),
            grad_l2t_h1(w)};
}

}  // namespace

NormReport xy_norms_thm1(const Trajectory& u, const Trajectory& w) {
    require_compatible(u, w);
    const Thm1U a = thm1_u(u);
    const SupResult b = thm1_w(w);
    NormReport r;
    r.set("u_L1_sup", a.l1.value, "sup_t ||u(t)||_L1", a.l1.argmax);
    r.set("u_t_Linf_sup", a.tlinf.value, "sup_t t ||u(t)||_Linf", a.tlinf.argmax);
    r.set("w_sqrt_t_grad_Linf_sup", b.value, "sup_t t^(1/2) ||grad w(t)||_Linf", b.argmax);
    const double x = a.l1.value + a.tlinf.value;
    r.set("X", x, "sup_t ||u||_L1 + sup_t t ||u||_Linf");
    r.set("Y", b.value, "sup_t t^(1/2) ||grad w||_Linf");
    r.set("XY", x + b.value, "||u||_X + ||w||_Y");
    return r;
}

NormReport xy_norms_thm2(const Trajectory& u, const Trajectory& w) {
    require_compatible(u, w);
    const Thm2Parts a = thm2_u(u);
    const Thm2Parts b = thm2_w(w);
    NormReport r;
    r.set("u_H1_sup", a.h1.value, "sup_t ||u(t)||_H1", a.h1.argmax);
    r.set("u_grad_L2t_H1", a.grad_l2t_h1, "||grad u||_(L2_t H1)");
    r.set("u_Linf_Linf", a.linf_or_sigma.value, "||u||_(Linf_t Linf)", a.linf_or_sigma.argmax);
    r.set("w_H1_sup", b.h1.value, "sup_t ||w(t)||_H1", b.h1.argmax);
    r.set("w_grad_L2t_H1", b.grad_l2t_h1, "||grad w||_(L2_t H1)");
    r.set("w_sigma_grad_Linf_Linf", b.linf_or_sigma.value, "||sigma grad w||_(Linf_t Linf), sigma=t^(1/2)(1+t)^(-1/2)",
          b.linf_or_sigma.argmax);
    const double x = a.h1.value + a.grad_l2t_h1 + a.linf_or_sigma.value;
    const double y = b.h1.value + b.grad_l2t_h1 + b.linf_or_sigma.value;
    r.set("X", x, "sup_t ||u||_H1 + ||grad u||_(L2_t H1) + ||u||_(Linf_t Linf)");
    r.set("Y", y, "sup_t ||w||_H1 + ||grad w||_(L2_t H1) + ||sigma grad w||_(Linf_t Linf)");
    r.set("XY", x + y, "||u||_X + ||w||_Y");
    return r;
}

NormReport xy_norms(TheoremMode mode, const Trajectory& u, const Trajectory& w) {
    return mode == TheoremMode::thm1_L1Linf ? xy_norms_thm1(u, w) : xy_norms_thm2(u, w);
}

double x_norm(TheoremMode mode, const Trajectory& u) {
    if (mode == TheoremMode::thm1_L1Linf) {
        const Thm1U a = thm1_u(u);
        return a.l1.value + a.tlinf.value;
    }
    const Thm2Parts a = thm2_u(u);
    return a.h1.value + a.grad_l2t_h1 + a.linf_or_sigma.value;
}

double y_norm(TheoremMode mode, const Trajectory& w) {
    if (mode == TheoremMode::thm1_L1Linf) return thm1_w(w).value;
    const Thm2Parts b = thm2_w(w);
    return b.h1.value + b.grad_l2t_h1 + b.linf_or_sigma.value;
}

std::string to_string(TheoremMode m) { return m == TheoremMode::thm1_L1Linf ? "thm1_L1Linf" : "thm2_H1bH1"; }

TheoremMode theorem_mode_from_string(const std::string& s) {
    if (s == "thm1_L1Linf") return TheoremMode::thm1_L1Linf;
    if (s == "thm2_H1bH1") return TheoremMode::thm2_H1bH1;
    throw std::invalid_argument("unknown theorem mode: " + s);
}

}  // namespace ks
