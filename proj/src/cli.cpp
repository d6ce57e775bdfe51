#include "ks/cli.hpp"

#include "ks/semigroup.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace ks {

namespace fs = std::filesystem;

namespace {

// Shortest decimal text that parses back to the same double.
std::string number_text(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key + ": expected a finite number, got '" + v + "'");
    return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct KeySpec {
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

KeySpec real_key(double ExperimentConfig::*m) {
    return {[m](const ExperimentConfig& c) { return number_text(c.*m); },
            [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); }};
}

KeySpec int_key(int ExperimentConfig::*m) {
    return {[m](const ExperimentConfig& c) { return std::to_string(c.*m); },
            [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_int<int>(k, v); }};
}

KeySpec bool_key(bool ExperimentConfig::*m) {
    return {[m](const ExperimentConfig& c) { return std::string(c.*m ? "true" : "false"); },
            [m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); }};
}

KeySpec string_key(std::string ExperimentConfig::*m) {
    return {[m](const ExperimentConfig& c) { return c.*m; },
            [m](ExperimentConfig& c, const std::string&, const std::string& v) { c.*m = v; }};
}

// Number or "auto".
KeySpec auto_key(std::optional<double> ExperimentConfig::*m) {
    return {[m](const ExperimentConfig& c) { return (c.*m) ? number_text(*(c.*m)) : std::string("auto"); },
            [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "auto")
                    c.*m = std::nullopt;
                else
                    c.*m = parse_double(k, v);
            }};
}

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = [] {
        std::map<std::string, KeySpec> t;
        using C = ExperimentConfig;
        t["grid.n"] = int_key(&C::grid_n);
        t["grid.l"] = real_key(&C::grid_l);
        t["time.t_min"] = real_key(&C::t_min);
        t["time.t_max"] = real_key(&C::t_max);
        t["time.k"] = int_key(&C::k);
        t["time.spacing"] = {
            [](const C& c) { return std::string(c.spacing == Spacing::geometric ? "geometric" : "uniform"); },
            [](C& c, const std::string& k, const std::string& v) {
                if (v == "geometric")
                    c.spacing = Spacing::geometric;
                else if (v == "uniform")
                    c.spacing = Spacing::uniform;
                else
                    throw ConfigError(k + ": expected geometric or uniform, got '" + v + "'");
            }};
        t["picard.c"] = auto_key(&C::c);
        t["picard.max_iter"] = int_key(&C::max_iter);
        t["picard.tol"] = real_key(&C::tol);
        t["picard.mode"] = {[](const C& c) { return to_string(c.mode); },
                            [](C& c, const std::string& k, const std::string& v) {
                                try {
                                    c.mode = theorem_mode_from_string(v);
                                } catch (const std::invalid_argument&) {
                                    throw ConfigError(k + ": expected thm1_L1Linf or thm2_H1bH1, got '" + v + "'");
                                }
                            }};
        t["picard.eps0"] = auto_key(&C::eps0);
        t["quadrature.kind"] = {[](const C& c) { return to_string(c.quadrature); },
                                [](C& c, const std::string& k, const std::string& v) {
                                    try {
                                        c.quadrature = quadrature_kind_from_string(v);
                                    } catch (const std::invalid_argument& e) {
                                        throw ConfigError(k + ": " + e.what());
                                    }
                                }};
        t["quadrature.substeps"] = int_key(&C::substeps);
        t["reference.dt_max"] = real_key(&C::ref_dt_max);
        t["reference.steps_per_gap"] = int_key(&C::ref_steps_per_gap);
        t["data.kind"] = string_key(&C::data_kind);
        t["data.mass"] = real_key(&C::mass);
        t["data.width"] = real_key(&C::width);
        t["data.v_mass"] = real_key(&C::v_mass);
        t["data.amplitude"] = real_key(&C::amplitude);
        t["data.v_amplitude"] = real_key(&C::v_amplitude);
        t["data.j1"] = int_key(&C::j1);
        t["data.j2"] = int_key(&C::j2);
        t["data.path"] = string_key(&C::path);
        t["data.v_path"] = string_key(&C::v_path);
        t["output.dir"] = string_key(&C::out_dir);
        t["output.dump_fields"] = bool_key(&C::dump_fields);
        t["variant.remark_ii"] = bool_key(&C::remark_ii);
        t["compare.tol"] = real_key(&C::compare_tol);
        t["lab.n"] = int_key(&C::lab_n);
        t["lab.l"] = real_key(&C::lab_l);
        t["lab.k"] = int_key(&C::lab_k);
        t["lab.t_max"] = real_key(&C::lab_t);
        t["lab.seed"] = {[](const C& c) { return std::to_string(c.lab_seed); },
                         [](C& c, const std::string& k, const std::string& v) {
                             c.lab_seed = parse_int<std::uint64_t>(k, v);
                         }};
        t["counterexample.n"] = int_key(&C::cex_n);
        t["counterexample.l"] = real_key(&C::cex_l);
        return t;
    }();
    return table;
}

const KeySpec& lookup(const std::string& key) {
    const auto& t = key_table();
    const auto it = t.find(key);
    if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
}

bool grid_size_ok(int n) { return n >= 16 && (n & (n - 1)) == 0; }

// Values must survive a write/parse cycle of the config format.
bool text_ok(const std::string& v) {
    return v.find_first_of("#\n\r") == std::string::npos && v == trim(v);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    require(grid_size_ok(grid_n), "grid.n", "must be a power of two >= 16");
    require(grid_l > 0, "grid.l", "must be positive");
    require(t_min > 0, "time.t_min", "must be positive");
    require(t_max > t_min, "time.t_max", "must exceed time.t_min");
    require(k >= 2, "time.k", "must be >= 2");
    require(!c || *c > 0, "picard.c", "must be positive or auto");
    require(max_iter >= 1, "picard.max_iter", "must be >= 1");
    require(tol > 0, "picard.tol", "must be positive");
    require(!eps0 || *eps0 > 0, "picard.eps0", "must be positive or auto");
    require(substeps >= 1, "quadrature.substeps", "must be >= 1");
    require(ref_dt_max > 0, "reference.dt_max", "must be positive");
    require(ref_steps_per_gap >= 1, "reference.steps_per_gap", "must be >= 1");
    require(data_kind == "gaussian" || data_kind == "mode" || data_kind == "stripe" || data_kind == "file",
            "data.kind", "must be gaussian, mode, stripe or file");
    require(mass >= 0, "data.mass", "must be >= 0");
    require(v_mass >= 0, "data.v_mass", "must be >= 0");
    require(width > 0, "data.width", "must be positive");
    require(data_kind != "file" || !path.empty(), "data.path", "required for data.kind = file");
    require(!out_dir.empty(), "output.dir", "must not be empty");
    require(text_ok(path), "data.path", "must not contain '#', line breaks or outer spaces");
    require(text_ok(v_path), "data.v_path", "must not contain '#', line breaks or outer spaces");
    require(text_ok(out_dir), "output.dir", "must not contain '#', line breaks or outer spaces");
    require(compare_tol > 0, "compare.tol", "must be positive");
    require(grid_size_ok(lab_n), "lab.n", "must be a power of two >= 16");
    require(lab_l > 0, "lab.l", "must be positive");
    require(lab_k >= 2, "lab.k", "must be >= 2");
    require(lab_t > 0, "lab.t_max", "must be positive");
    require(grid_size_ok(cex_n), "counterexample.n", "must be a power of two >= 16");
    require(cex_l > 0, "counterexample.l", "must be positive");
}

Grid2D ExperimentConfig::grid() const { return make_grid(grid_n, grid_l); }

TimeGrid ExperimentConfig::tgrid() const {
    return spacing == Spacing::geometric ? TimeGrid::geometric(t_min, t_max, k) : TimeGrid::uniform(t_min, t_max, k);
}

LabScale ExperimentConfig::lab() const { return {lab_n, lab_l, lab_k, lab_t, lab_seed}; }

SolverConfig ExperimentConfig::solver(double c_value) const {
    SolverConfig s;
    s.grid = grid();
    s.tgrid = tgrid();
    s.c = c_value;
    s.max_iter = max_iter;
    s.tol = tol;
    s.mode = mode;
    s.quadrature = {quadrature, substeps};
    s.remark_ii = remark_ii;
    s.reference.dt_max = ref_dt_max;
    s.reference.steps_per_gap = ref_steps_per_gap;
    return s;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, spec] : key_table()) out.push_back(k);
    return out;
}

std::string config_value(const ExperimentConfig& cfg, const std::string& key) { return lookup(key).get(cfg); }

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    lookup(key).set(cfg, key, value);
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (seen.count(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                              std::to_string(seen[key]) + ")");
        seen[key] = lineno;
        set_config_value(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    for (const auto& [k, spec] : key_table()) os << k << " = " << spec.get(cfg) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

ScalarField load_field(const std::string& path, const Grid2D& g, const std::string& key) {
    Snapshot s;
    try {
        s = read_snapshot_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
    if (!(s.field.grid == g))
        throw ConfigError(key + ": field grid (n=" + std::to_string(s.field.grid.n) + ", l=" +
                          number_text(s.field.grid.l) + ") differs from the configured grid");
    return s.field;
}

}  // namespace

InitialData make_initial_data(const ExperimentConfig& cfg) {
    cfg.validate();
    const Grid2D g = cfg.grid();
    InitialData d{ScalarField(g), ScalarField(g), nlohmann::json::object()};
    d.metadata["kind"] = cfg.data_kind;
    if (cfg.data_kind == "gaussian") {
        if (cfg.mass > 0) d.u0 = gaussian(g, cfg.mass, cfg.width);
        if (cfg.v_mass > 0) d.v0 = gaussian(g, cfg.v_mass, cfg.width);
        d.metadata["mass"] = cfg.mass;
        d.metadata["v_mass"] = cfg.v_mass;
        d.metadata["width"] = cfg.width;
    } else if (cfg.data_kind == "mode") {
        const ScalarField m = cosine_mode(g, cfg.j1, cfg.j2);
        d.u0 = cfg.amplitude * m;
        d.v0 = cfg.v_amplitude * m;
        d.metadata["amplitude"] = cfg.amplitude;
        d.metadata["v_amplitude"] = cfg.v_amplitude;
        d.metadata["wavevector"] = {cfg.j1, cfg.j2};
    } else if (cfg.data_kind == "stripe") {
        if (cfg.mass > 0) d.u0 = gaussian(g, cfg.mass, cfg.width);
        d.v0 = cfg.amplitude * smoothed_stripe(g);
        d.metadata["mass"] = cfg.mass;
        d.metadata["width"] = cfg.width;
        d.metadata["amplitude"] = cfg.amplitude;
        d.metadata["smoothing_width"] = g.h();
    } else {
        d.u0 = load_field(cfg.path, g, "data.path");
        if (!cfg.v_path.empty()) d.v0 = load_field(cfg.v_path, g, "data.v_path");
        d.metadata["path"] = cfg.path;
        d.metadata["v_path"] = cfg.v_path;
    }
    d.metadata["u0_mass"] = d.u0.integral();
    return d;
}

// ---------------------------------------------------------------------------
// Output helpers

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void prepare_out(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("output.dir: cannot create '" + cfg.out_dir + "': " + ec.message());
}

void warn_domain(const ExperimentConfig& cfg, std::ostream& log) {
    if (std::sqrt(4.0 * cfg.t_max) > cfg.grid_l / 4.0)
        log << "warning: diffusion length sqrt(4 T) = " << std::sqrt(4.0 * cfg.t_max) << " exceeds l/4 = "
            << cfg.grid_l / 4.0 << "; periodic images may affect the whole-plane comparison\n";
}

struct NormRow {
    double t, u_l1, t_u_linf, sqrt_t_grad_v, sigma_grad_v, u_h1, v_h1;
};

NormRow norm_row(double t, const ScalarField& u, const ScalarField& v) {
    const double gv = grad_linf(v);
    return {t, lp_norm(u, 1.0), t * lp_norm(u, INFINITY), std::sqrt(t) * gv, sigma(t) * gv, hs_norm(u, 1.0),
            hs_norm(v, 1.0)};
}

void dump_trajectory(const std::string& path, const Trajectory& tr) {
    std::ofstream out = open_out(path);
    if (tr.initial) write_snapshot(out, *tr.initial, 0.0);
    for (size_t j = 0; j < tr.size(); ++j) write_snapshot(out, tr[j], tr.tgrid[j]);
}

Trajectory load_trajectory(const std::string& path) {
    std::vector<Snapshot> snaps;
    try {
        snaps = read_snapshot_sequence(path);
    } catch (const std::exception& e) {
        throw ConfigError("cannot read trajectory '" + path + "': " + e.what());
    }
    if (snaps.empty()) throw ConfigError("trajectory '" + path + "' is empty");
    std::optional<ScalarField> initial;
    std::vector<double> times;
    std::vector<ScalarField> fields;
    for (auto& s : snaps) {
        if (s.t == 0.0 && !initial && fields.empty())
            initial = s.field;
        else {
            times.push_back(s.t);
            fields.push_back(s.field);
        }
    }
    if (fields.empty()) throw ConfigError("trajectory '" + path + "' has no positive time nodes");
    const Grid2D g = fields.front().grid;
    return Trajectory(g, TimeGrid::from_nodes(times), std::move(fields), std::move(initial));
}

bool verdict_ok(const SolutionReport& r) {
    const auto& check = r.mode == TheoremMode::thm1_L1Linf ? r.thm1 : r.thm2;
    return r.converged && check && check->verdict == Verdict::holds;
}

}  // namespace

void write_norm_csv(std::ostream& os, const Trajectory& u, const Trajectory& v) {
    os << "t,u_L1,t_u_Linf,sqrt_t_grad_v_Linf,sigma_grad_v_Linf,u_H1,v_H1\r\n";
    std::vector<NormRow> rows;
    if (u.initial && v.initial) rows.push_back(norm_row(0.0, *u.initial, *v.initial));
    for (size_t j = 0; j < u.size(); ++j) rows.push_back(norm_row(u.tgrid[j], u[j], v[j]));
    for (const auto& r : rows)
        os << number_text(r.t) << ',' << number_text(r.u_l1) << ',' << number_text(r.t_u_linf) << ','
           << number_text(r.sqrt_t_grad_v) << ',' << number_text(r.sigma_grad_v) << ',' << number_text(r.u_h1)
           << ',' << number_text(r.v_h1) << "\r\n";
}

double resolve_c(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.c) return *cfg.c;
    const ConstantsReport rep = estimate_constants(ConstantsSettings{});
    log << "picard.c = auto: estimated c = " << rep.c << " (c1 = " << rep.c1 << ", c2 = " << rep.c2
        << ", c3 = " << rep.c3 << ", safety " << rep.safety << ")\n";
    return rep.c;
}

// ---------------------------------------------------------------------------
// Subcommands

int run_solve(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    prepare_out(cfg);
    warn_domain(cfg, log);
    const InitialData data = make_initial_data(cfg);
    const double c = resolve_c(cfg, log);
    const SolverConfig scfg = cfg.solver(c);
    SolutionReport r = picard_solve(data.u0, rescale_chemical(data.v0, c), scfg);
    if (cfg.mode == TheoremMode::thm2_H1bH1 && cfg.eps0) r.thm2 = check_theorem2_bound(r, cfg.eps0);

    nlohmann::json j = r;
    j["config"] = serialize_config(cfg);
    j["initial_data"] = data.metadata;
    write_json_file(out_path(cfg, "report.json"), j);
    {
        std::ofstream csv = open_out(out_path(cfg, "norms.csv"));
        write_norm_csv(csv, r.u, r.v);
    }
    if (cfg.dump_fields) {
        dump_trajectory(out_path(cfg, "u.ksf"), r.u);
        dump_trajectory(out_path(cfg, "v.ksf"), r.v);
    }

    log << "A0 = " << r.threshold.A0 << ", threshold 3/(32c^2) = " << r.threshold.threshold
        << (r.threshold.satisfied ? "" : "  THRESHOLD VIOLATED") << "\n";
    log << "Picard: " << (r.converged ? "converged" : "did not converge") << " after " << r.iterations
        << " iterations\n";
    const auto& check = cfg.mode == TheoremMode::thm1_L1Linf ? r.thm1 : r.thm2;
    if (check)
        log << "bound check (" << to_string(cfg.mode) << "): " << to_string(check->verdict) << ", lhs "
            << check->lhs << " vs " << check->rhs << "\n";
    return verdict_ok(r) ? exit_ok : exit_failure;
}

int run_verify(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    prepare_out(cfg);
    const LabScale base = cfg.lab();
    std::vector<std::string> failures;
    nlohmann::json out = nlohmann::json::object();
    out["lab_scale"] = {{"n", base.n}, {"l", base.l}, {"K", base.K}, {"T", base.T}, {"seed", base.seed}};

    using Check = LemmaReport (*)(const LabScale&);
    for (Check fn : {&verify_multiplier_lemma, &verify_bilinear_lemma23, &verify_maximal_regularity}) {
        const LemmaReport a = fn(base);
        const LemmaReport b = fn(base.doubled());
        const DriftReport d = ratio_drift(a, b);
        log << a.name << ": " << (a.passed() && b.passed() ? "bounds ok" : "BOUND FAILURE") << ", max ratio "
            << a.max_ratio() << ", drift " << d.max_drift << (d.passed() ? "" : "  DRIFT FAILURE") << "\n";
        failures.insert(failures.end(), a.failures.begin(), a.failures.end());
        for (const auto& f : b.failures) failures.push_back(f + " (doubled scale)");
        if (!d.passed()) {
            for (const auto& [group, v] : d.drift)
                if (!(v < d.tolerance)) failures.push_back(a.name + ": drift " + number_text(v) + " in " + group);
        }
        out["lemmas"][a.name] = {{"base", a}, {"doubled", b}, {"drift", d}};
        std::ofstream csv = open_out(out_path(cfg, a.name + ".csv"));
        write_csv(csv, a.rows);
    }

    ConstantsReport constants = estimate_constants(ConstantsSettings{});
    if (cfg.c) constants = force_constant(constants, *cfg.c);
    log << "constants: c = " << constants.c << ", threshold " << constants.threshold << "\n";
    for (const auto& n : constants.notices) log << "  " << n << "\n";
    if (!constants.consistent)
        failures.push_back("constants: c = " + number_text(constants.c) +
                           " is below the observed ratio maximum " + number_text(constants.raw_max) +
                           "; threshold check inconsistent");
    write_json_file(out_path(cfg, "constants.json"), constants);
    {
        std::ofstream csv = open_out(out_path(cfg, "constants.csv"));
        write_csv(csv, constants);
    }
    out["constants"] = constants;

    const CounterexampleReport cex =
        counterexample_profile(counterexample_sweep(), make_grid(cfg.cex_n, cfg.cex_l));
    log << "counterexample: " << cex.verdict << ", c0 = " << std::setprecision(6) << cex.c0
        << std::setprecision(6) << ", grid error " << cex.max_grid_rel_error << "\n";
    if (cex.verdict != "holds") failures.push_back("counterexample: verdict " + cex.verdict);
    out["counterexample"] = cex;

    out["failures"] = failures;
    out["passed"] = failures.empty();
    write_json_file(out_path(cfg, "verify.json"), out);
    for (const auto& f : failures) log << "FAILED " << f << "\n";
    return failures.empty() ? exit_ok : exit_failure;
}

int run_compare(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    prepare_out(cfg);
    warn_domain(cfg, log);
    const InitialData data = make_initial_data(cfg);
    const double c = resolve_c(cfg, log);
    const SolverConfig scfg = cfg.solver(c);
    SolutionReport r;
    std::pair<Trajectory, Trajectory> ref;
    try {
        r = picard_solve(data.u0, rescale_chemical(data.v0, c), scfg);
        ref = reference_solve(data.u0, data.v0, scfg);
    } catch (const NumericalError& e) {
        log << "solver diverged: " << e.what() << "\n";
        return exit_failure;
    }
    const auto du = relative_differences(r.u, ref.first);
    const auto dv = relative_differences(r.v, ref.second);
    {
        std::ofstream csv = open_out(out_path(cfg, "compare.csv"));
        csv << "t,rel_diff_u,rel_diff_v\r\n";
        for (size_t j = 0; j < du.size(); ++j)
            csv << number_text(r.u.tgrid[j]) << ',' << number_text(du[j]) << ',' << number_text(dv[j]) << "\r\n";
    }
    const double max_u = *std::max_element(du.begin(), du.end());
    const double max_v = *std::max_element(dv.begin(), dv.end());
    const double worst = std::max(max_u, max_v);
    const bool ok = r.converged && worst <= cfg.compare_tol;
    nlohmann::json j = {{"picard_converged", r.converged},
                        {"picard_iterations", r.iterations},
                        {"max_rel_diff_u", max_u},
                        {"max_rel_diff_v", max_v},
                        {"tolerance", cfg.compare_tol},
                        {"passed", ok},
                        {"config", serialize_config(cfg)}};
    write_json_file(out_path(cfg, "compare.json"), j);
    log << "max relative difference: u " << max_u << ", v " << max_v << " (tolerance " << cfg.compare_tol
        << ")\n";
    if (!r.converged) log << "Picard iteration did not converge\n";
    if (r.converged && !ok)
        log << "hint: the Duhamel quadrature is too coarse; refine the time grid (time.k = " << cfg.k
            << ", try " << 4 * cfg.k << ")\n";
    return ok ? exit_ok : exit_failure;
}

int run_counterexample(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    prepare_out(cfg);
    const CounterexampleReport rep =
        counterexample_profile(counterexample_sweep(), make_grid(cfg.cex_n, cfg.cex_l));
    write_json_file(out_path(cfg, "counterexample.json"), rep);
    {
        std::ofstream csv = open_out(out_path(cfg, "counterexample.csv"));
        csv << "t,x1,closed_form,grid_value\r\n";
        for (const auto& p : rep.points)
            csv << number_text(p.t) << ',' << number_text(p.x1) << ',' << number_text(p.closed_form) << ','
                << (p.grid_value ? number_text(*p.grid_value) : "") << "\r\n";
    }
    log << "c0 = " << std::setprecision(9) << rep.c0 << std::setprecision(6) << "\n";
    log << "verdict: " << rep.verdict << ", max grid relative error " << rep.max_grid_rel_error << "\n";
    return rep.verdict == "holds" ? exit_ok : exit_failure;
}

int run_constants(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    prepare_out(cfg);
    ConstantsReport rep = estimate_constants(ConstantsSettings{});
    if (cfg.c) rep = force_constant(rep, *cfg.c);
    write_json_file(out_path(cfg, "constants.json"), rep);
    {
        std::ofstream csv = open_out(out_path(cfg, "constants.csv"));
        write_csv(csv, rep);
    }
    log << "c1 = " << rep.c1 << ", c2 = " << rep.c2 << ", c3 = " << rep.c3 << "\n";
    log << "c = " << rep.c << ", threshold 3/(32c^2) = " << rep.threshold << "\n";
    for (const auto& n : rep.notices) log << n << "\n";
    return rep.consistent ? exit_ok : exit_failure;
}

int run_norms(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const std::string report_path = out_path(cfg, "report.json");
    double c = 0.0;
    if (cfg.c) {
        c = *cfg.c;
    } else {
        std::ifstream in(report_path);
        if (!in) throw ConfigError("picard.c = auto needs " + report_path + " to recover c");
        c = nlohmann::json::parse(in).at("c").get<double>();
    }
    const Trajectory u = load_trajectory(out_path(cfg, "u.ksf"));
    const Trajectory v = load_trajectory(out_path(cfg, "v.ksf"));
    if (!(u.grid == v.grid) || u.tgrid.times() != v.tgrid.times())
        throw ConfigError("u.ksf and v.ksf do not share grids");
    const Trajectory w = (1.0 / (4.0 * c)) * v;
    nlohmann::json j = {{"c", c},
                        {"norms", {{"thm1_L1Linf", xy_norms_thm1(u, w)}, {"thm2_H1bH1", xy_norms_thm2(u, w)}}},
                        {"time_nodes", u.tgrid.times()}};
    write_json_file(out_path(cfg, "norms_recomputed.json"), j);
    {
        std::ofstream csv = open_out(out_path(cfg, "norms_recomputed.csv"));
        write_norm_csv(csv, u, v);
    }
    const double xy1 = xy_norms_thm1(u, w)["XY"], xy2 = xy_norms_thm2(u, w)["XY"];
    log << "XY norm: thm1_L1Linf " << xy1 << ", thm2_H1bH1 " << xy2 << "\n";
    return std::isfinite(xy1) && std::isfinite(xy2) ? exit_ok : exit_failure;
}

}  // namespace ks
