#pragma once

// Batch driver: experiment configuration, the initial-data library and the
// subcommands behind the ks_lab executable.
//
// Config files are "key = value" lines; '#' starts a comment. Every key has a
// default, unknown keys are rejected, and serialize() writes every key in
// sorted order so that parse(serialize(c)) == c.

#include "ks/duhamel.hpp"
#include "ks/field.hpp"
#include "ks/inequality_lab.hpp"
#include "ks/norms.hpp"
#include "ks/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ks {

/// Bad configuration or usage; maps to exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

struct ExperimentConfig {
    // grid.*
    int grid_n = 128;
    double grid_l = 32.0;
    // time.*
    double t_min = 1e-3;
    double t_max = 10.0;
    int k = 64;
    Spacing spacing = Spacing::geometric;
    // picard.*
    std::optional<double> c;  // empty means "auto"
    int max_iter = 60;
    double tol = 1e-12;
    TheoremMode mode = TheoremMode::thm1_L1Linf;
    std::optional<double> eps0;  // theorem-2 smallness level, empty means "auto"
    // quadrature.*
    QuadratureKind quadrature = QuadratureKind::etd_heat_frame_linear;
    int substeps = 1;
    // reference.*
    double ref_dt_max = 0.05;
    int ref_steps_per_gap = 4;
    // data.*
    std::string data_kind = "gaussian";  // gaussian, mode, stripe, file
    double mass = 1e-3;
    double width = 0.5;
    double v_mass = 0.0;
    double amplitude = 1e-3;
    double v_amplitude = 0.0;
    int j1 = 1, j2 = 0;
    std::string path, v_path;
    // output.*
    std::string out_dir = "out";
    bool dump_fields = false;
    // variant.*
    bool remark_ii = false;
    // compare.*
    double compare_tol = 1e-4;
    // lab.*
    int lab_n = 64;
    double lab_l = 16.0;
    int lab_k = 32;
    double lab_t = 16.0;
    std::uint64_t lab_seed = 20240917;
    // counterexample.*
    int cex_n = 512;
    double cex_l = 16.0;

    bool operator==(const ExperimentConfig&) const = default;

    /// Range checks; throws ConfigError naming the key.
    void validate() const;
    Grid2D grid() const;
    TimeGrid tgrid() const;
    LabScale lab() const;
    /// Solver settings with the given c.
    SolverConfig solver(double c_value) const;
};

std::vector<std::string> config_keys();
/// Parses config text (throws ConfigError on syntax, unknown keys and ranges).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies one "key=value" override.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_value(const ExperimentConfig& cfg, const std::string& key);
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct InitialData {
    ScalarField u0, v0;
    nlohmann::json metadata;
};

/// Resolves the data.* keys on the config grid.
InitialData make_initial_data(const ExperimentConfig& cfg);

/// Value of c: the configured number, or the lab estimate for "auto".
double resolve_c(const ExperimentConfig& cfg, std::ostream& log);

/// Norm table rows: t, u_L1, t_u_Linf, sqrt_t_grad_v_Linf, sigma_grad_v_Linf,
/// u_H1, v_H1. The first row is t = 0 when the trajectories carry initial data.
void write_norm_csv(std::ostream& os, const Trajectory& u, const Trajectory& v);

// Subcommands. Each writes its artifacts under cfg.out_dir, logs to `log`
// and returns the exit status.
int run_solve(const ExperimentConfig& cfg, std::ostream& log);
int run_verify(const ExperimentConfig& cfg, std::ostream& log);
int run_compare(const ExperimentConfig& cfg, std::ostream& log);
int run_counterexample(const ExperimentConfig& cfg, std::ostream& log);
int run_constants(const ExperimentConfig& cfg, std::ostream& log);
/// Recomputes the norm reports from u.ksf / v.ksf dumps in cfg.out_dir.
int run_norms(const ExperimentConfig& cfg, std::ostream& log);

/// Writes JSON with sorted keys and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace ks
