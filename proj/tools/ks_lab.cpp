// ks_lab: batch driver for the Keller-Segel mild-solution lab.
//
//   ks_lab <solve|verify|compare|counterexample|constants|norms>
//          [--config FILE] [--override key=value]... [--out DIR]
//
// Exit status: 0 success, 1 scientific failure, 2 usage or config error.

#include "ks/cli.hpp"

#include <iostream>
#include <map>
#include <tuple>

#include "CLI11.hpp"

namespace {

struct Options {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "config file (key = value lines)");
    sub->add_option("--override", o.overrides, "key=value, repeatable")->take_all();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral mild-solution lab for 2D parabolic-parabolic Keller-Segel"};
    app.require_subcommand(1);
    Options opts;
    bool print_config = false;
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    using Runner = int (*)(const ks::ExperimentConfig&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Runner>> commands{
        {"solve", "Picard solve with norm tables and the theorem bound check", &ks::run_solve},
        {"verify", "inequality suite, constants and counterexample sweep", &ks::run_verify},
        {"compare", "Picard against the reference time stepper", &ks::run_compare},
        {"counterexample", "closed-form and grid profile of the stripe counterexample", &ks::run_counterexample},
        {"constants", "empirical constants c1, c2, c3 and the threshold", &ks::run_constants},
        {"norms", "recompute norm reports from u.ksf / v.ksf dumps", &ks::run_norms},
    };
    std::map<CLI::App*, Runner> runners;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, opts);
        runners[sub] = fn;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ks::exit_usage;
    }

    try {
        ks::ExperimentConfig cfg = opts.config.empty() ? ks::ExperimentConfig{} : ks::load_config(opts.config);
        for (const auto& o : opts.overrides) ks::apply_override(cfg, o);
        if (!opts.out.empty()) cfg.out_dir = opts.out;
        cfg.validate();
        if (print_config) {
            std::cout << ks::serialize_config(cfg);
            return ks::exit_ok;
        }
        for (const auto& [sub, fn] : runners)
            if (sub->parsed()) return fn(cfg, std::cerr);
    } catch (const ks::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ks::exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return ks::exit_usage;
    } catch (const ks::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return ks::exit_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ks::exit_usage;
    }
    return ks::exit_usage;
}
