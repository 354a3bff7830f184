// memheat: command-line front end for the experiments and the verification suites.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "memheat/errors.hpp"
#include "memheat/experiment.hpp"
#include "memheat/verify.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

struct ExperimentFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> modes;
    std::optional<std::uint64_t> seed;
};

void add_common_flags(CLI::App* sub, ExperimentFlags& flags) {
    sub->add_option("--config", flags.config, "JSON experiment config")->required();
    sub->add_option("--out", flags.out, "output directory (overrides output_dir)");
    sub->add_option("--steps", flags.steps, "time steps (overrides n_steps)");
    sub->add_option("--modes", flags.modes, "basis modes (overrides mode_count)");
    sub->add_option("--seed", flags.seed, "random seed for perturbation checks");
}

int run_experiment(const std::string& kind, const ExperimentFlags& flags) {
    using namespace memheat::experiment;
    Overrides o;
    if (flags.out) {
        o.output_dir = *flags.out;
    }
    o.n_steps = flags.steps;
    o.mode_count = flags.modes;
    o.seed = flags.seed;
    const auto config = load_config(flags.config, kind, o);
    const auto result = run(config);
    std::cout << kind << ": wrote " << result.manifest.size() + 1 << " files to " << config.output_dir.string()
              << "\n";
    for (const auto& [name, value] : result.metrics) {
        std::cout << "  " << name << " = " << format_number(value) << "\n";
    }
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    return exit_ok;
}

int run_verify(const std::string& suite, const std::string& out) {
    const auto report = memheat::verify::run_suite(suite);
    std::cout << report.table();
    const std::filesystem::path path = std::filesystem::path(out) / ("verify_" + suite + ".csv");
    memheat::experiment::write_atomic(path, report.csv());
    const bool ok = report.passed();
    std::cout << (ok ? "verify " + suite + ": all checks passed" : "verify " + suite + ": FAILED") << "\n";
    return ok ? exit_ok : exit_check_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heat equation with memory: resolvents, simulation, control and obstruction experiments"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 verify check failed, 2 invalid config or usage, 3 numerical failure.\n\n" +
               memheat::experiment::describe_defaults());

    ExperimentFlags flags;
    std::string kind;
    for (const auto& name : memheat::experiment::kinds) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        add_common_flags(sub, flags);
        sub->callback([&kind, name] { kind = name; });
    }
    std::string suite = "all";
    std::string verify_out = ".";
    auto* verify = app.add_subcommand("verify", "run invariant checks and print a pass/fail table");
    verify->add_option("suite", suite, "volterra | spectral | routes | control | obstruction | all")
        ->capture_default_str();
    verify->add_option("--out", verify_out, "directory for verify_<suite>.csv")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (verify->parsed()) {
            return run_verify(suite, verify_out);
        }
        return run_experiment(kind, flags);
    } catch (const memheat::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const memheat::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const memheat::PreconditionError& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
}
