#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memheat/control.hpp"
#include "memheat/spectral.hpp"

namespace memheat::experiment {

/// Experiment kinds, in subcommand spelling.
inline const std::vector<std::string> kinds = {"resolvent", "simulate", "control", "obstruct",
                                               "audit"};

struct ForcingConfig {
    simulator::ControlKind kind = simulator::ControlKind::distributed;
    /// One-based modes m; distributed shapes are χ_ω φ_m. Boundary runs use one constant shape.
    std::vector<std::size_t> shape_modes{1};
    /// Time profile as a kernel expression ("constant 1", "exp -2", ...).
    std::string profile = "constant 1";
    /// Switch the profile off on the trailing window.
    bool off_on_window = true;
};

struct SimulateConfig {
    std::string route = "all";  ///< direct | maccamy | closedform | all
    std::vector<double> xi;     ///< empty means harmonic 1/n
    std::optional<ForcingConfig> forcing;
};

struct ControlConfig {
    simulator::ControlKind kind = simulator::ControlKind::distributed;
    std::vector<std::size_t> mode_counts{5, 10, 20, 40};
    std::vector<double> target;  ///< empty means harmonic 1/n over the basis
    std::string route = "maccamy";
    double window = 0.0;         ///< boundary runs default to the trailing window
    int perturbation_checks = 3;
};

struct ObstructConfig {
    std::vector<double> center;
    double radius = 0.3;
    std::vector<std::size_t> mode_counts{5, 10, 20, 30, 40};
    std::size_t fit_modes = 1024;
    std::size_t reference_n = 10;
    std::size_t threshold_max_n = 50;
    double r_zero_tol = 1e-6;
    std::size_t audit_first = 1;
    std::size_t audit_last = 50;
};

struct AuditConfig {
    std::size_t first = 1;
    std::size_t last = 50;
};

struct ExperimentConfig {
    std::string experiment;
    std::filesystem::path base_dir;  ///< relative paths resolve against this
    spectral::Domain domain = spectral::Domain::interval(3.14159265358979323846);
    std::string kernel = "exp -1";
    std::optional<double> a;  ///< defaults to -M(0)
    double horizon = 1.0;
    std::size_t n_steps = 1000;
    std::size_t mode_count = 10;
    std::size_t mode_cap = 4096;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    std::size_t j_truncation = 40;
    double trailing_window = 0.1;  ///< fraction of T
    control::MinNormOptions min_norm;
    std::size_t decay_fit_blocks = 4;

    SimulateConfig simulate;
    ControlConfig control;
    ObstructConfig obstruct;
    AuditConfig audit;
};

/// Command-line overrides applied after parsing.
struct Overrides {
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::size_t> n_steps;
    std::optional<std::size_t> mode_count;
    std::optional<std::uint64_t> seed;
};

/// Number or a multiple of π written as text ("pi", "pi/2", "3*pi/4", "2pi").
[[nodiscard]] double parse_scalar(const nlohmann::json& value, const std::string& field);

/// Validates every field; errors name the offending field. `kind` must match the
/// "experiment" entry when that entry is present.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& kind,
                                            const std::filesystem::path& base_dir);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path, const std::string& kind,
                                           const Overrides& overrides = {});
void apply(ExperimentConfig& config, const Overrides& overrides);

/// Defaults, one "key: value" line each, for help output.
[[nodiscard]] std::string describe_defaults();

struct ExperimentResult {
    std::string experiment;
    std::map<std::string, double> metrics;
    std::vector<std::string> manifest;
    double wall_time = 0.0;
    std::vector<std::string> warnings;
};

/// Runs the configured experiment, writes its files and result.json into the output directory.
ExperimentResult run(const ExperimentConfig& config);

/// 17 significant digits, "nan" and "inf" spelled out.
[[nodiscard]] std::string format_number(double value);

/// Header plus rows, comma-separated.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add(const std::vector<double>& row);
    [[nodiscard]] std::string str() const;

private:
    std::size_t columns_;
    std::string text_;
};

/// Writes to a temporary file in the same directory and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace memheat::experiment
