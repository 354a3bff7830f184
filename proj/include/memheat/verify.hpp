#pragma once

#include <string>
#include <vector>

namespace memheat::verify {

/// Suite names accepted by run_suite; "all" runs the others in this order.
inline const std::vector<std::string> suites = {"volterra", "spectral", "routes", "control",
                                                "obstruction", "all"};

struct Check {
    std::string suite;
    std::string name;
    double value = 0.0;
    /// "<=" or ">=" against `bound`; "in" tests value ∈ [bound, upper].
    std::string relation;
    double bound = 0.0;
    double upper = 0.0;
    bool pass = false;
};

struct Report {
    std::vector<Check> checks;

    [[nodiscard]] bool passed() const;
    /// Fixed-width table for the terminal.
    [[nodiscard]] std::string table() const;
    /// suite,check,value,relation,bound,upper,pass with 17 significant digits; no timings.
    [[nodiscard]] std::string csv() const;
};

/// Throws ConfigError for an unknown suite name.
[[nodiscard]] Report run_suite(const std::string& name);

}  // namespace memheat::verify
