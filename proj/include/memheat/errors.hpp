#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memheat {

/// Invalid input or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure inside a numerical routine. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A routine was called on data that violates its documented precondition.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// 1 + (h/2) K(t_k, t_k) vanished while stepping a second-kind Volterra equation.
class SingularStepError : public NumericalError {
public:
    explicit SingularStepError(std::size_t node)
        : NumericalError("singular Volterra step at node " + std::to_string(node)),
          node_(node) {}

    [[nodiscard]] std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// A division by a coefficient that is numerically zero was requested.
class DivisionGuardError : public NumericalError {
public:
    DivisionGuardError(std::size_t mode, double value)
        : NumericalError("coefficient of mode " + std::to_string(mode) +
                         " is numerically zero (" + std::to_string(value) + ")"),
          mode_(mode) {}

    /// One-based mode index.
    [[nodiscard]] std::size_t mode() const noexcept { return mode_; }

private:
    std::size_t mode_;
};

}  // namespace memheat
