#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace memheat::volterra {

/// Uniform grid t_k = k * step on [0, t_final], k = 0..n_steps.
class TimeGrid {
public:
    TimeGrid(double t_final, std::size_t n_steps);

    [[nodiscard]] double t_final() const noexcept { return t_final_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] double step() const noexcept { return t_final_ / static_cast<double>(n_steps_); }
    /// Number of nodes, n_steps + 1.
    [[nodiscard]] std::size_t size() const noexcept { return n_steps_ + 1; }
    [[nodiscard]] double node(std::size_t k) const noexcept {
        return static_cast<double>(k) * step();
    }
    [[nodiscard]] std::vector<double> nodes() const;
    /// Index of the node closest to t; throws ConfigError when t is not a grid node.
    [[nodiscard]] std::size_t index_of(double t) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double t_final_;
    std::size_t n_steps_;
};

/// Scalar kernel sampled on a TimeGrid (memory M, resolvent R, L, Z_n, H_n).
struct Kernel {
    Kernel(TimeGrid grid, std::vector<double> values, std::string label = {},
           std::optional<std::vector<double>> derivative_values = std::nullopt);

    TimeGrid grid;
    std::vector<double> values;
    std::optional<std::vector<double>> derivative_values;
    std::string label;

    [[nodiscard]] double at(std::size_t k) const { return values[k]; }
    [[nodiscard]] bool has_derivative() const noexcept { return derivative_values.has_value(); }
};

/// Closed-form kernel selectable by name:
///   "zero", "constant c", "exp a" (e^{a t}), "poly c0 c1 c2", "table <csv-path>".
class KernelSpec {
public:
    enum class Kind { zero, constant, exponential, polynomial, table };

    static KernelSpec parse(std::string_view text);
    static KernelSpec zero() { return KernelSpec(Kind::zero, {}, {}); }
    static KernelSpec constant(double c) { return KernelSpec(Kind::constant, {c}, {}); }
    static KernelSpec exponential(double rate) { return KernelSpec(Kind::exponential, {rate}, {}); }
    static KernelSpec polynomial(double c0, double c1, double c2) {
        return KernelSpec(Kind::polynomial, {c0, c1, c2}, {});
    }
    static KernelSpec table(std::string path) { return KernelSpec(Kind::table, {}, std::move(path)); }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::string label() const;
    /// True when value() and derivative() are available pointwise.
    [[nodiscard]] bool analytic() const noexcept { return kind_ != Kind::table; }
    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;

    /// Samples on the grid. Analytic kernels carry their derivative; tables must list
    /// exactly the grid nodes (no interpolation is performed).
    [[nodiscard]] Kernel sample(const TimeGrid& grid) const;

private:
    KernelSpec(Kind kind, std::vector<double> params, std::string path)
        : kind_(kind), params_(std::move(params)), path_(std::move(path)) {}

    Kind kind_;
    std::vector<double> params_;
    std::string path_;
};

/// Two-variable kernel K(t_i, s_j), stored for s_j <= t_i only.
class TwoVarKernel {
public:
    TwoVarKernel(TimeGrid grid, std::size_t truncation_order = 1);

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t truncation_order() const noexcept { return truncation_order_; }

    /// Entry (i, j) with j <= i.
    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values_[offset(i) + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[offset(i) + j]; }
    /// Row i, entries j = 0..i.
    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {values_.data() + offset(i), i + 1};
    }
    std::span<double> row(std::size_t i) { return {values_.data() + offset(i), i + 1}; }

    // Filled in by j_kernel.
    std::size_t terms_used = 0;
    bool converged = true;

private:
    static std::size_t offset(std::size_t i) noexcept { return i * (i + 1) / 2; }

    TimeGrid grid_;
    std::size_t truncation_order_;
    std::vector<double> values_;
};

/// Trapezoidal discrete convolution (a*b)(t_k) = ∫_0^{t_k} a(t_k - s) b(s) ds.
[[nodiscard]] std::vector<double> convolve(std::span<const double> a, std::span<const double> b,
                                           double step);

/// Trapezoidal value of ∫_0^{t_k} a(t_k - s) b(s) ds at a single node k.
[[nodiscard]] double convolve_at(std::span<const double> a, std::span<const double> b,
                                 double step, std::size_t k);

/// Product-integration weights for ∫_0^h e^{-rate (h - σ)} p(σ) dσ with p linear
/// between p(0) (weight `left`) and p(h) (weight `right`).
struct ExpWeights {
    double left;
    double right;
    double decay;  ///< e^{-rate h}
};
[[nodiscard]] ExpWeights exp_weights(double rate, double step);

/// ∫_0^{t_k} e^{-rate (t_k - s)} f(s) ds with f piecewise linear and the exponential
/// integrated exactly.
[[nodiscard]] std::vector<double> exp_convolve(std::span<const double> f, double rate,
                                               double step);

/// Solves y(t) + ∫_0^t k(t - s) y(s) ds = g(t) by product trapezoidal stepping.
[[nodiscard]] std::vector<double> solve_second_kind(const Kernel& kernel,
                                                    std::span<const double> forcing);

/// Solves y(t) + ∫_0^t K(t, s) y(s) ds = g(t) by product trapezoidal stepping.
[[nodiscard]] std::vector<double> solve_second_kind(const TwoVarKernel& kernel,
                                                    std::span<const double> forcing);

/// Resolvent R of M: R(t) = M(t) - ∫_0^t M(t - s) R(s) ds. When M carries its derivative
/// the returned kernel carries R' = M' - M(0) R - M' * R.
[[nodiscard]] Kernel resolvent(const Kernel& m);

/// L(t) = R'(t) + M(0) R(t). Uses r's derivative when present, otherwise centered
/// differences (one-sided at the ends).
[[nodiscard]] Kernel l_kernel(const Kernel& m, const Kernel& r);

/// J(t, s) = -Σ_{k>=1} L^{*k}(t - s) s^k / k!, the n-independent kernel with
/// ∫_0^t J(t, τ) e^{-λ² τ} dτ = ∫_0^t H_n(t - τ) e^{-λ² τ} dτ.
/// The series stops once (T^k max|L|^k / k!)(T^k / k!) < tolerance or after
/// truncation_order terms; in the latter case `converged` is false.
[[nodiscard]] TwoVarKernel j_kernel(const Kernel& l, std::size_t truncation_order = 40,
                                    double tolerance = 1e-12);

/// Z_n(t) = -∫_0^t L(t - s) e^{-λ² s} ds by product quadrature.
[[nodiscard]] Kernel zn_kernel(const Kernel& l, double lambda_sq);

/// Reads a "t,value" CSV (optional header) into column vectors.
struct TableColumns {
    std::vector<double> t;
    std::vector<double> value;
};
[[nodiscard]] TableColumns read_table(const std::string& path);

}  // namespace memheat::volterra
