#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memheat/control.hpp"
#include "memheat/simulator.hpp"
#include "memheat/spectral.hpp"

namespace memheat::obstruction {

/// β_n = (e*R)(T) + (H_n*e)(T) - (R*(H_n*e))(T) with e = e^{-λ_n² t}; n is zero-based.
[[nodiscard]] double bracket(const simulator::MemorySystem& system, double horizon, std::size_t n);

/// Full coefficient of ξ_n in the zero-control equation: β_n - e^{-λ_n² T}.
[[nodiscard]] double xi_coefficient(const simulator::MemorySystem& system, double horizon,
                                    std::size_t n);

/// Right side the control must produce at T to bring θ_n from ξ_n to zero:
/// -e^{-λ_n² T} ξ_n + β_n ξ_n.
[[nodiscard]] double zero_control_rhs(const simulator::MemorySystem& system, double xi,
                                      double horizon, std::size_t n);

struct ZeroControlProblem {
    double horizon = 1.0;
    double r_at_t = 0.0;
    std::vector<double> beta;         ///< β_n, n = 1..max_n
    std::vector<double> scaled_beta;  ///< β_n λ_n²
    double plateau = 0.0;             ///< median of |β_n λ_n²| over the top decade
    std::optional<std::size_t> threshold;  ///< one-based N
    std::string outcome;
};

/// Smallest N with |β_n λ_n²| ≥ plateau / 2 for every n in [N, max_n]. Degenerate cases
/// ("memoryless degenerate", "R(T)=0", "no threshold") are reported in `outcome`. R(T) counts
/// as zero when |R(T)| ≤ r_zero_tol · sup|R|; the default sits above the O(h²) kernel error.
[[nodiscard]] ZeroControlProblem find_threshold_N(const simulator::MemorySystem& system,
                                                  double horizon, std::size_t max_n,
                                                  double r_zero_tol = 1e-6);

/// ξ_n = (c_n / λ_n²) / xi_coefficient(n) for one-based n ≥ N, zero below. Throws
/// DivisionGuardError when a coefficient is below 1e-14 in magnitude.
[[nodiscard]] std::vector<double> solve_xi_for_coefficients(const simulator::MemorySystem& system,
                                                            double horizon,
                                                            std::span<const double> c,
                                                            std::size_t threshold);

/// Centered quadratic B-spline on [x₀ - δ, x₀ + δ] (knots x₀ ± δ, x₀ ± δ/3) with peak δ²:
/// C¹ with a piecewise-constant second derivative.
[[nodiscard]] double bump(double x, double center, double radius);

struct RoughTarget {
    std::vector<double> center;
    double radius = 0.0;
    std::vector<double> eta;  ///< projection coefficients η_n
    std::vector<double> d;    ///< d_n = λ_n² η_n
    std::optional<spectral::DecayFit> fit;
};

/// Product of bumps, one per axis, projected on the basis with quadrature split at the knots.
/// The support must lie inside ω̃. The decay fit is attached when the basis has ≥ 16 modes.
[[nodiscard]] RoughTarget build_rough_target(const spectral::SpectralBasis& basis,
                                             std::vector<double> center, double radius);

struct CostRow {
    std::size_t n = 0;
    double cost_rough = 0.0;
    double cost_smooth = 0.0;
    double gramian_cond = 0.0;
    bool regularized = false;
};

struct BlowupOptions {
    std::size_t reference_n = 10;
    control::MinNormOptions min_norm;
};

struct BlowupResult {
    std::vector<CostRow> rows;
    double blowup_ratio = 0.0;  ///< cost_rough(last N) / cost_rough(reference N)
    double smooth_ratio = 0.0;
};

/// Min-norm memoryless distributed cost of reaching the moments η_n (n ≤ N) with the actuator
/// confined to ω, next to the smooth reference with moments e^{-λ_n²} sign(η_n).
[[nodiscard]] BlowupResult blowup_experiment(const spectral::SpectralBasis& basis, double horizon,
                                             const RoughTarget& rough,
                                             std::span<const std::size_t> mode_counts,
                                             const BlowupOptions& options = {});

struct AuditRow {
    std::size_t n = 0;
    double lam2_sup_h = 0.0;
    double lam4_iterated = 0.0;
};

struct AuditReport {
    std::vector<AuditRow> rows;
    double sup_ratio = 0.0;       ///< max / min of λ_n² sup|H_n|
    double iterated_ratio = 0.0;  ///< max / min of λ_n⁴ |iterated integral|
    double m_t = 0.0;             ///< max of λ_n² sup|H_n| over n ≤ 10
    double m_t_iterated = 0.0;    ///< same for the iterated integral
    bool within_bounds = true;    ///< both sequences stay below 2 M_T over the range
};

/// λ_n² sup_{[0,T]} |H_n| and λ_n⁴ |∫_0^T H_n(T - τ)(e^{-λ_n²τ} - ∫_0^τ e^{-λ_n²(τ-s)} R(s) ds) dτ|
/// for one-based n in [first, last].
[[nodiscard]] AuditReport hn_bound_audit(const simulator::MemorySystem& system, double horizon,
                                         std::size_t first, std::size_t last);

}  // namespace memheat::obstruction
