#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "memheat/simulator.hpp"
#include "memheat/spectral.hpp"
#include "memheat/volterra.hpp"

namespace memheat::control {

using simulator::ControlKind;
using simulator::ControlSignal;

/// Finite moment problem for the memoryless heat equation started from zero:
/// θ_n(T) = sign · Σ_m B_nm ∫_0^T e^{-λ_n²(T - r)} v_m(r) dr = η_n, n < N,
/// with sign = +1 for distributed and -1 for boundary actuation.
struct MomentSystem {
    ControlKind kind = ControlKind::distributed;
    double horizon = 1.0;
    /// Profiles vanish on (T - window, T].
    double window = 0.0;
    std::vector<double> lambda_sq;
    Eigen::MatrixXd b;
    std::vector<std::vector<double>> shapes;
    std::vector<double> target;

    [[nodiscard]] std::size_t modes() const noexcept { return lambda_sq.size(); }
    [[nodiscard]] double sign() const noexcept { return kind == ControlKind::boundary ? -1.0 : 1.0; }
    /// W_nk = Σ_m B_nm B_km ∫_0^{T-window} e^{-(λ_n² + λ_k²)(T - r)} dr.
    [[nodiscard]] Eigen::MatrixXd gramian() const;
};

/// Shapes χ_ω φ_m for m < N; targets are the first N entries of `target` (zero-padded).
[[nodiscard]] MomentSystem distributed_moments(const spectral::SpectralBasis& basis, std::size_t n,
                                               std::span<const double> target, double horizon,
                                               double window = 0.0);

/// Shapes are constants per face on an interval and low-order sines along each face of a box.
[[nodiscard]] MomentSystem boundary_moments(const spectral::SpectralBasis& basis, std::size_t n,
                                            std::span<const double> target, double horizon,
                                            double window);

struct MinNormOptions {
    double cond_threshold = 1e12;
    /// Tikhonov floor as a multiple of trace(W) / dim(W).
    double tikhonov_scale = 1e-12;
};

struct MinNormResult {
    ControlSignal control;
    std::vector<double> coeffs;
    double cost = 0.0;  ///< sqrt(cᵀ W c), the L² norm of the profile vector
    double gramian_cond = 0.0;
    bool regularized = false;
    /// |W c - sign η|_∞ / |η|_∞ (0 when η = 0).
    double moment_residual = 0.0;
};

/// Minimum-norm element of the ansatz v_m(r) = Σ_n c_n B_nm e^{-λ_n²(T - r)} solving W c = sign η.
/// The Tikhonov floor is applied, and flagged, when cond(W) exceeds the threshold.
[[nodiscard]] MinNormResult min_norm_memoryless(const MomentSystem& moments,
                                                const volterra::TimeGrid& grid,
                                                const MinNormOptions& options = {});

/// Largest change of θ_n(T), n < N, over `count` random perturbations of the min-norm control
/// with zero moments (random smooth profiles minus their ansatz component), simulated on the
/// memoryless system `plain` from zero.
[[nodiscard]] double perturbation_check(const MomentSystem& moments, const MinNormResult& result,
                                        const simulator::MemorySystem& plain, std::uint64_t seed,
                                        int count = 3);

/// K(r_i, s_j) = J(T - s_j, T - r_i) on the grid of J.
[[nodiscard]] volterra::TwoVarKernel transfer_kernel(const volterra::TwoVarKernel& j);

/// Solves u(r) - ∫_0^r J(T - s, T - r) u(s) ds = ũ(r) per profile. The result drives the
/// reduced equation (it is the profile of G); see physical_from_reduced.
[[nodiscard]] ControlSignal transfer_distributed(const ControlSignal& u_tilde,
                                                 const volterra::TwoVarKernel& j);
/// Same equation for boundary profiles; the result is the physical boundary datum.
[[nodiscard]] ControlSignal transfer_boundary(const ControlSignal& f_tilde,
                                              const volterra::TwoVarKernel& j);
/// ũ = u - K*u, the inverse of the transfer.
[[nodiscard]] ControlSignal forward_transfer(const ControlSignal& u, const volterra::TwoVarKernel& j);

/// F = G + M*G, the inverse of G = F - R*F.
[[nodiscard]] ControlSignal physical_from_reduced(const ControlSignal& g, const volterra::Kernel& m);
/// G = F - R*F.
[[nodiscard]] ControlSignal reduced_from_physical(const ControlSignal& f, const volterra::Kernel& r);

struct SweepOptions {
    simulator::Route route = simulator::Route::maccamy;
    MinNormOptions min_norm;
    ControlKind kind = ControlKind::distributed;
    /// Trailing window on which the memoryless control vanishes (boundary actuation).
    double window = 0.0;
};

struct SweepRow {
    std::size_t n = 0;
    /// sqrt(Σ_{n≤N} (θ_n(T) - η_n)² + Σ_{n>N} η_n²) / ‖η‖
    double residual = 0.0;
    /// sqrt(Σ_{n>N} θ_n(T)²) / ‖η‖ over the simulated modes beyond N.
    double spillover = 0.0;
    double control_norm = 0.0;
    double gramian_cond = 0.0;
    bool regularized = false;
};

/// For each N: min-norm memoryless control for the first N modes, transfer to the memory
/// system, simulate from zero and compare θ(T) with η (one entry per basis mode). Boundary
/// runs read θ at the last node; admissibility is judged on the memoryless control.
[[nodiscard]] std::vector<SweepRow> reachability_sweep(const simulator::MemorySystem& system,
                                                       std::span<const double> target,
                                                       std::span<const std::size_t> mode_counts,
                                                       const SweepOptions& options = {});

}  // namespace memheat::control
