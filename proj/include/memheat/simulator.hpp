#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memheat/spectral.hpp"
#include "memheat/volterra.hpp"

namespace memheat::simulator {

using volterra::Kernel;
using volterra::TimeGrid;
using volterra::TwoVarKernel;

enum class ControlKind { distributed, boundary };

/// u(t, x) = Σ_m profiles[m](t) shapes[m](x). Distributed shapes are sampled on the
/// basis control quadrature (they vanish off ω by construction); boundary shapes on the
/// basis boundary nodes.
struct ControlSignal {
    ControlKind kind = ControlKind::distributed;
    std::vector<std::vector<double>> shapes;
    std::vector<std::vector<double>> profiles;

    [[nodiscard]] std::size_t count() const noexcept { return shapes.size(); }
};

/// Mode × shape couplings: ∫_ω φ_n shape_m (distributed) or ∫_Γ γ₁φ_n shape_m (boundary).
[[nodiscard]] std::vector<std::vector<double>> coupling(const ControlSignal& signal,
                                                        const spectral::SpectralBasis& basis);

/// Modal forcing rows F_n(t) or f_n(t), one per basis mode.
[[nodiscard]] std::vector<std::vector<double>> modal_forcing(const ControlSignal& signal,
                                                             const spectral::SpectralBasis& basis);

/// Copy of `signal` with every profile multiplied by e^{-rate t}.
[[nodiscard]] ControlSignal scale_profiles(const ControlSignal& signal, const TimeGrid& grid,
                                           double rate);

/// Initial state and at most one control.
struct ForcingSpec {
    std::vector<double> xi;
    std::optional<ControlSignal> distributed;
    std::optional<ControlSignal> boundary;

    void validate(const TimeGrid& grid) const;
};

/// θ' = aθ + Δθ + ∫_0^t M(t - s) Δθ(s) ds + F with derived kernels R, L, Z_n, H_n and J.
struct MemorySystem {
    Kernel m;
    double a = 0.0;
    std::shared_ptr<const spectral::SpectralBasis> basis;
    double gamma_applied = 0.0;
    std::size_t j_truncation = 40;

    Kernel r;
    Kernel l;
    std::vector<Kernel> z;
    std::vector<Kernel> h;
    TwoVarKernel j;

    [[nodiscard]] const TimeGrid& grid() const noexcept { return m.grid; }
    [[nodiscard]] std::size_t modes() const noexcept { return basis->size(); }
    /// a == -M(0) up to round-off.
    [[nodiscard]] bool normalized() const noexcept;
};

/// Builds every derived kernel from M.
[[nodiscard]] MemorySystem make_system(Kernel m, double a,
                                       std::shared_ptr<const spectral::SpectralBasis> basis,
                                       std::size_t j_truncation = 40);

/// a ↦ a - γ, M ↦ e^{-γt} M; M(0) is kept exactly. Controls must be scaled by e^{-γt}
/// separately (scale_profiles with rate γ).
[[nodiscard]] MemorySystem gamma_shift(const MemorySystem& system, double gamma);

/// gamma_shift with γ = a + M(0); the result has a = -M(0) exactly.
[[nodiscard]] MemorySystem normalize(const MemorySystem& system);

enum class Route { direct, maccamy, closedform };
[[nodiscard]] std::string route_name(Route route);
[[nodiscard]] Route parse_route(const std::string& name);

struct ModalTrajectory {
    Route route = Route::direct;
    TimeGrid grid{1.0, 2};
    std::vector<std::vector<double>> theta;  ///< modes × nodes
    /// False when a boundary control is active on the trailing window, in which case the
    /// value at T is not an admissible endpoint evaluation.
    bool endpoint_admissible = true;

    [[nodiscard]] std::size_t modes() const noexcept { return theta.size(); }
    [[nodiscard]] std::vector<double> at(std::size_t k) const;
    /// Values at T; throws PreconditionError when the endpoint is not admissible.
    [[nodiscard]] std::vector<double> terminal() const;
};

struct SimulationOptions {
    /// Length of the trailing window as a fraction of T.
    double trailing_window = 0.1;
};

/// Trapezoidal stepping of θ_n' = (a - λ²)θ_n - λ² M*θ_n + F_n - f_n - M*f_n.
[[nodiscard]] ModalTrajectory simulate_direct(const MemorySystem& system, const ForcingSpec& forcing,
                                              const SimulationOptions& options = {});
/// Per-mode θ + Z_n*θ = (e - e*R)ξ + e*(G - f) with e = e^{-λ²t} and G = F - R*F.
[[nodiscard]] ModalTrajectory simulate_maccamy(const MemorySystem& system, const ForcingSpec& forcing,
                                               const SimulationOptions& options = {});
/// θ = eξ - [e*R + H*e - R*(H*e)]ξ + e*g - P_J*g with g = G - f and
/// P_J(t) = ∫_0^t J(t, τ) e^{-λ²τ} dτ.
[[nodiscard]] ModalTrajectory simulate_closedform(const MemorySystem& system,
                                                  const ForcingSpec& forcing,
                                                  const SimulationOptions& options = {});
[[nodiscard]] ModalTrajectory simulate(const MemorySystem& system, const ForcingSpec& forcing,
                                       Route route, const SimulationOptions& options = {});

/// Trajectory of a system that need not be normalized: e^{γt} times the trajectory of
/// normalize(system) driven by e^{-γt}-scaled controls, γ = a + M(0).
[[nodiscard]] ModalTrajectory simulate_unnormalized(const MemorySystem& system,
                                                    const ForcingSpec& forcing, Route route,
                                                    const SimulationOptions& options = {});

/// P_J(t_k) = ∫_0^{t_k} J(t_k, τ) e^{-λ²τ} dτ with exponential product weights.
[[nodiscard]] std::vector<double> j_exp_moment(const TwoVarKernel& j, double lambda_sq);

/// Field values at time index k and flat points.
[[nodiscard]] std::vector<double> state_at(const ModalTrajectory& trajectory,
                                           const spectral::SpectralBasis& basis, std::size_t k,
                                           std::span<const double> points);

/// Relative discrete L² distance ‖x - y‖ / ‖y‖ over all modes and nodes (0 when both vanish).
[[nodiscard]] double relative_l2(const ModalTrajectory& x, const ModalTrajectory& y);

}  // namespace memheat::simulator
