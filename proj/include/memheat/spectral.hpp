#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memheat::spectral {

/// Axis-aligned sub-box [lower, upper] (a sub-interval when dim == 1).
struct Region {
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] std::size_t dim() const noexcept { return lower.size(); }
    [[nodiscard]] bool contains(std::span<const double> x) const;
};

/// A face x_axis = 0 (upper == false) or x_axis = length (upper == true).
struct Face {
    std::size_t axis = 0;
    bool upper = false;

    bool operator==(const Face&) const = default;
};

/// Face names used in configs: left/right (axis 0), bottom/top (axis 1), back/front (axis 2).
[[nodiscard]] Face parse_face(const std::string& name, std::size_t dim);
[[nodiscard]] std::string face_name(const Face& face);

/// Interval (0, ℓ) or box Π(0, ℓ_a) with control region ω, observation region ω̃ and
/// boundary part Γ.
struct Domain {
    std::vector<double> lengths;
    std::optional<Region> omega;  ///< nullopt means the whole domain
    std::optional<Region> omega_tilde;
    std::vector<Face> gamma;

    static Domain interval(double length);
    static Domain box(std::vector<double> lengths);

    [[nodiscard]] std::size_t dim() const noexcept { return lengths.size(); }
    [[nodiscard]] Region whole() const;
    [[nodiscard]] Region control_region() const { return omega ? *omega : whole(); }

    /// Checks lengths, that ω lies in the closed domain, that cl ω̃ is interior and, when
    /// `distributed` is set, that cl ω̃ and cl ω are disjoint. Throws ConfigError.
    void validate(bool distributed = false) const;
};

/// Dirichlet eigenpair: φ = norm · Π sin(index_a π x_a / ℓ_a), λ² = Σ (index_a π / ℓ_a)².
struct Mode {
    std::vector<int> index;
    double lambda_sq = 0.0;
    double norm = 0.0;
};

/// Tensor-product node set, points stored flat with stride dim.
struct Quadrature {
    std::size_t dim = 1;
    std::vector<double> points;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return {points.data() + i * dim, dim};
    }
};

/// Composite 10-point Gauss–Legendre rule on `region`. Each axis is split at `breakpoints`
/// (if given) and then into panels so that the panel count over the region is at least
/// `panels_per_unit[a] * width`.
[[nodiscard]] Quadrature composite_gauss(const Region& region,
                                         std::span<const double> panels_per_unit,
                                         const std::vector<std::vector<double>>& breakpoints = {});

class SpectralBasis {
public:
    static constexpr std::size_t default_mode_cap = 4096;

    SpectralBasis(Domain domain, std::size_t mode_count,
                  std::size_t mode_cap = default_mode_cap);

    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }
    [[nodiscard]] std::size_t size() const noexcept { return modes_.size(); }
    /// Zero-based access; mode n of the text is mode(n - 1).
    [[nodiscard]] const Mode& mode(std::size_t i) const { return modes_.at(i); }
    [[nodiscard]] const std::vector<Mode>& modes() const noexcept { return modes_; }
    [[nodiscard]] double lambda_sq(std::size_t i) const { return modes_.at(i).lambda_sq; }
    [[nodiscard]] std::vector<double> lambda_sq_values() const;

    [[nodiscard]] double eval(std::size_t i, std::span<const double> x) const;
    /// Analytic Laplacian of φ_i at x (sum of per-axis second derivatives).
    [[nodiscard]] double laplacian(std::size_t i, std::span<const double> x) const;
    /// Exterior normal derivative γ₁φ_i at a point x on `face`.
    [[nodiscard]] double trace(std::size_t i, const Face& face, std::span<const double> x) const;

    /// Panels per unit length needed to resolve the highest retained mode on each axis.
    [[nodiscard]] const std::vector<double>& panel_density() const noexcept { return density_; }
    [[nodiscard]] Quadrature quadrature_on(const Region& region,
                                           const std::vector<std::vector<double>>& breakpoints = {}) const;

    [[nodiscard]] const Quadrature& domain_quadrature() const noexcept { return q_domain_; }
    [[nodiscard]] const Quadrature& control_quadrature() const noexcept { return q_control_; }
    /// Empty when the domain has no ω̃.
    [[nodiscard]] const Quadrature& observation_quadrature() const noexcept { return q_observe_; }
    /// Nodes on Γ, faces concatenated in the order of domain().gamma.
    [[nodiscard]] const Quadrature& boundary_quadrature() const noexcept { return q_boundary_; }
    [[nodiscard]] const std::vector<std::size_t>& boundary_face_of() const noexcept { return face_of_; }

    /// φ_i at every node of q.
    [[nodiscard]] std::vector<double> sample(std::size_t i, const Quadrature& q) const;
    /// γ₁φ_i at every boundary node.
    [[nodiscard]] std::vector<double> boundary_trace(std::size_t i) const;

private:
    Domain domain_;
    std::vector<Mode> modes_;
    std::vector<double> density_;
    Quadrature q_domain_;
    Quadrature q_control_;
    Quadrature q_observe_;
    Quadrature q_boundary_;
    std::vector<std::size_t> face_of_;
};

using Field = std::function<double(std::span<const double>)>;

/// θ_n = ∫ field φ_n over the domain quadrature.
[[nodiscard]] std::vector<double> project(const Field& field, const SpectralBasis& basis);
/// Same over a caller-supplied node set (e.g. one aligned with the field's kinks).
[[nodiscard]] std::vector<double> project(const Field& field, const SpectralBasis& basis,
                                          const Quadrature& q);
/// Projection of values already sampled at the domain quadrature nodes.
[[nodiscard]] std::vector<double> project_values(std::span<const double> values,
                                                 const SpectralBasis& basis);

/// Σ coeffs_n φ_n at flat points (stride dim). Missing coefficients count as zero.
[[nodiscard]] std::vector<double> synthesize(std::span<const double> coeffs,
                                             const SpectralBasis& basis,
                                             std::span<const double> points);

/// ∫_Γ (γ₁φ_n) f dσ for f sampled on the boundary nodes; n is zero-based.
[[nodiscard]] double boundary_moment(std::span<const double> f_shape, const SpectralBasis& basis,
                                     std::size_t n);

enum class DomA { to_state, to_sequence };
/// to_state: ξ_n = c_n / λ_n²; to_sequence: c_n = λ_n² ξ_n.
[[nodiscard]] std::vector<double> domA_coefficients(std::span<const double> coeffs,
                                                    const SpectralBasis& basis, DomA direction);

struct DecayFit {
    double exponent = 0.0;
    double residual = 0.0;
    std::size_t points = 0;
};

/// Fits |ξ_n| ≈ C λ_n^{-s} on log-log axes over the top half of the modes. Each of `blocks`
/// consecutive blocks contributes its largest coefficient, so oscillating spectra are fitted
/// through their envelope. Needs at least 16 modes; throws NumericalError when fewer than two
/// blocks carry a nonzero coefficient.
[[nodiscard]] DecayFit sobolev_decay_fit(std::span<const double> coeffs, const SpectralBasis& basis,
                                         std::size_t blocks = 4);

}  // namespace memheat::spectral
