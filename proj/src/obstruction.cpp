#include "memheat/obstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memheat/errors.hpp"

namespace memheat::obstruction {

namespace {

void check_mode(const simulator::MemorySystem& system, std::size_t n) {
    if (n >= system.modes()) {
        throw ConfigError("mode " + std::to_string(n + 1) + " is outside the basis (" +
                          std::to_string(system.modes()) + " modes)");
    }
}

// (H_n * e)(t_k) and (R * (H_n * e))(t_k) at the horizon node.
struct HnMoments {
    double h_e = 0.0;
    double r_h_e = 0.0;
    double e_r = 0.0;
};

HnMoments hn_moments(const simulator::MemorySystem& system, double horizon, std::size_t n) {
    check_mode(system, n);
    const auto& grid = system.grid();
    const std::size_t k = grid.index_of(horizon);
    const double h = grid.step();
    const double mu = system.basis->lambda_sq(n);
    const auto ph = volterra::exp_convolve(system.h[n].values, mu, h);
    const auto er = volterra::exp_convolve(system.r.values, mu, h);
    return {ph[k], volterra::convolve_at(system.r.values, ph, h, k), er[k]};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double bracket(const simulator::MemorySystem& system, double horizon, std::size_t n) {
    const HnMoments hm = hn_moments(system, horizon, n);
    return hm.e_r + hm.h_e - hm.r_h_e;
}

double xi_coefficient(const simulator::MemorySystem& system, double horizon, std::size_t n) {
    return bracket(system, horizon, n) - std::exp(-system.basis->lambda_sq(n) * horizon);
}

double zero_control_rhs(const simulator::MemorySystem& system, double xi, double horizon,
                        std::size_t n) {
    return xi_coefficient(system, horizon, n) * xi;
}

ZeroControlProblem find_threshold_N(const simulator::MemorySystem& system, double horizon,
                                    std::size_t max_n, double r_zero_tol) {
    if (max_n == 0 || max_n > system.modes()) {
        throw ConfigError("find_threshold_N: max_n must lie in [1, basis size]");
    }
    ZeroControlProblem out;
    out.horizon = horizon;
    const std::size_t k = system.grid().index_of(horizon);
    out.r_at_t = system.r.values[k];
    for (std::size_t n = 0; n < max_n; ++n) {
        out.beta.push_back(bracket(system, horizon, n));
        out.scaled_beta.push_back(out.beta.back() * system.basis->lambda_sq(n));
    }

    double r_sup = 0.0;
    for (double v : system.r.values) {
        r_sup = std::max(r_sup, std::abs(v));
    }
    if (r_sup == 0.0) {
        out.outcome = "memoryless degenerate";
        return out;
    }
    if (std::abs(out.r_at_t) <= r_zero_tol * r_sup) {
        out.outcome = "R(T)=0";
        return out;
    }

    const std::size_t lo = std::max<std::size_t>(1, max_n / 10);
    std::vector<double> decade;
    for (std::size_t n = lo; n <= max_n; ++n) {
        decade.push_back(std::abs(out.scaled_beta[n - 1]));
    }
    out.plateau = median(decade);
    const double floor = 0.5 * out.plateau;
    std::size_t first = max_n + 1;
    for (std::size_t n = max_n; n >= 1; --n) {
        if (!(std::abs(out.scaled_beta[n - 1]) >= floor) || out.plateau == 0.0) {
            break;
        }
        first = n;
    }
    if (first > max_n) {
        out.outcome = "no threshold";
    } else {
        out.threshold = first;
        out.outcome = "threshold found";
    }
    return out;
}

std::vector<double> solve_xi_for_coefficients(const simulator::MemorySystem& system, double horizon,
                                              std::span<const double> c, std::size_t threshold) {
    if (threshold == 0) {
        throw ConfigError("solve_xi_for_coefficients: threshold N is one-based");
    }
    const std::size_t count = std::min(c.size(), system.modes());
    std::vector<double> xi(count, 0.0);
    for (std::size_t n = threshold - 1; n < count; ++n) {
        const double coef = xi_coefficient(system, horizon, n);
        if (std::abs(coef) < 1e-14) {
            throw DivisionGuardError(n + 1, coef);
        }
        xi[n] = c[n] / system.basis->lambda_sq(n) / coef;
    }
    return xi;
}

double bump(double x, double center, double radius) {
    const double s = 2.0 * radius / 3.0;
    const double u = (x - (center - radius)) / s;
    double b = 0.0;
    if (u <= 0.0 || u >= 3.0) {
        return 0.0;
    }
    if (u < 1.0) {
        b = 0.5 * u * u;
    } else if (u < 2.0) {
        b = 0.5 * (-2.0 * u * u + 6.0 * u - 3.0);
    } else {
        b = 0.5 * (3.0 - u) * (3.0 - u);
    }
    return radius * radius * b / 0.75;
}

RoughTarget build_rough_target(const spectral::SpectralBasis& basis, std::vector<double> center,
                               double radius) {
    const auto& dom = basis.domain();
    if (!dom.omega_tilde) {
        throw ConfigError("rough target: the domain has no omega_tilde");
    }
    if (center.size() != dom.dim()) {
        throw ConfigError("rough target: center has the wrong dimension");
    }
    if (!(radius > 0.0)) {
        throw ConfigError("rough target: radius must be positive");
    }
    spectral::Region support;
    std::vector<std::vector<double>> breaks;
    for (std::size_t a = 0; a < dom.dim(); ++a) {
        const double lo = center[a] - radius;
        const double hi = center[a] + radius;
        if (lo < dom.omega_tilde->lower[a] || hi > dom.omega_tilde->upper[a]) {
            throw ConfigError("rough target: support leaves omega_tilde");
        }
        support.lower.push_back(lo);
        support.upper.push_back(hi);
        breaks.push_back({center[a] - radius / 3.0, center[a] + radius / 3.0});
    }

    RoughTarget out;
    out.center = center;
    out.radius = radius;
    const auto q = basis.quadrature_on(support, breaks);
    out.eta = spectral::project(
        [&](std::span<const double> x) {
            double v = 1.0;
            for (std::size_t a = 0; a < x.size(); ++a) {
                v *= bump(x[a], center[a], radius);
            }
            return v;
        },
        basis, q);
    out.d = spectral::domA_coefficients(out.eta, basis, spectral::DomA::to_sequence);
    if (basis.size() >= 16) {
        out.fit = spectral::sobolev_decay_fit(out.eta, basis);
    }
    return out;
}

BlowupResult blowup_experiment(const spectral::SpectralBasis& basis, double horizon,
                               const RoughTarget& rough, std::span<const std::size_t> mode_counts,
                               const BlowupOptions& options) {
    if (mode_counts.empty()) {
        throw ConfigError("blowup_experiment: no mode counts given");
    }
    basis.domain().validate(true);
    const volterra::TimeGrid grid(horizon, 2);  // only the costs are needed

    std::vector<double> smooth(rough.eta.size());
    for (std::size_t n = 0; n < smooth.size(); ++n) {
        const double s = rough.eta[n] > 0.0 ? 1.0 : (rough.eta[n] < 0.0 ? -1.0 : 0.0);
        smooth[n] = std::exp(-basis.lambda_sq(n)) * s;
    }

    BlowupResult out;
    for (std::size_t n : mode_counts) {
        CostRow row;
        row.n = n;
        const auto rough_ms = control::distributed_moments(basis, n, rough.eta, horizon);
        const auto rough_mn = control::min_norm_memoryless(rough_ms, grid, options.min_norm);
        const auto smooth_ms = control::distributed_moments(basis, n, smooth, horizon);
        const auto smooth_mn = control::min_norm_memoryless(smooth_ms, grid, options.min_norm);
        row.cost_rough = rough_mn.cost;
        row.cost_smooth = smooth_mn.cost;
        row.gramian_cond = rough_mn.gramian_cond;
        row.regularized = rough_mn.regularized;
        out.rows.push_back(row);
    }

    const CostRow* ref = &out.rows.front();
    for (const auto& r : out.rows) {
        if (r.n == options.reference_n) {
            ref = &r;
        }
    }
    const CostRow& last = out.rows.back();
    out.blowup_ratio = ref->cost_rough > 0.0 ? last.cost_rough / ref->cost_rough : 0.0;
    out.smooth_ratio = ref->cost_smooth > 0.0 ? last.cost_smooth / ref->cost_smooth : 0.0;
    return out;
}

AuditReport hn_bound_audit(const simulator::MemorySystem& system, double horizon, std::size_t first,
                           std::size_t last) {
    if (first == 0 || first > last || last > system.modes()) {
        throw ConfigError("hn_bound_audit: mode range must lie in [1, basis size]");
    }
    const std::size_t k = system.grid().index_of(horizon);
    AuditReport out;
    for (std::size_t n = first; n <= last; ++n) {
        const double mu = system.basis->lambda_sq(n - 1);
        const auto& h = system.h[n - 1].values;
        double sup = 0.0;
        for (std::size_t i = 0; i <= k; ++i) {
            sup = std::max(sup, std::abs(h[i]));
        }
        const HnMoments hm = hn_moments(system, horizon, n - 1);
        out.rows.push_back({n, mu * sup, mu * mu * std::abs(hm.h_e - hm.r_h_e)});
        if (n <= 10) {
            out.m_t = std::max(out.m_t, out.rows.back().lam2_sup_h);
            out.m_t_iterated = std::max(out.m_t_iterated, out.rows.back().lam4_iterated);
        }
    }
    auto ratio = [&](auto field) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (const auto& r : out.rows) {
            lo = std::min(lo, r.*field);
            hi = std::max(hi, r.*field);
        }
        if (hi == 0.0) {
            return 0.0;
        }
        return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    out.sup_ratio = ratio(&AuditRow::lam2_sup_h);
    out.iterated_ratio = ratio(&AuditRow::lam4_iterated);
    for (const auto& r : out.rows) {
        if (r.lam2_sup_h > 2.0 * out.m_t || r.lam4_iterated > 2.0 * out.m_t_iterated) {
            out.within_bounds = false;
        }
    }
    return out;
}

}  // namespace memheat::obstruction
