#include "memheat/simulator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "memheat/errors.hpp"

namespace memheat::simulator {

namespace {

// Rows of the forcing that enter the reduced equations: F_n (distributed) and f_n (boundary).
struct ModalSources {
    std::vector<std::vector<double>> distributed;
    std::vector<std::vector<double>> boundary;
};

ModalSources sources_for(const MemorySystem& system, const ForcingSpec& forcing) {
    forcing.validate(system.grid());
    ModalSources s;
    if (forcing.distributed) {
        s.distributed = modal_forcing(*forcing.distributed, *system.basis);
    }
    if (forcing.boundary) {
        s.boundary = modal_forcing(*forcing.boundary, *system.basis);
    }
    return s;
}

double initial(const ForcingSpec& forcing, std::size_t n) {
    return n < forcing.xi.size() ? forcing.xi[n] : 0.0;
}

bool admissible(const ForcingSpec& forcing, const TimeGrid& grid, double window) {
    if (!forcing.boundary) {
        return true;
    }
    const double t_final = grid.t_final();
    const double cut = t_final - window * t_final + 1e-12 * t_final;
    for (const auto& profile : forcing.boundary->profiles) {
        for (std::size_t k = 0; k < profile.size(); ++k) {
            if (grid.node(k) > cut && profile[k] != 0.0) {
                return false;
            }
        }
    }
    return true;
}

void require_normalized(const MemorySystem& system) {
    if (!system.normalized()) {
        throw PreconditionError("simulation requires a normalized system (a = -M(0)); call normalize()");
    }
}

// g_n = G_n - f_n with G_n = F_n - R*F_n.
std::vector<double> reduced_source(const MemorySystem& system, const ModalSources& src,
                                   std::size_t n) {
    const double h = system.grid().step();
    std::vector<double> g(system.grid().size(), 0.0);
    if (!src.distributed.empty()) {
        const auto& f = src.distributed[n];
        const auto rf = volterra::convolve(system.r.values, f, h);
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] += f[k] - rf[k];
        }
    }
    if (!src.boundary.empty()) {
        const auto& f = src.boundary[n];
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k] -= f[k];
        }
    }
    return g;
}

ModalTrajectory start(const MemorySystem& system, const ForcingSpec& forcing, Route route,
                      const SimulationOptions& options) {
    ModalTrajectory out;
    out.route = route;
    out.grid = system.grid();
    out.theta.assign(system.modes(), {});
    out.endpoint_admissible = admissible(forcing, system.grid(), options.trailing_window);
    return out;
}

}  // namespace

std::vector<std::vector<double>> coupling(const ControlSignal& signal,
                                          const spectral::SpectralBasis& basis) {
    std::vector<std::vector<double>> c(basis.size(), std::vector<double>(signal.count(), 0.0));
    if (signal.kind == ControlKind::distributed) {
        const auto& q = basis.control_quadrature();
        for (const auto& shape : signal.shapes) {
            if (shape.size() != q.size()) {
                throw ConfigError("control shape is not sampled on the control quadrature");
            }
        }
        for (std::size_t n = 0; n < basis.size(); ++n) {
            const auto phi = basis.sample(n, q);
            for (std::size_t m = 0; m < signal.count(); ++m) {
                double s = 0.0;
                for (std::size_t p = 0; p < q.size(); ++p) {
                    s += q.weights[p] * phi[p] * signal.shapes[m][p];
                }
                c[n][m] = s;
            }
        }
    } else {
        for (std::size_t n = 0; n < basis.size(); ++n) {
            for (std::size_t m = 0; m < signal.count(); ++m) {
                c[n][m] = spectral::boundary_moment(signal.shapes[m], basis, n);
            }
        }
    }
    return c;
}

std::vector<std::vector<double>> modal_forcing(const ControlSignal& signal,
                                               const spectral::SpectralBasis& basis) {
    const auto c = coupling(signal, basis);
    const std::size_t nodes = signal.profiles.empty() ? 0 : signal.profiles.front().size();
    std::vector<std::vector<double>> rows(basis.size(), std::vector<double>(nodes, 0.0));
    for (std::size_t n = 0; n < basis.size(); ++n) {
        for (std::size_t m = 0; m < signal.count(); ++m) {
            if (c[n][m] == 0.0) {
                continue;
            }
            for (std::size_t k = 0; k < nodes; ++k) {
                rows[n][k] += c[n][m] * signal.profiles[m][k];
            }
        }
    }
    return rows;
}

ControlSignal scale_profiles(const ControlSignal& signal, const TimeGrid& grid, double rate) {
    ControlSignal out = signal;
    for (auto& p : out.profiles) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            p[k] *= std::exp(-rate * grid.node(k));
        }
    }
    return out;
}

void ForcingSpec::validate(const TimeGrid& grid) const {
    if (distributed && boundary) {
        throw ConfigError("forcing: distributed and boundary controls cannot both be active");
    }
    for (const auto* s : {distributed ? &*distributed : nullptr, boundary ? &*boundary : nullptr}) {
        if (s == nullptr) {
            continue;
        }
        if (s->shapes.size() != s->profiles.size()) {
            throw ConfigError("forcing: shape and profile counts differ");
        }
        for (const auto& p : s->profiles) {
            if (p.size() != grid.size()) {
                throw ConfigError("forcing: control profile is not sampled on the simulation grid");
            }
        }
    }
    if (distributed && distributed->kind != ControlKind::distributed) {
        throw ConfigError("forcing: boundary signal supplied as distributed control");
    }
    if (boundary && boundary->kind != ControlKind::boundary) {
        throw ConfigError("forcing: distributed signal supplied as boundary control");
    }
}

bool MemorySystem::normalized() const noexcept {
    const double m0 = m.values.front();
    return std::abs(a + m0) <= 1e-12 * std::max(1.0, std::abs(m0));
}

MemorySystem make_system(Kernel m, double a, std::shared_ptr<const spectral::SpectralBasis> basis,
                         std::size_t j_truncation) {
    if (!basis) {
        throw ConfigError("memory system: missing spectral basis");
    }
    Kernel r = volterra::resolvent(m);
    Kernel l = volterra::l_kernel(m, r);
    std::vector<Kernel> z;
    std::vector<Kernel> h;
    z.reserve(basis->size());
    h.reserve(basis->size());
    for (std::size_t n = 0; n < basis->size(); ++n) {
        z.push_back(volterra::zn_kernel(l, basis->lambda_sq(n)));
        h.push_back(volterra::resolvent(z.back()));
    }
    TwoVarKernel j = volterra::j_kernel(l, j_truncation);
    return MemorySystem{std::move(m), a,           std::move(basis), 0.0,          j_truncation,
                        std::move(r), std::move(l), std::move(z),     std::move(h), std::move(j)};
}

MemorySystem gamma_shift(const MemorySystem& system, double gamma) {
    if (gamma == 0.0) {
        return system;
    }
    const TimeGrid& grid = system.grid();
    std::vector<double> v(grid.size());
    std::optional<std::vector<double>> d;
    if (system.m.derivative_values) {
        d.emplace(grid.size());
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double e = std::exp(-gamma * grid.node(k));
        v[k] = e * system.m.values[k];
        if (d) {
            (*d)[k] = e * ((*system.m.derivative_values)[k] - gamma * system.m.values[k]);
        }
    }
    std::ostringstream label;
    label.precision(17);
    label << "exp(" << -gamma << " t) * [" << system.m.label << "]";
    MemorySystem out = make_system(Kernel(grid, std::move(v), label.str(), std::move(d)),
                                   system.a - gamma, system.basis, system.j_truncation);
    out.gamma_applied = system.gamma_applied + gamma;
    return out;
}

MemorySystem normalize(const MemorySystem& system) {
    const double m0 = system.m.values.front();
    MemorySystem out = gamma_shift(system, system.a + m0);
    out.a = -out.m.values.front();
    return out;
}

std::string route_name(Route route) {
    switch (route) {
        case Route::direct: return "direct";
        case Route::maccamy: return "maccamy";
        case Route::closedform: return "closedform";
    }
    return {};
}

Route parse_route(const std::string& name) {
    if (name == "direct") return Route::direct;
    if (name == "maccamy") return Route::maccamy;
    if (name == "closedform") return Route::closedform;
    throw ConfigError("unknown route '" + name + "' (expected direct, maccamy or closedform)");
}

std::vector<double> ModalTrajectory::at(std::size_t k) const {
    if (k >= grid.size()) {
        throw ConfigError("time index " + std::to_string(k) + " is outside the grid");
    }
    std::vector<double> out(theta.size());
    for (std::size_t n = 0; n < theta.size(); ++n) {
        out[n] = theta[n][k];
    }
    return out;
}

std::vector<double> ModalTrajectory::terminal() const {
    if (!endpoint_admissible) {
        throw PreconditionError(
            "terminal value requested but the boundary control does not vanish on the trailing window");
    }
    return at(grid.n_steps());
}

ModalTrajectory simulate_direct(const MemorySystem& system, const ForcingSpec& forcing,
                                const SimulationOptions& options) {
    require_normalized(system);
    const ModalSources src = sources_for(system, forcing);
    ModalTrajectory out = start(system, forcing, Route::direct, options);

    const TimeGrid& grid = system.grid();
    const double h = grid.step();
    const std::size_t size = grid.size();
    const auto& m = system.m.values;
    const double m0 = m.front();

    for (std::size_t n = 0; n < system.modes(); ++n) {
        const double mu = system.basis->lambda_sq(n);
        std::vector<double> s(size, 0.0);  // F_n - f_n - M*f_n
        if (!src.distributed.empty()) {
            for (std::size_t k = 0; k < size; ++k) {
                s[k] += src.distributed[n][k];
            }
        }
        if (!src.boundary.empty()) {
            const auto& f = src.boundary[n];
            const auto mf = volterra::convolve(m, f, h);
            for (std::size_t k = 0; k < size; ++k) {
                s[k] -= f[k] + mf[k];
            }
        }

        auto& theta = out.theta[n];
        theta.assign(size, 0.0);
        theta[0] = initial(forcing, n);
        const double coef = 1.0 - 0.5 * h * ((system.a - mu) - mu * 0.5 * h * m0);
        double conv = 0.0;  // (M*θ)(t_k)
        for (std::size_t k = 0; k + 1 < size; ++k) {
            const double d_k = (system.a - mu) * theta[k] - mu * conv + s[k];
            double known = 0.5 * m[k + 1] * theta[0];
            for (std::size_t j = 1; j <= k; ++j) {
                known += m[k + 1 - j] * theta[j];
            }
            known *= h;
            theta[k + 1] = (theta[k] + 0.5 * h * (d_k - mu * known + s[k + 1])) / coef;
            conv = known + 0.5 * h * m0 * theta[k + 1];
        }
    }
    return out;
}

ModalTrajectory simulate_maccamy(const MemorySystem& system, const ForcingSpec& forcing,
                                 const SimulationOptions& options) {
    require_normalized(system);
    const ModalSources src = sources_for(system, forcing);
    ModalTrajectory out = start(system, forcing, Route::maccamy, options);

    const TimeGrid& grid = system.grid();
    const double h = grid.step();
    for (std::size_t n = 0; n < system.modes(); ++n) {
        const double mu = system.basis->lambda_sq(n);
        const double xi = initial(forcing, n);
        const auto er = volterra::exp_convolve(system.r.values, mu, h);
        const auto eg = volterra::exp_convolve(reduced_source(system, src, n), mu, h);
        std::vector<double> rhs(grid.size());
        for (std::size_t k = 0; k < rhs.size(); ++k) {
            rhs[k] = std::exp(-mu * grid.node(k)) * xi - er[k] * xi + eg[k];
        }
        out.theta[n] = volterra::solve_second_kind(system.z[n], rhs);
    }
    return out;
}

ModalTrajectory simulate_closedform(const MemorySystem& system, const ForcingSpec& forcing,
                                    const SimulationOptions& options) {
    require_normalized(system);
    const ModalSources src = sources_for(system, forcing);
    ModalTrajectory out = start(system, forcing, Route::closedform, options);

    const TimeGrid& grid = system.grid();
    const double h = grid.step();
    const bool forced = !src.distributed.empty() || !src.boundary.empty();
    for (std::size_t n = 0; n < system.modes(); ++n) {
        const double mu = system.basis->lambda_sq(n);
        const double xi = initial(forcing, n);
        const auto er = volterra::exp_convolve(system.r.values, mu, h);
        const auto ph = volterra::exp_convolve(system.h[n].values, mu, h);
        const auto rph = volterra::convolve(system.r.values, ph, h);

        auto& theta = out.theta[n];
        theta.assign(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double bracket = er[k] + ph[k] - rph[k];
            theta[k] = (std::exp(-mu * grid.node(k)) - bracket) * xi;
        }
        if (forced) {
            const auto g = reduced_source(system, src, n);
            const auto eg = volterra::exp_convolve(g, mu, h);
            const auto pj = j_exp_moment(system.j, mu);
            const auto pjg = volterra::convolve(pj, g, h);
            for (std::size_t k = 0; k < grid.size(); ++k) {
                theta[k] += eg[k] - pjg[k];
            }
        }
    }
    return out;
}

ModalTrajectory simulate(const MemorySystem& system, const ForcingSpec& forcing, Route route,
                         const SimulationOptions& options) {
    switch (route) {
        case Route::direct: return simulate_direct(system, forcing, options);
        case Route::maccamy: return simulate_maccamy(system, forcing, options);
        case Route::closedform: return simulate_closedform(system, forcing, options);
    }
    throw ConfigError("unknown route");
}

ModalTrajectory simulate_unnormalized(const MemorySystem& system, const ForcingSpec& forcing,
                                      Route route, const SimulationOptions& options) {
    const double gamma = system.a + system.m.values.front();
    const MemorySystem normal = normalize(system);
    ForcingSpec scaled = forcing;
    if (scaled.distributed) {
        scaled.distributed = scale_profiles(*scaled.distributed, system.grid(), gamma);
    }
    if (scaled.boundary) {
        scaled.boundary = scale_profiles(*scaled.boundary, system.grid(), gamma);
    }
    ModalTrajectory out = simulate(normal, scaled, route, options);
    for (auto& row : out.theta) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            row[k] *= std::exp(gamma * out.grid.node(k));
        }
    }
    return out;
}

std::vector<double> j_exp_moment(const TwoVarKernel& j, double lambda_sq) {
    const TimeGrid& grid = j.grid();
    const volterra::ExpWeights w = volterra::exp_weights(lambda_sq, grid.step());
    std::vector<double> start_decay(grid.size());  // e^{-λ² t_i}
    for (std::size_t i = 0; i < grid.size(); ++i) {
        start_decay[i] = std::exp(-lambda_sq * grid.node(i));
    }
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t m = 1; m < grid.size(); ++m) {
        const auto row = j.row(m);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            // ∫_{t_i}^{t_{i+1}} J e^{-λ²τ} dτ = e^{-λ² t_i} (left J_{i+1} + right J_i)
            s += start_decay[i] * (w.left * row[i + 1] + w.right * row[i]);
        }
        out[m] = s;
    }
    return out;
}

std::vector<double> state_at(const ModalTrajectory& trajectory, const spectral::SpectralBasis& basis,
                             std::size_t k, std::span<const double> points) {
    const auto coeffs = trajectory.at(k);
    return spectral::synthesize(coeffs, basis, points);
}

double relative_l2(const ModalTrajectory& x, const ModalTrajectory& y) {
    if (x.theta.size() != y.theta.size()) {
        throw ConfigError("relative_l2: trajectories have different mode counts");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t n = 0; n < x.theta.size(); ++n) {
        if (x.theta[n].size() != y.theta[n].size()) {
            throw ConfigError("relative_l2: trajectories live on different grids");
        }
        for (std::size_t k = 0; k < x.theta[n].size(); ++k) {
            const double d = x.theta[n][k] - y.theta[n][k];
            num += d * d;
            den += y.theta[n][k] * y.theta[n][k];
        }
    }
    if (den == 0.0) {
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::sqrt(num / den);
}

}  // namespace memheat::simulator
