#include "memheat/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "memheat/errors.hpp"

namespace memheat::control {

namespace {

std::vector<double> padded(std::span<const double> target, std::size_t n) {
    std::vector<double> out(n, 0.0);
    std::copy_n(target.begin(), std::min(n, target.size()), out.begin());
    return out;
}

void check_horizon(double horizon, double window) {
    if (!(horizon > 0.0)) {
        throw ConfigError("moment system: horizon must be positive");
    }
    if (window < 0.0 || window >= horizon) {
        throw ConfigError("moment system: window must lie in [0, T)");
    }
}

ControlSignal map_profiles(const ControlSignal& in,
                           const std::function<std::vector<double>(std::span<const double>)>& f) {
    ControlSignal out = in;
    for (auto& p : out.profiles) {
        p = f(p);
    }
    return out;
}

}  // namespace

Eigen::MatrixXd MomentSystem::gramian() const {
    const auto n = static_cast<Eigen::Index>(modes());
    const Eigen::MatrixXd bbt = b * b.transpose();
    Eigen::MatrixXd w(n, n);
    const double active = horizon - window;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k <= i; ++k) {
            const double s = lambda_sq[i] + lambda_sq[k];
            // ∫_0^{T-w} e^{-s(T-r)} dr = e^{-s w} (1 - e^{-s (T-w)}) / s
            const double e = -std::exp(-s * window) * std::expm1(-s * active) / s;
            w(i, k) = w(k, i) = bbt(i, k) * e;
        }
    }
    return w;
}

MomentSystem distributed_moments(const spectral::SpectralBasis& basis, std::size_t n,
                                 std::span<const double> target, double horizon, double window) {
    check_horizon(horizon, window);
    if (n == 0 || n > basis.size()) {
        throw ConfigError("moment system: mode count must lie in [1, basis size]");
    }
    MomentSystem ms;
    ms.kind = ControlKind::distributed;
    ms.horizon = horizon;
    ms.window = window;
    ms.target = padded(target, n);
    const auto& q = basis.control_quadrature();
    for (std::size_t m = 0; m < n; ++m) {
        ms.lambda_sq.push_back(basis.lambda_sq(m));
        ms.shapes.push_back(basis.sample(m, q));
    }
    const auto size = static_cast<Eigen::Index>(n);
    ms.b.resize(size, size);
    for (Eigen::Index i = 0; i < size; ++i) {
        for (Eigen::Index k = 0; k <= i; ++k) {
            double s = 0.0;
            const auto& pi = ms.shapes[static_cast<std::size_t>(i)];
            const auto& pk = ms.shapes[static_cast<std::size_t>(k)];
            for (std::size_t p = 0; p < q.size(); ++p) {
                s += q.weights[p] * pi[p] * pk[p];
            }
            ms.b(i, k) = ms.b(k, i) = s;
        }
    }
    return ms;
}

MomentSystem boundary_moments(const spectral::SpectralBasis& basis, std::size_t n,
                              std::span<const double> target, double horizon, double window) {
    check_horizon(horizon, window);
    if (n == 0 || n > basis.size()) {
        throw ConfigError("moment system: mode count must lie in [1, basis size]");
    }
    const auto& dom = basis.domain();
    if (dom.gamma.empty()) {
        throw ConfigError("boundary control requested but the domain has no controlled faces");
    }
    MomentSystem ms;
    ms.kind = ControlKind::boundary;
    ms.horizon = horizon;
    ms.window = window;
    ms.target = padded(target, n);
    for (std::size_t m = 0; m < n; ++m) {
        ms.lambda_sq.push_back(basis.lambda_sq(m));
    }

    const auto& q = basis.boundary_quadrature();
    const auto& face_of = basis.boundary_face_of();
    const std::size_t faces = dom.gamma.size();
    if (dom.dim() == 1) {
        for (std::size_t f = 0; f < faces; ++f) {
            std::vector<double> shape(q.size(), 0.0);
            for (std::size_t p = 0; p < q.size(); ++p) {
                shape[p] = face_of[p] == f ? 1.0 : 0.0;
            }
            ms.shapes.push_back(std::move(shape));
        }
    } else {
        const std::size_t per_face = (n + faces - 1) / faces;
        for (std::size_t f = 0; f < faces; ++f) {
            const auto& face = dom.gamma[f];
            std::vector<std::size_t> other;
            for (std::size_t a = 0; a < dom.dim(); ++a) {
                if (a != face.axis) {
                    other.push_back(a);
                }
            }
            // Lowest tensor sine indices along the face, ordered by Σ k².
            const auto side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(per_face)))) + 1;
            std::vector<std::vector<int>> orders;
            if (other.size() == 1) {
                for (int k = 1; k <= static_cast<int>(per_face); ++k) {
                    orders.push_back({k});
                }
            } else {
                for (int k1 = 1; k1 <= side; ++k1) {
                    for (int k2 = 1; k2 <= side; ++k2) {
                        orders.push_back({k1, k2});
                    }
                }
                std::stable_sort(orders.begin(), orders.end(), [](const auto& x, const auto& y) {
                    return x[0] * x[0] + x[1] * x[1] < y[0] * y[0] + y[1] * y[1];
                });
                orders.resize(per_face);
            }
            for (const auto& ks : orders) {
                std::vector<double> shape(q.size(), 0.0);
                for (std::size_t p = 0; p < q.size(); ++p) {
                    if (face_of[p] != f) {
                        continue;
                    }
                    double v = 1.0;
                    for (std::size_t o = 0; o < other.size(); ++o) {
                        const double len = dom.lengths[other[o]];
                        v *= std::sqrt(2.0 / len) *
                             std::sin(ks[o] * std::numbers::pi * q.point(p)[other[o]] / len);
                    }
                    shape[p] = v;
                }
                ms.shapes.push_back(std::move(shape));
            }
        }
    }

    ms.b.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ms.shapes.size()));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < ms.shapes.size(); ++m) {
            ms.b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) =
                spectral::boundary_moment(ms.shapes[m], basis, i);
        }
    }
    return ms;
}

MinNormResult min_norm_memoryless(const MomentSystem& moments, const volterra::TimeGrid& grid,
                                  const MinNormOptions& options) {
    if (std::abs(grid.t_final() - moments.horizon) > 1e-12 * moments.horizon) {
        throw ConfigError("min_norm_memoryless: grid horizon differs from the moment horizon");
    }
    const auto n = static_cast<Eigen::Index>(moments.modes());
    const Eigen::MatrixXd w = moments.gramian();
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rhs(i) = moments.sign() * moments.target[static_cast<std::size_t>(i)];
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("min_norm_memoryless: eigen-decomposition of the Gramian failed");
    }
    const Eigen::VectorXd ev = eig.eigenvalues();
    MinNormResult out;
    out.gramian_cond = ev(0) > 0.0 ? ev(n - 1) / ev(0) : std::numeric_limits<double>::infinity();
    double shift = 0.0;
    if (!(out.gramian_cond <= options.cond_threshold)) {
        out.regularized = true;
        shift = options.tikhonov_scale * w.trace() / static_cast<double>(n);
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    Eigen::VectorXd proj = v.transpose() * rhs;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = ev(i) + shift;
        proj(i) = d > 0.0 ? proj(i) / d : 0.0;
    }
    const Eigen::VectorXd c = v * proj;
    out.coeffs.assign(c.data(), c.data() + n);
    out.cost = std::sqrt(std::max(0.0, c.dot(w * c)));
    const double scale = rhs.cwiseAbs().maxCoeff();
    out.moment_residual = scale > 0.0 ? (w * c - rhs).cwiseAbs().maxCoeff() / scale : 0.0;

    out.control.kind = moments.kind;
    out.control.shapes = moments.shapes;
    const double t_final = moments.horizon;
    const double cut = t_final - moments.window + 1e-12 * t_final;
    for (Eigen::Index m = 0; m < moments.b.cols(); ++m) {
        std::vector<double> profile(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double t = grid.node(k);
            if (moments.window > 0.0 && t > cut) {
                continue;
            }
            double s = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                s += c(i) * moments.b(i, m) *
                     std::exp(-moments.lambda_sq[static_cast<std::size_t>(i)] * (t_final - t));
            }
            profile[k] = s;
        }
        out.control.profiles.push_back(std::move(profile));
    }
    return out;
}

double perturbation_check(const MomentSystem& moments, const MinNormResult& result,
                          const simulator::MemorySystem& plain, std::uint64_t seed, int count) {
    const auto& grid = plain.grid();
    const std::size_t nodes = grid.size();
    const auto shapes = static_cast<std::size_t>(moments.b.cols());
    const double h = grid.step();
    const double cut = moments.horizon - moments.window + 1e-12 * moments.horizon;
    if (result.control.count() != shapes || result.control.profiles.front().size() != nodes) {
        throw ConfigError("perturbation_check: control does not match the moment system grid");
    }
    auto kernel = [&](std::size_t n, double t) {
        return t <= cut ? std::exp(-moments.lambda_sq[n] * (moments.horizon - t)) : 0.0;
    };

    auto terminal = [&](const ControlSignal& u) {
        simulator::ForcingSpec f;
        f.xi.assign(plain.modes(), 0.0);
        if (u.kind == ControlKind::boundary) {
            f.boundary = u;
        } else {
            f.distributed = u;
        }
        const auto tr = simulator::simulate(plain, f, simulator::Route::maccamy);
        return tr.at(grid.n_steps());
    };
    // Moments under the simulator's own quadrature: profiles piecewise linear, exponential
    // integrated exactly. A jump at the window cut would otherwise leave an O(h) moment.
    auto moment = [&](std::size_t n, const std::vector<double>& q) {
        const auto w = volterra::exp_weights(moments.lambda_sq[n], h);
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < nodes; ++k) {
            sum += std::exp(-moments.lambda_sq[n] * (grid.t_final() - grid.node(k + 1))) *
                   (w.left * q[k] + w.right * q[k + 1]);
        }
        return sum;
    };
    const auto modes = static_cast<Eigen::Index>(moments.modes());
    // Column j: moments of the ansatz element for mode j.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(modes, modes);
    std::vector<std::vector<double>> ansatz_profile(moments.modes(), std::vector<double>(nodes));
    for (std::size_t j = 0; j < moments.modes(); ++j) {
        for (std::size_t k = 0; k < nodes; ++k) {
            ansatz_profile[j][k] = kernel(j, grid.node(k));
        }
    }
    for (std::size_t n = 0; n < moments.modes(); ++n) {
        for (std::size_t j = 0; j < moments.modes(); ++j) {
            const double e = moment(n, ansatz_profile[j]);
            for (std::size_t m = 0; m < shapes; ++m) {
                d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) +=
                    moments.b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) *
                    moments.b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) * e;
            }
        }
    }
    const auto base = terminal(result.control);
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(d);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (int trial = 0; trial < count; ++trial) {
        ControlSignal p = result.control;
        for (auto& prof : p.profiles) {
            const double a0 = gauss(rng);
            const double a1 = gauss(rng);
            const double a2 = gauss(rng);
            for (std::size_t k = 0; k < nodes; ++k) {
                const double t = grid.node(k);
                prof[k] = t <= cut ? a0 * std::sin(2.0 * t) + a1 * t * t + a2 * std::cos(7.0 * t) : 0.0;
            }
        }
        Eigen::VectorXd mom = Eigen::VectorXd::Zero(modes);
        for (std::size_t n = 0; n < moments.modes(); ++n) {
            for (std::size_t m = 0; m < shapes; ++m) {
                mom(static_cast<Eigen::Index>(n)) +=
                    moments.b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) * moment(n, p.profiles[m]);
            }
        }
        const Eigen::VectorXd c = solver.solve(mom);
        for (std::size_t m = 0; m < shapes; ++m) {
            for (std::size_t k = 0; k < nodes; ++k) {
                double ansatz = 0.0;
                for (std::size_t n = 0; n < moments.modes(); ++n) {
                    ansatz += c(static_cast<Eigen::Index>(n)) *
                              moments.b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) *
                              ansatz_profile[n][k];
                }
                p.profiles[m][k] = result.control.profiles[m][k] + p.profiles[m][k] - ansatz;
            }
        }
        const auto moved = terminal(p);
        for (std::size_t n = 0; n < moments.modes(); ++n) {
            worst = std::max(worst, std::abs(moved[n] - base[n]));
        }
    }
    return worst;
}

volterra::TwoVarKernel transfer_kernel(const volterra::TwoVarKernel& j) {
    const auto& grid = j.grid();
    const std::size_t last = grid.n_steps();
    volterra::TwoVarKernel k(grid, j.truncation_order());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t c = 0; c <= i; ++c) {
            k.at(i, c) = j.at(last - c, last - i);
        }
    }
    k.terms_used = j.terms_used;
    k.converged = j.converged;
    return k;
}

namespace {

ControlSignal solve_transfer(const ControlSignal& in, const volterra::TwoVarKernel& j) {
    volterra::TwoVarKernel neg = transfer_kernel(j);
    for (std::size_t i = 0; i < neg.grid().size(); ++i) {
        for (double& v : neg.row(i)) {
            v = -v;
        }
    }
    return map_profiles(in, [&](std::span<const double> p) {
        return volterra::solve_second_kind(neg, p);
    });
}

}  // namespace

ControlSignal transfer_distributed(const ControlSignal& u_tilde, const volterra::TwoVarKernel& j) {
    return solve_transfer(u_tilde, j);
}

ControlSignal transfer_boundary(const ControlSignal& f_tilde, const volterra::TwoVarKernel& j) {
    return solve_transfer(f_tilde, j);
}

ControlSignal forward_transfer(const ControlSignal& u, const volterra::TwoVarKernel& j) {
    const volterra::TwoVarKernel k = transfer_kernel(j);
    const double h = j.grid().step();
    return map_profiles(u, [&](std::span<const double> p) {
        if (p.size() != k.grid().size()) {
            throw ConfigError("forward_transfer: profile is not sampled on the kernel grid");
        }
        std::vector<double> out(p.begin(), p.end());
        for (std::size_t i = 1; i < p.size(); ++i) {
            const auto row = k.row(i);
            double s = 0.5 * (row[0] * p[0] + row[i] * p[i]);
            for (std::size_t c = 1; c < i; ++c) {
                s += row[c] * p[c];
            }
            out[i] -= h * s;
        }
        return out;
    });
}

ControlSignal physical_from_reduced(const ControlSignal& g, const volterra::Kernel& m) {
    return map_profiles(g, [&](std::span<const double> p) {
        auto mg = volterra::convolve(m.values, p, m.grid.step());
        for (std::size_t k = 0; k < mg.size(); ++k) {
            mg[k] += p[k];
        }
        return mg;
    });
}

ControlSignal reduced_from_physical(const ControlSignal& f, const volterra::Kernel& r) {
    return map_profiles(f, [&](std::span<const double> p) {
        auto rf = volterra::convolve(r.values, p, r.grid.step());
        for (std::size_t k = 0; k < rf.size(); ++k) {
            rf[k] = p[k] - rf[k];
        }
        return rf;
    });
}

std::vector<SweepRow> reachability_sweep(const simulator::MemorySystem& system,
                                         std::span<const double> target,
                                         std::span<const std::size_t> mode_counts,
                                         const SweepOptions& options) {
    const auto& basis = *system.basis;
    const std::size_t total = basis.size();
    if (target.size() > total) {
        throw ConfigError("reachability_sweep: target has more coefficients than basis modes");
    }
    const std::vector<double> eta = padded(target, total);
    double norm = 0.0;
    for (double v : eta) {
        norm += v * v;
    }
    norm = std::sqrt(norm);

    std::vector<SweepRow> rows;
    for (std::size_t n : mode_counts) {
        SweepRow row;
        row.n = n;
        const double horizon = system.grid().t_final();
        const bool boundary = options.kind == ControlKind::boundary;
        const MomentSystem ms = boundary
                                    ? boundary_moments(basis, n, eta, horizon, options.window)
                                    : distributed_moments(basis, n, eta, horizon, options.window);
        const MinNormResult mn = min_norm_memoryless(ms, system.grid(), options.min_norm);
        row.control_norm = mn.cost;
        row.gramian_cond = mn.gramian_cond;
        row.regularized = mn.regularized;

        simulator::ForcingSpec forcing;
        forcing.xi.assign(total, 0.0);
        if (boundary) {
            forcing.boundary = transfer_boundary(mn.control, system.j);
        } else {
            forcing.distributed =
                physical_from_reduced(transfer_distributed(mn.control, system.j), system.m);
        }
        const auto theta =
            simulator::simulate(system, forcing, options.route).at(system.grid().n_steps());

        double inside = 0.0;
        double tail = 0.0;
        double spill = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            if (i < n) {
                inside += (theta[i] - eta[i]) * (theta[i] - eta[i]);
            } else {
                tail += eta[i] * eta[i];
                spill += theta[i] * theta[i];
            }
        }
        if (norm > 0.0) {
            row.residual = std::sqrt(inside + tail) / norm;
            row.spillover = std::sqrt(spill) / norm;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace memheat::control
