#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "memheat/control.hpp"
#include "memheat/errors.hpp"

using namespace memheat;
using namespace memheat::control;
using simulator::ForcingSpec;
using simulator::MemorySystem;
using volterra::KernelSpec;
using volterra::TimeGrid;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const spectral::SpectralBasis> basis_with(std::size_t modes, bool half_omega,
                                                          std::vector<std::string> gamma = {}) {
    auto d = spectral::Domain::interval(pi);
    if (half_omega) {
        d.omega = spectral::Region{{0.0}, {pi / 2}};
    }
    for (const auto& f : gamma) {
        d.gamma.push_back(spectral::parse_face(f, 1));
    }
    return std::make_shared<const spectral::SpectralBasis>(d, modes);
}

MemorySystem system_for(const KernelSpec& spec, std::shared_ptr<const spectral::SpectralBasis> b,
                        std::size_t steps) {
    const TimeGrid grid(1.0, steps);
    const auto m = spec.sample(grid);
    return simulator::make_system(m, -m.values[0], std::move(b));
}

std::vector<double> harmonic(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = 1.0 / static_cast<double>(i + 1);
    }
    return v;
}

double rel_terminal_error(const std::vector<double>& x, const std::vector<double>& y, std::size_t n) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - y[i]) * (x[i] - y[i]);
        den += y[i] * y[i];
    }
    return std::sqrt(num / den);
}

double max_profile_diff(const ControlSignal& a, const ControlSignal& b) {
    double err = 0.0;
    for (std::size_t m = 0; m < a.count(); ++m) {
        for (std::size_t k = 0; k < a.profiles[m].size(); ++k) {
            err = std::max(err, std::abs(a.profiles[m][k] - b.profiles[m][k]));
        }
    }
    return err;
}

ControlSignal wavy_signal(const spectral::SpectralBasis& basis, const TimeGrid& grid, double freq) {
    ControlSignal c;
    c.shapes = {basis.sample(0, basis.control_quadrature()), basis.sample(1, basis.control_quadrature())};
    for (std::size_t m = 0; m < 2; ++m) {
        std::vector<double> p(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            p[k] = std::sin(freq * (m + 1) * grid.node(k)) + 0.3 * static_cast<double>(m);
        }
        c.profiles.push_back(p);
    }
    return c;
}

}  // namespace

TEST_CASE("zero target gives the zero control") {
    const auto b = basis_with(8, true);
    const TimeGrid grid(1.0, 200);
    const auto ms = distributed_moments(*b, 5, std::vector<double>(8, 0.0), 1.0);
    const auto mn = min_norm_memoryless(ms, grid);
    CHECK(mn.cost == 0.0);
    for (const auto& p : mn.control.profiles) {
        CHECK(*std::max_element(p.begin(), p.end()) == 0.0);
        CHECK(*std::min_element(p.begin(), p.end()) == 0.0);
    }
}

TEST_CASE("single-mode oracle") {
    const auto b = basis_with(1, false);
    const TimeGrid grid(1.0, 100);
    const auto ms = distributed_moments(*b, 1, std::vector<double>{1.0}, 1.0);
    CHECK(ms.b(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ms.gramian()(0, 0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-12));
    const auto mn = min_norm_memoryless(ms, grid);
    const double scale = (1.0 - std::exp(-2.0)) / 2.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(mn.control.profiles[0][k] ==
              doctest::Approx(std::exp(-(1.0 - grid.node(k))) / scale).epsilon(1e-12));
    }
    CHECK(mn.cost == doctest::Approx(1.0 / std::sqrt(scale)));
}

TEST_CASE("Gramian symmetric positive semidefinite and moments matched") {
    const auto b = basis_with(12, true);
    const TimeGrid grid(1.0, 200);
    const auto ms = distributed_moments(*b, 6, harmonic(12), 1.0);
    const Eigen::MatrixXd w = ms.gramian();
    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14 * es.eigenvalues().maxCoeff());
    const auto mn = min_norm_memoryless(ms, grid);
    CHECK_FALSE(mn.regularized);
    CHECK(mn.moment_residual <= 1e-8);
}

TEST_CASE("memoryless simulation hits the moments") {
    const auto b = basis_with(8, true);
    const auto s = system_for(KernelSpec::zero(), b, 8000);
    const auto target = harmonic(8);
    const auto ms = distributed_moments(*b, 5, target, 1.0);
    const auto mn = min_norm_memoryless(ms, s.grid());
    ForcingSpec f;
    f.distributed = mn.control;
    const auto theta = simulator::simulate_maccamy(s, f).terminal();
    for (std::size_t n = 0; n < 5; ++n) {
        CHECK(std::abs(theta[n] - target[n]) <= 1e-6);
    }
}

TEST_CASE("moment-free perturbations leave the controlled modes unchanged") {
    const auto b = basis_with(8, true);
    const auto s = system_for(KernelSpec::zero(), b, 4000);
    const auto& grid = s.grid();
    const std::size_t n_modes = 4;
    const auto ms = distributed_moments(*b, n_modes, harmonic(8), 1.0);
    const auto mn = min_norm_memoryless(ms, grid);
    const Eigen::MatrixXd w = ms.gramian();
    const double h = grid.step();

    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 3; ++trial) {
        // Random smooth profiles minus their ansatz component.
        ControlSignal p = mn.control;
        std::vector<double> amp(3 * ms.b.cols());
        for (double& a : amp) {
            a = gauss(rng);
        }
        for (Eigen::Index m = 0; m < ms.b.cols(); ++m) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double t = grid.node(k);
                p.profiles[m][k] = amp[3 * m] * std::sin(2.0 * t) + amp[3 * m + 1] * t * t +
                                   amp[3 * m + 2] * std::cos(7.0 * t);
            }
        }
        Eigen::VectorXd mom = Eigen::VectorXd::Zero(n_modes);
        for (std::size_t n = 0; n < n_modes; ++n) {
            for (Eigen::Index m = 0; m < ms.b.cols(); ++m) {
                double integral = 0.0;
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    const double wk = (k == 0 || k + 1 == grid.size()) ? 0.5 * h : h;
                    integral += wk * std::exp(-ms.lambda_sq[n] * (1.0 - grid.node(k))) * p.profiles[m][k];
                }
                mom(n) += ms.b(n, m) * integral;
            }
        }
        const Eigen::VectorXd c = w.ldlt().solve(mom);
        for (Eigen::Index m = 0; m < ms.b.cols(); ++m) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                double ansatz = 0.0;
                for (std::size_t n = 0; n < n_modes; ++n) {
                    ansatz += c(n) * ms.b(n, m) * std::exp(-ms.lambda_sq[n] * (1.0 - grid.node(k)));
                }
                p.profiles[m][k] = mn.control.profiles[m][k] + p.profiles[m][k] - ansatz;
            }
        }
        ForcingSpec f0;
        f0.distributed = mn.control;
        ForcingSpec f1;
        f1.distributed = p;
        const auto t0 = simulator::simulate_maccamy(s, f0).terminal();
        const auto t1 = simulator::simulate_maccamy(s, f1).terminal();
        for (std::size_t n = 0; n < n_modes; ++n) {
            CHECK(std::abs(t1[n] - t0[n]) <= 1e-6);
        }
    }
}

TEST_CASE("transfer: identity without memory, round trip, linearity") {
    const auto b = basis_with(4, true);
    const auto zero = system_for(KernelSpec::zero(), b, 400);
    const auto u = wavy_signal(*b, zero.grid(), 3.0);
    CHECK(max_profile_diff(transfer_distributed(u, zero.j), u) == 0.0);

    const auto s = system_for(KernelSpec::exponential(-1.0), b, 400);
    const auto tu = transfer_distributed(u, s.j);
    CHECK(max_profile_diff(forward_transfer(tu, s.j), u) <= 1e-10);
    CHECK(max_profile_diff(tu, u) > 1e-3);
    const auto tb = transfer_boundary(u, s.j);
    CHECK(max_profile_diff(forward_transfer(tb, s.j), u) <= 1e-10);

    const auto v = wavy_signal(*b, s.grid(), 5.0);
    ControlSignal combo = u;
    for (std::size_t m = 0; m < combo.count(); ++m) {
        for (std::size_t k = 0; k < combo.profiles[m].size(); ++k) {
            combo.profiles[m][k] = 2.0 * u.profiles[m][k] - 0.5 * v.profiles[m][k];
        }
    }
    const auto tv = transfer_distributed(v, s.j);
    const auto tc = transfer_distributed(combo, s.j);
    ControlSignal expect = tu;
    for (std::size_t m = 0; m < expect.count(); ++m) {
        for (std::size_t k = 0; k < expect.profiles[m].size(); ++k) {
            expect.profiles[m][k] = 2.0 * tu.profiles[m][k] - 0.5 * tv.profiles[m][k];
        }
    }
    CHECK(max_profile_diff(tc, expect) <= 1e-12);

    const auto k = transfer_kernel(s.j);
    const std::size_t n = s.grid().n_steps();
    CHECK(k.at(n, 3) == s.j.at(n - 3, 0));
    CHECK(k.at(200, 50) == s.j.at(n - 50, n - 200));
}

TEST_CASE("reduced forcing from a constant physical forcing") {
    const auto b = basis_with(2, false);
    const auto s = system_for(KernelSpec::constant(1.0), b, 2000);
    ControlSignal f;
    f.shapes = {b->sample(0, b->control_quadrature())};
    f.profiles = {std::vector<double>(s.grid().size(), 1.0)};
    const auto g = reduced_from_physical(f, s.r);
    double err = 0.0;
    for (std::size_t k = 0; k < s.grid().size(); ++k) {
        err = std::max(err, std::abs(g.profiles[0][k] - std::exp(-s.grid().node(k))));
    }
    CHECK(err <= 1e-6);
    CHECK(max_profile_diff(physical_from_reduced(g, s.m), f) <= 1e-10);
}

TEST_CASE("end-to-end distributed transfer") {
    const auto b = basis_with(10, true);
    const auto memoryless = system_for(KernelSpec::zero(), b, 2000);
    const auto memory = system_for(KernelSpec::exponential(-1.0), b, 2000);
    const auto mn = min_norm_memoryless(distributed_moments(*b, 10, harmonic(10), 1.0), memory.grid());
    ForcingSpec tilde;
    tilde.distributed = mn.control;
    ForcingSpec phys;
    phys.distributed = physical_from_reduced(transfer_distributed(mn.control, memory.j), memory.m);
    const auto ref = simulator::simulate_maccamy(memoryless, tilde).terminal();
    const auto got = simulator::simulate_maccamy(memory, phys).terminal();
    CHECK(rel_terminal_error(got, ref, 10) <= 1e-3);
    CHECK(rel_terminal_error(simulator::simulate_direct(memory, phys).terminal(), ref, 10) <= 1e-3);
}

TEST_CASE("end-to-end boundary transfer") {
    const auto b = basis_with(10, false, {"left", "right"});
    const auto memoryless = system_for(KernelSpec::zero(), b, 2000);
    const auto memory = system_for(KernelSpec::exponential(-1.0), b, 2000);
    const auto ms = boundary_moments(*b, 2, harmonic(10), 1.0, 0.1);
    CHECK(ms.sign() == -1.0);
    const auto mn = min_norm_memoryless(ms, memory.grid());
    for (const auto& p : mn.control.profiles) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (memory.grid().node(k) > 0.9 + 1e-9) {
                CHECK(p[k] == 0.0);
            }
        }
    }
    ForcingSpec tilde;
    tilde.boundary = mn.control;
    ForcingSpec phys;
    phys.boundary = transfer_boundary(mn.control, memory.j);
    const auto ref_tr = simulator::simulate_maccamy(memoryless, tilde);
    REQUIRE(ref_tr.endpoint_admissible);
    const auto ref = ref_tr.terminal();
    CHECK(std::abs(ref[0] - 1.0) <= 1e-3);
    const auto got = simulator::simulate_maccamy(memory, phys).at(memory.grid().n_steps());
    CHECK(rel_terminal_error(got, ref, 10) <= 5e-3);
}

TEST_CASE("reachability sweep") {
    // h λ_N² must stay below one for the ansatz profiles to be resolved at N = 40.
    const auto b = basis_with(60, true);
    const auto s = system_for(KernelSpec::exponential(-1.0), b, 4000);

    SUBCASE("harmonic target decreases strictly") {
        const std::vector<std::size_t> ns{5, 10, 20, 40};
        const auto rows = reachability_sweep(s, harmonic(60), ns);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i].residual < rows[i - 1].residual);
        }
    }
    SUBCASE("band-limited target") {
        auto eta = harmonic(10);
        eta.resize(60, 0.0);
        const std::vector<std::size_t> ns{10};
        const auto rows = reachability_sweep(s, eta, ns);
        CHECK(rows[0].residual <= 1e-3);
        CHECK(rows[0].spillover > 0.0);
    }
    SUBCASE("zero target") {
        const std::vector<std::size_t> ns{5, 10};
        for (const auto& r : reachability_sweep(s, std::vector<double>(60, 0.0), ns)) {
            CHECK(r.residual == 0.0);
            CHECK(r.control_norm == 0.0);
        }
    }
}

TEST_CASE("perturbation check with a trailing window") {
    const auto b = basis_with(6, false, {"left", "right"});
    const auto plain = system_for(KernelSpec::zero(), b, 1000);
    const auto ms = boundary_moments(*b, 2, harmonic(6), 1.0, 0.1);
    const auto mn = min_norm_memoryless(ms, plain.grid());
    CHECK(perturbation_check(ms, mn, plain, 11, 3) <= 1e-10);

    const auto bd = basis_with(6, true);
    const auto plain_d = system_for(KernelSpec::zero(), bd, 1000);
    const auto msd = distributed_moments(*bd, 3, harmonic(6), 1.0, 0.2);
    CHECK(perturbation_check(msd, min_norm_memoryless(msd, plain_d.grid()), plain_d, 5, 3) <= 1e-10);
}
