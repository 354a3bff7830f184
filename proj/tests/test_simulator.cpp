#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "memheat/errors.hpp"
#include "memheat/simulator.hpp"

using namespace memheat;
using namespace memheat::simulator;
using volterra::KernelSpec;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<const spectral::SpectralBasis> interval_basis(std::size_t modes,
                                                              std::vector<std::string> gamma = {}) {
    auto d = spectral::Domain::interval(pi);
    for (const auto& f : gamma) {
        d.gamma.push_back(spectral::parse_face(f, 1));
    }
    return std::make_shared<const spectral::SpectralBasis>(d, modes);
}

MemorySystem build(const KernelSpec& spec, double a, std::size_t modes, double t, std::size_t steps,
                   std::vector<std::string> gamma = {}) {
    const TimeGrid grid(t, steps);
    return make_system(spec.sample(grid), a, interval_basis(modes, std::move(gamma)));
}

std::vector<double> harmonic(std::size_t n) {
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) {
        xi[i] = 1.0 / static_cast<double>(i + 1);
    }
    return xi;
}

double sup_error(const std::vector<double>& row, const TimeGrid& grid, auto exact) {
    double err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        err = std::max(err, std::abs(row[k] - exact(grid.node(k))));
    }
    return err;
}

// Boundary control on the left end of (0, π), switched off on the trailing window.
ControlSignal left_boundary_control(const TimeGrid& grid, double window) {
    ControlSignal c;
    c.kind = ControlKind::boundary;
    c.shapes = {{1.0}};
    std::vector<double> p(grid.size(), 0.0);
    const double cut = grid.t_final() * (1.0 - window);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.node(k);
        p[k] = t < cut ? std::sin(pi * t / cut) : 0.0;
    }
    c.profiles = {p};
    return c;
}

ControlSignal distributed_phi1(const spectral::SpectralBasis& basis, const TimeGrid& grid) {
    ControlSignal c;
    c.shapes = {basis.sample(0, basis.control_quadrature())};
    std::vector<double> p(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        p[k] = std::cos(3.0 * grid.node(k));
    }
    c.profiles = {p};
    return c;
}

}  // namespace

TEST_CASE("normalization") {
    const auto s = build(KernelSpec::constant(1.0), 0.0, 2, 1.0, 100);
    CHECK_FALSE(s.normalized());
    const auto n = normalize(s);
    CHECK(n.a == -1.0);
    CHECK(n.m.values[0] == 1.0);
    CHECK(n.gamma_applied == doctest::Approx(1.0));
    CHECK(n.normalized());

    const auto again = normalize(n);
    CHECK(again.a == n.a);
    CHECK(again.gamma_applied == n.gamma_applied);
    CHECK(again.m.values == n.m.values);

    const auto s2 = build(KernelSpec::constant(1.0), 2.0, 2, 1.0, 100);
    CHECK(normalize(s2).gamma_applied == doctest::Approx(3.0));

    const auto zero = build(KernelSpec::zero(), 0.0, 2, 1.0, 100);
    const auto nz = normalize(zero);
    CHECK(nz.a == 0.0);
    CHECK(nz.gamma_applied == 0.0);

    const auto id = gamma_shift(s, 0.0);
    CHECK(id.a == s.a);
    CHECK(id.m.values == s.m.values);
}

TEST_CASE("simulation requires a normalized system") {
    const auto s = build(KernelSpec::constant(1.0), 0.0, 2, 1.0, 50);
    ForcingSpec f{{1.0, 0.0}, {}, {}};
    for (Route r : {Route::direct, Route::maccamy, Route::closedform}) {
        CHECK_THROWS_AS((void)simulate(s, f, r), PreconditionError);
    }
    CHECK_THROWS_AS((void)parse_route("euler"), ConfigError);
    CHECK(parse_route("closedform") == Route::closedform);
}

TEST_CASE("pure heat decay") {
    const auto s = build(KernelSpec::zero(), 0.0, 3, 1.0, 2000);
    const ForcingSpec f{{1.0, 0.0, 0.0}, {}, {}};
    for (Route r : {Route::direct, Route::maccamy, Route::closedform}) {
        const auto tr = simulate(s, f, r);
        CHECK(tr.route == r);
        CHECK(sup_error(tr.theta[0], s.grid(), [](double t) { return std::exp(-t); }) < 1e-7);
        CHECK(*std::max_element(tr.theta[1].begin(), tr.theta[1].end()) == 0.0);
    }
}

TEST_CASE("closed integro-ODE oracle") {
    const auto s = build(KernelSpec::constant(1.0), -1.0, 1, 1.0, 2000);
    REQUIRE(s.normalized());
    const ForcingSpec f{{1.0}, {}, {}};
    for (Route r : {Route::direct, Route::maccamy, Route::closedform}) {
        const auto tr = simulate(s, f, r);
        CHECK(sup_error(tr.theta[0], s.grid(), [](double t) { return std::exp(-t) * (1.0 - t); }) <=
              1e-5);
    }
}

TEST_CASE("three routes agree for free decay") {
    const auto s = build(KernelSpec::exponential(-1.0), -1.0, 10, 1.0, 2000);
    const ForcingSpec f{harmonic(10), {}, {}};
    const auto d = simulate_direct(s, f);
    const auto m = simulate_maccamy(s, f);
    const auto c = simulate_closedform(s, f);
    CHECK(relative_l2(d, m) <= 1e-4);
    CHECK(relative_l2(d, c) <= 1e-4);
    CHECK(relative_l2(m, c) <= 1e-4);
    for (std::size_t n = 0; n < 10; ++n) {
        CHECK(d.theta[n][0] == f.xi[n]);
        CHECK(m.theta[n][0] == f.xi[n]);
        CHECK(c.theta[n][0] == f.xi[n]);
    }
}

TEST_CASE("route difference is second order") {
    const ForcingSpec f{harmonic(10), {}, {}};
    auto diff = [&](std::size_t steps) {
        const auto s = build(KernelSpec::exponential(-1.0), -1.0, 10, 1.0, steps);
        return relative_l2(simulate_direct(s, f), simulate_maccamy(s, f));
    };
    const double ratio = diff(250) / diff(500);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("routes agree with distributed and boundary forcing") {
    SUBCASE("distributed") {
        const auto s = build(KernelSpec::exponential(-1.0), -1.0, 6, 1.0, 2000);
        ForcingSpec f{std::vector<double>(6, 0.0), distributed_phi1(*s.basis, s.grid()), {}};
        const auto d = simulate_direct(s, f);
        const auto m = simulate_maccamy(s, f);
        const auto c = simulate_closedform(s, f);
        CHECK(relative_l2(d, m) <= 1e-4);
        CHECK(relative_l2(c, m) <= 1e-4);
    }
    SUBCASE("boundary") {
        const auto s = build(KernelSpec::exponential(-1.0), -1.0, 6, 1.0, 2000, {"left"});
        ForcingSpec f{harmonic(6), {}, left_boundary_control(s.grid(), 0.1)};
        const auto d = simulate_direct(s, f);
        const auto m = simulate_maccamy(s, f);
        const auto c = simulate_closedform(s, f);
        CHECK(relative_l2(d, m) <= 1e-4);
        CHECK(relative_l2(c, m) <= 1e-4);
        CHECK(m.endpoint_admissible);
        CHECK_NOTHROW((void)m.terminal());
    }
}

TEST_CASE("memoryless forced solution by variation of constants") {
    // θ' = -θ + cos(3t) φ₁-coupling with θ(0) = 0; coupling of φ₁ with itself is 1 on ω = Ω.
    const auto s = build(KernelSpec::zero(), 0.0, 1, 1.0, 2000);
    ForcingSpec f{{0.0}, distributed_phi1(*s.basis, s.grid()), {}};
    const auto exact = [](double t) {
        return (std::cos(3.0 * t) + 3.0 * std::sin(3.0 * t) - std::exp(-t)) / 10.0;
    };
    for (Route r : {Route::direct, Route::maccamy, Route::closedform}) {
        CHECK(sup_error(simulate(s, f, r).theta[0], s.grid(), exact) < 1e-6);
    }
}

TEST_CASE("linearity in initial data and forcing") {
    const auto s = build(KernelSpec::exponential(-2.0), -1.0, 4, 1.0, 400);
    const ControlSignal u = distributed_phi1(*s.basis, s.grid());
    ForcingSpec a{{1.0, 0.0, -0.5, 0.25}, {}, {}};
    ForcingSpec b{std::vector<double>(4, 0.0), u, {}};
    ForcingSpec both{a.xi, u, {}};
    for (Route r : {Route::direct, Route::maccamy, Route::closedform}) {
        const auto ta = simulate(s, a, r);
        const auto tb = simulate(s, b, r);
        const auto tab = simulate(s, both, r);
        double err = 0.0;
        for (std::size_t n = 0; n < 4; ++n) {
            for (std::size_t k = 0; k < s.grid().size(); ++k) {
                err = std::max(err, std::abs(tab.theta[n][k] - ta.theta[n][k] - tb.theta[n][k]));
            }
        }
        CHECK(err < 1e-13);
    }
}

TEST_CASE("gamma-shift covariance") {
    const auto s = build(KernelSpec::exponential(-1.0), 0.5, 5, 1.0, 1000);
    const auto grid = s.grid();
    const ForcingSpec f{harmonic(5), distributed_phi1(*s.basis, grid), {}};
    const auto base = simulate_unnormalized(s, f, Route::maccamy);
    for (double gamma : {-1.0, 0.5, 3.0}) {
        const auto shifted = gamma_shift(s, gamma);
        CHECK(shifted.a == s.a - gamma);
        CHECK(shifted.m.values[0] == s.m.values[0]);
        ForcingSpec fs = f;
        fs.distributed = scale_profiles(*f.distributed, grid, gamma);
        const auto tr = simulate_unnormalized(shifted, fs, Route::maccamy);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t n = 0; n < 5; ++n) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double expect = std::exp(-gamma * grid.node(k)) * base.theta[n][k];
                num += (tr.theta[n][k] - expect) * (tr.theta[n][k] - expect);
                den += expect * expect;
            }
        }
        CHECK(std::sqrt(num / den) <= 1e-8);
    }
}

TEST_CASE("semigroup property without memory") {
    const auto s = build(KernelSpec::zero(), 0.0, 5, 1.0, 1000);
    const auto full = simulate_maccamy(s, ForcingSpec{harmonic(5), {}, {}});
    const auto mid = full.at(400);
    const auto rest = build(KernelSpec::zero(), 0.0, 5, 0.6, 600);
    const auto tail = simulate_maccamy(rest, ForcingSpec{mid, {}, {}});
    for (std::size_t n = 0; n < 5; ++n) {
        CHECK(std::abs(tail.theta[n].back() - full.theta[n].back()) <= 1e-8 * std::abs(full.theta[n].back()) + 1e-15);
    }
}

TEST_CASE("endpoint admissibility and continuity at T") {
    const auto s = build(KernelSpec::exponential(-1.0), -1.0, 4, 1.0, 200, {"left"});
    ForcingSpec active{std::vector<double>(4, 0.0), {}, left_boundary_control(s.grid(), 0.0)};
    // A profile that is still on at T.
    auto& p = active.boundary->profiles[0];
    std::fill(p.begin(), p.end(), 1.0);
    const auto tr = simulate_maccamy(s, active);
    CHECK_FALSE(tr.endpoint_admissible);
    CHECK_THROWS_AS((void)tr.terminal(), PreconditionError);

    auto last_increment = [](std::size_t steps) {
        const auto sys = build(KernelSpec::exponential(-1.0), -1.0, 4, 1.0, steps, {"left"});
        ForcingSpec f{std::vector<double>(4, 0.0), {}, left_boundary_control(sys.grid(), 0.1)};
        const auto t = simulate_maccamy(sys, f);
        double inc = 0.0;
        for (const auto& row : t.theta) {
            inc = std::max(inc, std::abs(row[steps] - row[steps - 1]));
        }
        return inc;
    };
    const double ratio = last_increment(400) / last_increment(800);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("at-most-one control and shape checks") {
    const auto s = build(KernelSpec::zero(), 0.0, 2, 1.0, 100, {"left"});
    ForcingSpec both{{0.0, 0.0}, distributed_phi1(*s.basis, s.grid()), left_boundary_control(s.grid(), 0.1)};
    CHECK_THROWS_AS(both.validate(s.grid()), ConfigError);
    ForcingSpec bad{{0.0, 0.0}, distributed_phi1(*s.basis, s.grid()), {}};
    bad.distributed->profiles[0].pop_back();
    CHECK_THROWS_AS(bad.validate(s.grid()), ConfigError);
}

TEST_CASE("state_at") {
    const auto s = build(KernelSpec::zero(), 0.0, 3, 1.0, 100);
    const ForcingSpec f{{1.0, 0.5, 0.0}, {}, {}};
    const auto tr = simulate_maccamy(s, f);
    const std::vector<double> pts{0.3, 1.0, 2.5};
    const auto v0 = state_at(tr, *s.basis, 0, pts);
    const auto ref = spectral::synthesize(f.xi, *s.basis, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(v0[i] == doctest::Approx(ref[i]));
    }
    const auto v1 = state_at(tr, *s.basis, 100, pts);
    const std::vector<double> decayed{std::exp(-1.0), 0.5 * std::exp(-4.0), 0.0};
    const auto ref1 = spectral::synthesize(decayed, *s.basis, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(v1[i] == doctest::Approx(ref1[i]).epsilon(1e-10));
    }
    CHECK_THROWS((void)state_at(tr, *s.basis, 101, pts));
}

TEST_CASE("boundary sign against a finite-difference heat solve") {
    // u_t = u_xx on (0, π), u(0, t) = f(t), u(π, t) = 0, u(x, 0) = 0; Crank-Nicolson in time.
    const std::size_t steps = 2000;
    const auto s = build(KernelSpec::zero(), 0.0, 5, 1.0, steps, {"left"});
    const ForcingSpec f{std::vector<double>(5, 0.0), {}, left_boundary_control(s.grid(), 0.1)};
    const auto theta = simulate_closedform(s, f).terminal();

    const std::size_t nx = 800;
    const double dx = pi / nx;
    const double dt = s.grid().step();
    const double r = dt / (dx * dx);
    const auto& prof = f.boundary->profiles[0];
    std::vector<double> u(nx - 1, 0.0);
    std::vector<double> rhs(nx - 1);
    std::vector<double> c(nx - 1);
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double left = i == 0 ? prof[k] : u[i - 1];
            const double right = i + 2 == nx ? 0.0 : u[i + 1];
            rhs[i] = u[i] + 0.5 * r * (left - 2.0 * u[i] + right);
        }
        rhs[0] += 0.5 * r * prof[k + 1];
        // Thomas algorithm for the constant tridiagonal (−r/2, 1 + r, −r/2).
        const double a = -0.5 * r;
        const double b = 1.0 + r;
        c[0] = a / b;
        rhs[0] /= b;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double m = b - a * c[i - 1];
            c[i] = a / m;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / m;
        }
        u[nx - 2] = rhs[nx - 2];
        for (std::size_t i = nx - 2; i-- > 0;) {
            u[i] = rhs[i] - c[i] * u[i + 1];
        }
    }
    for (std::size_t n = 0; n < 5; ++n) {
        double proj = 0.0;
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double x = (i + 1) * dx;
            proj += dx * u[i] * std::sqrt(2.0 / pi) * std::sin((n + 1) * x);
        }
        CHECK(std::abs(theta[n] - proj) <= 1e-3 * std::abs(theta[0]));
    }
    CHECK(theta[0] > 0.0);
}
