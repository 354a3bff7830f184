#include "memheat/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>

#include "memheat/errors.hpp"
#include "memheat/obstruction.hpp"
#include "memheat/simulator.hpp"
#include "memheat/volterra.hpp"

namespace memheat::experiment {

namespace fs = std::filesystem;
using nlohmann::json;
using simulator::ControlKind;

namespace {

// ---- field access ----------------------------------------------------------------------

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        field_error(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.contains(key)) {
            field_error(join(path, key), "unknown field");
        }
    }
}

double number_at(const json& obj, const std::string& key, const std::string& path, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    return parse_scalar(obj.at(key), join(path, key));
}

std::size_t count_of(const json& v, const std::string& field, std::size_t min_value) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        field_error(field, "expected an integer");
    }
    const auto x = v.get<long long>();
    if (x < static_cast<long long>(min_value)) {
        field_error(field, "must be at least " + std::to_string(min_value));
    }
    return static_cast<std::size_t>(x);
}

std::size_t count_at(const json& obj, const std::string& key, const std::string& path,
                     std::size_t fallback, std::size_t min_value) {
    if (!obj.contains(key)) {
        return fallback;
    }
    return count_of(obj.at(key), join(path, key), min_value);
}

std::string string_at(const json& obj, const std::string& key, const std::string& path,
                      const std::string& fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_string()) {
        field_error(join(path, key), "expected a string");
    }
    return obj.at(key).get<std::string>();
}

bool bool_at(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_boolean()) {
        field_error(join(path, key), "expected true or false");
    }
    return obj.at(key).get<bool>();
}

std::vector<double> numbers_of(const json& v, const std::string& field) {
    if (!v.is_array()) {
        field_error(field, "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(parse_scalar(v[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::vector<std::size_t> counts_of(const json& v, const std::string& field, bool increasing) {
    if (!v.is_array() || v.empty()) {
        field_error(field, "expected a non-empty array of integers");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(count_of(v[i], field + "[" + std::to_string(i) + "]", 1));
        if (increasing && i > 0 && out[i] <= out[i - 1]) {
            field_error(field, "must be strictly increasing");
        }
    }
    return out;
}

// Initial data or target: "harmonic", "zero" or an explicit array.
std::vector<double> coefficients_of(const json& v, const std::string& field) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "harmonic") {
            return {};
        }
        if (s == "zero") {
            return {0.0};
        }
        field_error(field, "expected \"harmonic\", \"zero\" or an array");
    }
    return numbers_of(v, field);
}

ControlKind kind_of(const json& obj, const std::string& path) {
    const auto s = string_at(obj, "kind", path, "distributed");
    if (s == "distributed") {
        return ControlKind::distributed;
    }
    if (s == "boundary") {
        return ControlKind::boundary;
    }
    field_error(join(path, "kind"), "expected \"distributed\" or \"boundary\"");
}

spectral::Region region_of(const json& v, const std::string& field, std::size_t dim) {
    check_keys(v, field, {"lower", "upper"});
    if (!v.contains("lower") || !v.contains("upper")) {
        field_error(field, "needs both lower and upper");
    }
    spectral::Region r{numbers_of(v.at("lower"), field + ".lower"),
                       numbers_of(v.at("upper"), field + ".upper")};
    if (r.lower.size() != dim || r.upper.size() != dim) {
        field_error(field, "corner dimension differs from the domain dimension");
    }
    for (std::size_t a = 0; a < dim; ++a) {
        if (!(r.lower[a] < r.upper[a])) {
            field_error(field, "lower must be below upper on every axis");
        }
    }
    return r;
}

spectral::Domain domain_of(const json& v, const std::string& field) {
    check_keys(v, field, {"lengths", "omega", "omega_tilde", "gamma"});
    if (!v.contains("lengths")) {
        field_error(field + ".lengths", "missing");
    }
    const auto lengths = numbers_of(v.at("lengths"), field + ".lengths");
    if (lengths.empty() || lengths.size() > 3) {
        field_error(field + ".lengths", "expected one to three lengths");
    }
    for (double l : lengths) {
        if (!(l > 0.0)) {
            field_error(field + ".lengths", "lengths must be positive");
        }
    }
    auto d = lengths.size() == 1 ? spectral::Domain::interval(lengths[0]) : spectral::Domain::box(lengths);
    if (v.contains("omega")) {
        d.omega = region_of(v.at("omega"), field + ".omega", d.dim());
    }
    if (v.contains("omega_tilde")) {
        d.omega_tilde = region_of(v.at("omega_tilde"), field + ".omega_tilde", d.dim());
    }
    if (v.contains("gamma")) {
        const auto& g = v.at("gamma");
        if (!g.is_array()) {
            field_error(field + ".gamma", "expected an array of face names");
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::string f = field + ".gamma[" + std::to_string(i) + "]";
            if (!g[i].is_string()) {
                field_error(f, "expected a face name");
            }
            try {
                d.gamma.push_back(spectral::parse_face(g[i].get<std::string>(), d.dim()));
            } catch (const ConfigError& e) {
                field_error(f, e.what());
            }
        }
    }
    try {
        d.validate(false);
    } catch (const ConfigError& e) {
        field_error(field, e.what());
    }
    return d;
}

// ---- run helpers -----------------------------------------------------------------------

struct Context {
    const ExperimentConfig& config;
    ExperimentResult& result;

    void emit(const std::string& name, const std::string& content) {
        write_atomic(config.output_dir / name, content);
        result.manifest.push_back(name);
    }
    void warn(std::string message) { result.warnings.push_back(std::move(message)); }
};

std::string resolve_kernel(const ExperimentConfig& c) {
    const std::string prefix = "table";
    std::string text = c.kernel;
    const auto start = text.find_first_not_of(" \t");
    if (start != std::string::npos && text.compare(start, prefix.size(), prefix) == 0) {
        auto path_start = text.find_first_not_of(" \t", start + prefix.size());
        if (path_start != std::string::npos) {
            fs::path p = text.substr(path_start);
            if (p.is_relative()) {
                p = c.base_dir / p;
            }
            text = "table " + p.string();
        }
    }
    return text;
}

simulator::MemorySystem build_system(const ExperimentConfig& c, std::size_t modes) {
    const volterra::TimeGrid grid(c.horizon, c.n_steps);
    volterra::Kernel m = volterra::KernelSpec::parse(resolve_kernel(c)).sample(grid);
    const double a = c.a.value_or(-m.values[0]);
    auto basis = std::make_shared<const spectral::SpectralBasis>(c.domain, modes, c.mode_cap);
    return simulator::make_system(std::move(m), a, std::move(basis), c.j_truncation);
}

simulator::MemorySystem normalized_system(Context& ctx, std::size_t modes) {
    auto s = build_system(ctx.config, modes);
    if (!s.normalized()) {
        s = simulator::normalize(s);
        ctx.warn("system normalized with gamma = " + format_number(s.gamma_applied));
    }
    if (!s.j.converged) {
        ctx.warn("J series hit the truncation order " + std::to_string(s.j.truncation_order()));
    }
    return s;
}

std::vector<double> harmonic(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = 1.0 / static_cast<double>(i + 1);
    }
    return v;
}

std::vector<double> sized(const std::vector<double>& given, std::size_t n, const std::string& field) {
    if (given.empty()) {
        return harmonic(n);
    }
    if (given.size() > n) {
        field_error(field, "has more entries than basis modes");
    }
    std::vector<double> out(n, 0.0);
    std::copy(given.begin(), given.end(), out.begin());
    return out;
}

void control_csv(Context& ctx, const std::string& name, const simulator::ControlSignal& u,
                 const volterra::TimeGrid& grid) {
    CsvTable t({"shape_index", "t", "value"});
    for (std::size_t m = 0; m < u.count(); ++m) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            t.add({static_cast<double>(m + 1), grid.node(k), u.profiles[m][k]});
        }
    }
    ctx.emit(name, t.str());
}

std::string metric_key(const std::string& prefix, std::size_t n) {
    return prefix + "_" + std::to_string(n);
}

// ---- experiments -----------------------------------------------------------------------

void run_resolvent(Context& ctx) {
    const auto& c = ctx.config;
    const auto s = build_system(c, 1);
    const auto& grid = s.grid();
    CsvTable t({"t", "M", "R", "L"});
    for (std::size_t k = 0; k < grid.size(); ++k) {
        t.add({grid.node(k), s.m.values[k], s.r.values[k], s.l.values[k]});
    }
    ctx.emit("resolvent.csv", t.str());

    double sup_m = 0.0;
    double sup_r = 0.0;
    double recip = 0.0;
    volterra::Kernel neg_r = s.r;
    for (auto& v : neg_r.values) {
        v = -v;
    }
    neg_r.derivative_values.reset();
    const auto back = volterra::resolvent(neg_r);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        sup_m = std::max(sup_m, std::abs(s.m.values[k]));
        sup_r = std::max(sup_r, std::abs(s.r.values[k]));
        recip = std::max(recip, std::abs(back.values[k] + s.m.values[k]));
    }
    ctx.result.metrics["R_at_T"] = s.r.values.back();
    ctx.result.metrics["sup_R"] = sup_r;
    ctx.result.metrics["reciprocity_error"] = sup_m > 0.0 ? recip / sup_m : recip;

    // Closed forms: M = c gives R = c e^{-ct}; M = e^{at} gives R = e^{(a-1)t}.
    const auto spec = volterra::KernelSpec::parse(resolve_kernel(c));
    std::optional<std::function<double(double)>> exact;
    if (spec.kind() == volterra::KernelSpec::Kind::zero) {
        exact = [](double) { return 0.0; };
    } else if (spec.kind() == volterra::KernelSpec::Kind::constant) {
        const double m0 = spec.value(0.0);
        exact = [m0](double t) { return m0 * std::exp(-m0 * t); };
    } else if (spec.kind() == volterra::KernelSpec::Kind::exponential) {
        const double rate = spec.derivative(0.0);
        exact = [rate](double t) { return std::exp((rate - 1.0) * t); };
    }
    if (exact) {
        double err = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            err = std::max(err, std::abs(s.r.values[k] - (*exact)(grid.node(k))));
        }
        ctx.result.metrics["closed_form_error"] = err;
    }
}

simulator::ControlSignal forcing_signal(const ExperimentConfig& c, const spectral::SpectralBasis& basis,
                                        const volterra::TimeGrid& grid) {
    const auto& fc = *c.simulate.forcing;
    simulator::ControlSignal u;
    u.kind = fc.kind;
    const auto profile_spec = volterra::KernelSpec::parse(fc.profile);
    const double cut = grid.t_final() * (1.0 - c.trailing_window);
    std::vector<double> profile(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.node(k);
        profile[k] = (fc.off_on_window && t > cut) ? 0.0 : profile_spec.value(t);
    }
    if (fc.kind == ControlKind::boundary) {
        if (c.domain.gamma.empty()) {
            field_error("domain.gamma", "boundary forcing needs at least one face");
        }
        u.shapes = {std::vector<double>(basis.boundary_quadrature().size(), 1.0)};
        u.profiles = {profile};
        return u;
    }
    for (std::size_t m : fc.shape_modes) {
        if (m > basis.size()) {
            field_error("simulate.forcing.shape_modes", "mode " + std::to_string(m) + " exceeds mode_count");
        }
        u.shapes.push_back(basis.sample(m - 1, basis.control_quadrature()));
        u.profiles.push_back(profile);
    }
    return u;
}

void run_simulate(Context& ctx) {
    const auto& c = ctx.config;
    const auto s = build_system(c, c.mode_count);
    const auto& grid = s.grid();
    simulator::ForcingSpec forcing;
    forcing.xi = sized(c.simulate.xi, c.mode_count, "simulate.xi");
    if (c.simulate.forcing) {
        auto u = forcing_signal(c, *s.basis, grid);
        if (u.kind == ControlKind::boundary) {
            forcing.boundary = std::move(u);
        } else {
            forcing.distributed = std::move(u);
        }
    }
    std::vector<simulator::Route> routes;
    if (c.simulate.route == "all") {
        routes = {simulator::Route::direct, simulator::Route::maccamy, simulator::Route::closedform};
    } else {
        routes = {simulator::parse_route(c.simulate.route)};
    }
    const simulator::SimulationOptions opts{c.trailing_window};
    const simulator::MemorySystem normalized = simulator::normalize(s);

    std::vector<simulator::ModalTrajectory> trajectories;
    for (auto route : routes) {
        auto tr = simulator::simulate_unnormalized(s, forcing, route, opts);
        const std::string name = simulator::route_name(route);
        CsvTable t({"mode", "t", "theta"});
        for (std::size_t n = 0; n < tr.modes(); ++n) {
            for (std::size_t k = 0; k < grid.size(); ++k) {
                t.add({static_cast<double>(n + 1), grid.node(k), tr.theta[n][k]});
            }
        }
        ctx.emit("trajectory_" + name + ".csv", t.str());
        json side = {{"route", name},
                     {"t_final", grid.t_final()},
                     {"n_steps", grid.n_steps()},
                     {"modes", tr.modes()},
                     {"kernel", s.m.label},
                     {"a", s.a},
                     {"gamma_applied", normalized.gamma_applied},
                     {"endpoint_admissible", tr.endpoint_admissible}};
        ctx.emit("trajectory_" + name + ".json", side.dump(2) + "\n");
        if (!tr.endpoint_admissible) {
            ctx.warn(name + ": boundary control active on the trailing window; θ(T) is not an admissible endpoint");
        }
        double norm = 0.0;
        for (const auto& row : tr.theta) {
            norm += row.back() * row.back();
        }
        ctx.result.metrics["theta_T_norm_" + name] = std::sqrt(norm);
        trajectories.push_back(std::move(tr));
    }
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        for (std::size_t j = i + 1; j < trajectories.size(); ++j) {
            ctx.result.metrics["rel_l2_" + simulator::route_name(routes[i]) + "_" +
                               simulator::route_name(routes[j])] =
                simulator::relative_l2(trajectories[i], trajectories[j]);
        }
    }
}

void run_control(Context& ctx) {
    const auto& c = ctx.config;
    const auto& cc = c.control;
    if (cc.mode_counts.back() > c.mode_count) {
        field_error("control.mode_counts", "largest N exceeds mode_count");
    }
    c.domain.validate(false);
    const auto s = normalized_system(ctx, c.mode_count);
    const auto& grid = s.grid();
    const auto target = sized(cc.target, c.mode_count, "control.target");

    control::SweepOptions opts;
    opts.route = simulator::parse_route(cc.route);
    opts.min_norm = c.min_norm;
    opts.kind = cc.kind;
    opts.window = cc.window;
    if (cc.kind == ControlKind::boundary && c.domain.gamma.empty()) {
        field_error("domain.gamma", "boundary control needs at least one face");
    }
    const auto rows = control::reachability_sweep(s, target, cc.mode_counts, opts);
    CsvTable t({"N", "residual", "control_norm", "gramian_cond", "spillover", "regularized"});
    bool monotone = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.add({static_cast<double>(r.n), r.residual, r.control_norm, r.gramian_cond, r.spillover,
               r.regularized ? 1.0 : 0.0});
        ctx.result.metrics[metric_key("residual", r.n)] = r.residual;
        if (r.regularized) {
            ctx.warn("N = " + std::to_string(r.n) + ": Gramian ill-conditioned (cond " +
                     format_number(r.gramian_cond) + "), Tikhonov floor applied");
        }
        if (i > 0 && r.residual >= rows[i - 1].residual) {
            monotone = false;
        }
    }
    ctx.emit("residual_curve.csv", t.str());
    ctx.result.metrics["residual_strictly_decreasing"] = monotone ? 1.0 : 0.0;

    auto moments = [&](std::size_t n) {
        return cc.kind == ControlKind::boundary
                   ? control::boundary_moments(*s.basis, n, target, c.horizon, cc.window)
                   : control::distributed_moments(*s.basis, n, target, c.horizon, cc.window);
    };
    const auto ms = moments(cc.mode_counts.back());
    const auto mn = control::min_norm_memoryless(ms, grid, c.min_norm);
    control_csv(ctx, "control.csv", mn.control, grid);
    const auto physical = cc.kind == ControlKind::boundary
                              ? control::transfer_boundary(mn.control, s.j)
                              : control::physical_from_reduced(
                                    control::transfer_distributed(mn.control, s.j), s.m);
    control_csv(ctx, "control_transferred.csv", physical, grid);
    ctx.result.metrics["moment_residual"] = mn.moment_residual;

    if (cc.perturbation_checks > 0) {
        const auto plain = simulator::make_system(volterra::KernelSpec::zero().sample(grid), 0.0, s.basis,
                                                  c.j_truncation);
        const auto ms0 = moments(cc.mode_counts.front());
        const auto mn0 = control::min_norm_memoryless(ms0, grid, c.min_norm);
        ctx.result.metrics["perturbation_max_change"] =
            control::perturbation_check(ms0, mn0, plain, c.seed, cc.perturbation_checks);
    }
}

void audit_csv(Context& ctx, const obstruction::AuditReport& rep) {
    CsvTable t({"n", "lam2_supHn", "lam4_iterated"});
    for (const auto& r : rep.rows) {
        t.add({static_cast<double>(r.n), r.lam2_sup_h, r.lam4_iterated});
    }
    ctx.emit("bound_audit.csv", t.str());
    ctx.result.metrics["audit_sup_ratio"] = rep.sup_ratio;
    ctx.result.metrics["audit_iterated_ratio"] = rep.iterated_ratio;
    ctx.result.metrics["audit_M_T"] = rep.m_t;
    ctx.result.metrics["audit_M_T_iterated"] = rep.m_t_iterated;
    ctx.result.metrics["audit_within_bounds"] = rep.within_bounds ? 1.0 : 0.0;
}

void run_audit(Context& ctx) {
    const auto& c = ctx.config;
    if (c.audit.last > c.mode_count) {
        field_error("audit.last", "exceeds mode_count");
    }
    const auto s = normalized_system(ctx, c.mode_count);
    audit_csv(ctx, obstruction::hn_bound_audit(s, c.horizon, c.audit.first, c.audit.last));
}

void run_obstruct(Context& ctx) {
    const auto& c = ctx.config;
    const auto& oc = c.obstruct;
    try {
        c.domain.validate(true);
    } catch (const ConfigError& e) {
        field_error("domain", e.what());
    }
    if (!c.domain.omega_tilde) {
        field_error("domain.omega_tilde", "required for the obstruction experiment");
    }
    if (oc.center.size() != c.domain.dim()) {
        field_error("obstruct.center", "dimension differs from the domain dimension");
    }
    const std::size_t max_n = std::max(oc.threshold_max_n, oc.audit_last);
    if (max_n > c.mode_count) {
        field_error("mode_count", "must cover obstruct.threshold_max_n and obstruct.audit_last");
    }

    // Rough target and its decay diagnostic on a fine basis.
    const spectral::SpectralBasis fine(c.domain, std::max(oc.fit_modes, oc.mode_counts.back()),
                                       std::max(c.mode_cap, oc.fit_modes));
    const auto rough = obstruction::build_rough_target(fine, oc.center, oc.radius);
    spectral::DecayFit fit{};
    bool have_fit = false;
    if (fine.size() >= 16) {
        fit = spectral::sobolev_decay_fit(rough.eta, fine, c.decay_fit_blocks);
        have_fit = true;
    }

    // Cost blow-up.
    const spectral::SpectralBasis coarse(c.domain, oc.mode_counts.back(), c.mode_cap);
    obstruction::RoughTarget truncated = rough;
    truncated.eta.resize(coarse.size());
    truncated.d.resize(coarse.size());
    obstruction::BlowupOptions bo;
    bo.reference_n = oc.reference_n;
    bo.min_norm = c.min_norm;
    const auto blow = obstruction::blowup_experiment(coarse, c.horizon, truncated, oc.mode_counts, bo);
    CsvTable cost({"N", "cost_rough", "cost_smooth", "gramian_cond", "regularized"});
    for (const auto& r : blow.rows) {
        cost.add({static_cast<double>(r.n), r.cost_rough, r.cost_smooth, r.gramian_cond,
                  r.regularized ? 1.0 : 0.0});
        if (r.regularized) {
            ctx.warn("N = " + std::to_string(r.n) + ": Gramian ill-conditioned (cond " +
                     format_number(r.gramian_cond) + "), Tikhonov floor applied");
        }
    }
    ctx.emit("cost_curve.csv", cost.str());

    // Threshold, ξ solve round trip and bound audit on the memory system.
    const auto s = normalized_system(ctx, c.mode_count);
    const auto z = obstruction::find_threshold_N(s, c.horizon, oc.threshold_max_n, oc.r_zero_tol);
    CsvTable beta({"n", "beta", "scaled_beta"});
    for (std::size_t n = 0; n < z.beta.size(); ++n) {
        beta.add({static_cast<double>(n + 1), z.beta[n], z.scaled_beta[n]});
    }
    ctx.emit("beta_profile.csv", beta.str());
    if (z.threshold) {
        std::vector<double> d(rough.d.begin(), rough.d.begin() + static_cast<std::ptrdiff_t>(oc.threshold_max_n));
        const auto xi = obstruction::solve_xi_for_coefficients(s, c.horizon, d, *z.threshold);
        double worst = 0.0;
        for (std::size_t n = *z.threshold - 1; n < oc.threshold_max_n; ++n) {
            const double want = d[n] / s.basis->lambda_sq(n);
            if (want != 0.0) {
                worst = std::max(worst, std::abs(obstruction::zero_control_rhs(s, xi[n], c.horizon, n) - want) /
                                            std::abs(want));
            }
        }
        ctx.result.metrics["xi_roundtrip_error"] = worst;
    } else {
        ctx.warn("threshold detection: " + z.outcome);
    }
    audit_csv(ctx, obstruction::hn_bound_audit(s, c.horizon, oc.audit_first, oc.audit_last));

    json verdict = {{"blowup_ratio", blow.blowup_ratio},
                    {"smooth_ratio", blow.smooth_ratio},
                    {"threshold_N", z.threshold ? json(*z.threshold) : json(nullptr)},
                    {"R_at_T", z.r_at_t},
                    {"outcome", z.outcome},
                    {"decay_exponent", have_fit ? json(fit.exponent) : json(nullptr)}};
    ctx.emit("verdict.json", verdict.dump(2) + "\n");
    ctx.result.metrics["blowup_ratio"] = blow.blowup_ratio;
    ctx.result.metrics["smooth_ratio"] = blow.smooth_ratio;
    ctx.result.metrics["R_at_T"] = z.r_at_t;
    if (z.threshold) {
        ctx.result.metrics["threshold_N"] = static_cast<double>(*z.threshold);
    }
    if (have_fit) {
        ctx.result.metrics["decay_exponent"] = fit.exponent;
    }
}

}  // namespace

double parse_scalar(const json& value, const std::string& field) {
    if (value.is_number()) {
        const double v = value.get<double>();
        if (!std::isfinite(v)) {
            field_error(field, "must be finite");
        }
        return v;
    }
    if (!value.is_string()) {
        field_error(field, "expected a number");
    }
    std::string s;
    for (char ch : value.get<std::string>()) {
        if (ch != ' ') {
            s += ch;
        }
    }
    auto to_double = [&](const std::string& text) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            field_error(field, "cannot parse '" + value.get<std::string>() + "'");
        }
        if (used != text.size()) {
            field_error(field, "cannot parse '" + value.get<std::string>() + "'");
        }
        return v;
    };
    const auto p = s.find("pi");
    if (p == std::string::npos) {
        return to_double(s);
    }
    std::string coef = s.substr(0, p);
    if (!coef.empty() && coef.back() == '*') {
        coef.pop_back();
    }
    double v = std::numbers::pi * (coef.empty() ? 1.0 : coef == "-" ? -1.0 : to_double(coef));
    const std::string rest = s.substr(p + 2);
    if (!rest.empty()) {
        if (rest.front() != '/') {
            field_error(field, "cannot parse '" + value.get<std::string>() + "'");
        }
        const double den = to_double(rest.substr(1));
        if (den == 0.0) {
            field_error(field, "division by zero");
        }
        v /= den;
    }
    return v;
}

ExperimentConfig parse_config(const json& doc, const std::string& kind, const fs::path& base_dir) {
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
        throw ConfigError("unknown experiment kind '" + kind + "'");
    }
    check_keys(doc, "",
               {"experiment", "description", "domain", "kernel", "a", "horizon", "n_steps", "mode_count",
                "mode_cap", "seed", "output_dir", "j_truncation", "trailing_window", "min_norm",
                "decay_fit_blocks", "simulate", "control", "obstruct", "audit"});
    ExperimentConfig c;
    c.experiment = string_at(doc, "experiment", "", kind);
    if (c.experiment != kind) {
        field_error("experiment", "is '" + c.experiment + "' but the '" + kind + "' subcommand was invoked");
    }
    c.base_dir = base_dir;
    if (doc.contains("domain")) {
        c.domain = domain_of(doc.at("domain"), "domain");
    }
    c.kernel = string_at(doc, "kernel", "", c.kernel);
    try {
        (void)volterra::KernelSpec::parse(resolve_kernel(c));
    } catch (const ConfigError& e) {
        field_error("kernel", e.what());
    }
    if (doc.contains("a") && !doc.at("a").is_null()) {
        c.a = parse_scalar(doc.at("a"), "a");
    }
    c.horizon = number_at(doc, "horizon", "", c.horizon);
    if (!(c.horizon > 0.0)) {
        field_error("horizon", "must be positive");
    }
    c.n_steps = count_at(doc, "n_steps", "", c.n_steps, 2);
    c.mode_count = count_at(doc, "mode_count", "", c.mode_count, 1);
    c.mode_cap = count_at(doc, "mode_cap", "", c.mode_cap, 1);
    if (doc.contains("seed")) {
        const auto& v = doc.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            field_error("seed", "expected a non-negative integer");
        }
        c.seed = v.get<std::uint64_t>();
    }
    c.output_dir = string_at(doc, "output_dir", "", c.output_dir.string());
    if (c.output_dir.is_relative()) {
        c.output_dir = base_dir / c.output_dir;
    }
    c.j_truncation = count_at(doc, "j_truncation", "", c.j_truncation, 1);
    c.trailing_window = number_at(doc, "trailing_window", "", c.trailing_window);
    if (!(c.trailing_window >= 0.0 && c.trailing_window < 1.0)) {
        field_error("trailing_window", "must lie in [0, 1)");
    }
    if (doc.contains("min_norm")) {
        const auto& mn = doc.at("min_norm");
        check_keys(mn, "min_norm", {"cond_threshold", "tikhonov_scale"});
        c.min_norm.cond_threshold = number_at(mn, "cond_threshold", "min_norm", c.min_norm.cond_threshold);
        c.min_norm.tikhonov_scale = number_at(mn, "tikhonov_scale", "min_norm", c.min_norm.tikhonov_scale);
        if (!(c.min_norm.cond_threshold > 1.0)) {
            field_error("min_norm.cond_threshold", "must exceed 1");
        }
        if (!(c.min_norm.tikhonov_scale >= 0.0)) {
            field_error("min_norm.tikhonov_scale", "must be non-negative");
        }
    }
    c.decay_fit_blocks = count_at(doc, "decay_fit_blocks", "", c.decay_fit_blocks, 2);

    if (doc.contains("simulate")) {
        const auto& v = doc.at("simulate");
        check_keys(v, "simulate", {"route", "xi", "forcing"});
        c.simulate.route = string_at(v, "route", "simulate", c.simulate.route);
        if (c.simulate.route != "all") {
            try {
                (void)simulator::parse_route(c.simulate.route);
            } catch (const ConfigError& e) {
                field_error("simulate.route", e.what());
            }
        }
        if (v.contains("xi")) {
            c.simulate.xi = coefficients_of(v.at("xi"), "simulate.xi");
        }
        if (v.contains("forcing")) {
            const auto& f = v.at("forcing");
            check_keys(f, "simulate.forcing", {"kind", "shape_modes", "profile", "off_on_window"});
            ForcingConfig fc;
            fc.kind = kind_of(f, "simulate.forcing");
            if (f.contains("shape_modes")) {
                fc.shape_modes = counts_of(f.at("shape_modes"), "simulate.forcing.shape_modes", false);
            }
            fc.profile = string_at(f, "profile", "simulate.forcing", fc.profile);
            try {
                const auto spec = volterra::KernelSpec::parse(fc.profile);
                if (!spec.analytic()) {
                    field_error("simulate.forcing.profile", "must be a closed form");
                }
            } catch (const ConfigError& e) {
                field_error("simulate.forcing.profile", e.what());
            }
            fc.off_on_window = bool_at(f, "off_on_window", "simulate.forcing", fc.kind == ControlKind::boundary);
            c.simulate.forcing = fc;
        }
    }
    if (doc.contains("control")) {
        const auto& v = doc.at("control");
        check_keys(v, "control", {"kind", "mode_counts", "target", "route", "window", "perturbation_checks"});
        c.control.kind = kind_of(v, "control");
        if (v.contains("mode_counts")) {
            c.control.mode_counts = counts_of(v.at("mode_counts"), "control.mode_counts", true);
        }
        if (v.contains("target")) {
            c.control.target = coefficients_of(v.at("target"), "control.target");
        }
        c.control.route = string_at(v, "route", "control", c.control.route);
        try {
            (void)simulator::parse_route(c.control.route);
        } catch (const ConfigError& e) {
            field_error("control.route", e.what());
        }
        const double default_window = c.control.kind == ControlKind::boundary ? c.trailing_window * c.horizon : 0.0;
        c.control.window = number_at(v, "window", "control", default_window);
        if (!(c.control.window >= 0.0 && c.control.window < c.horizon)) {
            field_error("control.window", "must lie in [0, horizon)");
        }
        if (v.contains("perturbation_checks")) {
            c.control.perturbation_checks = static_cast<int>(count_of(v.at("perturbation_checks"),
                                                                      "control.perturbation_checks", 0));
        }
    }
    if (doc.contains("obstruct")) {
        const auto& v = doc.at("obstruct");
        check_keys(v, "obstruct", {"center", "radius", "mode_counts", "fit_modes", "reference_n",
                                   "threshold_max_n", "r_zero_tol", "audit_first", "audit_last"});
        auto& o = c.obstruct;
        if (v.contains("center")) {
            o.center = numbers_of(v.at("center"), "obstruct.center");
        }
        o.radius = number_at(v, "radius", "obstruct", o.radius);
        if (!(o.radius > 0.0)) {
            field_error("obstruct.radius", "must be positive");
        }
        if (v.contains("mode_counts")) {
            o.mode_counts = counts_of(v.at("mode_counts"), "obstruct.mode_counts", true);
        }
        o.fit_modes = count_at(v, "fit_modes", "obstruct", o.fit_modes, 16);
        o.reference_n = count_at(v, "reference_n", "obstruct", o.reference_n, 1);
        o.threshold_max_n = count_at(v, "threshold_max_n", "obstruct", o.threshold_max_n, 1);
        o.r_zero_tol = number_at(v, "r_zero_tol", "obstruct", o.r_zero_tol);
        o.audit_first = count_at(v, "audit_first", "obstruct", o.audit_first, 1);
        o.audit_last = count_at(v, "audit_last", "obstruct", o.audit_last, 1);
        if (o.audit_first > o.audit_last) {
            field_error("obstruct.audit_first", "must not exceed audit_last");
        }
    }
    if (kind == "obstruct" && c.obstruct.center.empty()) {
        field_error("obstruct.center", "missing");
    }
    if (doc.contains("audit")) {
        const auto& v = doc.at("audit");
        check_keys(v, "audit", {"first", "last"});
        c.audit.first = count_at(v, "first", "audit", c.audit.first, 1);
        c.audit.last = count_at(v, "last", "audit", c.audit.last, 1);
        if (c.audit.first > c.audit.last) {
            field_error("audit.first", "must not exceed audit.last");
        }
    }
    return c;
}

void apply(ExperimentConfig& config, const Overrides& o) {
    if (o.output_dir) {
        config.output_dir = *o.output_dir;
    }
    if (o.n_steps) {
        if (*o.n_steps < 2) {
            throw ConfigError("--steps must be at least 2");
        }
        config.n_steps = *o.n_steps;
    }
    if (o.mode_count) {
        if (*o.mode_count < 1) {
            throw ConfigError("--modes must be at least 1");
        }
        config.mode_count = *o.mode_count;
    }
    if (o.seed) {
        config.seed = *o.seed;
    }
}

ExperimentConfig load_config(const fs::path& path, const std::string& kind, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto c = parse_config(doc, kind, path.parent_path());
    apply(c, overrides);
    return c;
}

std::string describe_defaults() {
    const ExperimentConfig c;
    std::ostringstream s;
    s << "Config defaults (JSON keys):\n"
      << "  domain.lengths: [pi]   kernel: \"" << c.kernel << "\"   a: -M(0)\n"
      << "  horizon: " << c.horizon << "   n_steps: " << c.n_steps << "   mode_count: " << c.mode_count
      << "   mode_cap: " << c.mode_cap << "   seed: " << c.seed << "\n"
      << "  j_truncation: " << c.j_truncation << "   trailing_window: " << c.trailing_window
      << " (fraction of T)   decay_fit_blocks: " << c.decay_fit_blocks << "\n"
      << "  min_norm.cond_threshold: " << c.min_norm.cond_threshold
      << "   min_norm.tikhonov_scale: " << c.min_norm.tikhonov_scale << "\n"
      << "  simulate: route \"all\", xi \"harmonic\"\n"
      << "  control: kind distributed, mode_counts [5,10,20,40], target \"harmonic\", route maccamy,\n"
      << "           window 0 (boundary: trailing_window * T), perturbation_checks 3\n"
      << "  obstruct: radius 0.3, mode_counts [5,10,20,30,40], fit_modes 1024, reference_n 10,\n"
      << "            threshold_max_n 50, r_zero_tol 1e-6, audit_first 1, audit_last 50\n"
      << "  audit: first 1, last 50\n";
    return s.str();
}

ExperimentResult run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.experiment = config.experiment;
    Context ctx{config, result};
    fs::create_directories(config.output_dir);
    if (config.experiment == "resolvent") {
        run_resolvent(ctx);
    } else if (config.experiment == "simulate") {
        run_simulate(ctx);
    } else if (config.experiment == "control") {
        run_control(ctx);
    } else if (config.experiment == "obstruct") {
        run_obstruct(ctx);
    } else if (config.experiment == "audit") {
        run_audit(ctx);
    } else {
        throw ConfigError("unknown experiment kind '" + config.experiment + "'");
    }
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json metrics = json::object();
    for (const auto& [k, v] : result.metrics) {
        metrics[k] = v;
    }
    json doc = {{"experiment", result.experiment},
                {"metrics", metrics},
                {"manifest", result.manifest},
                {"wall_time_s", result.wall_time},
                {"warnings", result.warnings},
                {"seed", config.seed},
                {"settings",
                 {{"kernel", config.kernel},
                  {"horizon", config.horizon},
                  {"n_steps", config.n_steps},
                  {"mode_count", config.mode_count}}}};
    write_atomic(config.output_dir / "result.json", doc.dump(2) + "\n");
    return result;
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        text_ += (i ? "," : "") + header[i];
    }
    text_ += "\n";
}

void CsvTable::add(const std::vector<double>& row) {
    if (row.size() != columns_) {
        throw PreconditionError("CsvTable: row width differs from the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) {
            text_ += ',';
        }
        text_ += format_number(row[i]);
    }
    text_ += '\n';
}

std::string CsvTable::str() const { return text_; }

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ConfigError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        out.flush();
        if (!out) {
            throw ConfigError("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

}  // namespace memheat::experiment
