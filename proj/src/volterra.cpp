#include "memheat/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "memheat/errors.hpp"

namespace memheat::volterra {

TimeGrid::TimeGrid(double t_final, std::size_t n_steps) : t_final_(t_final), n_steps_(n_steps) {
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
        throw ConfigError("time grid: t_final must be positive and finite");
    }
    if (n_steps < 2) {
        throw ConfigError("time grid: n_steps must be at least 2");
    }
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = node(k);
    }
    return out;
}

std::size_t TimeGrid::index_of(double t) const {
    const double h = step();
    const double k = std::round(t / h);
    if (k < 0.0 || k > static_cast<double>(n_steps_) ||
        std::abs(k * h - t) > 1e-9 * std::max(1.0, t_final_)) {
        throw ConfigError("time " + std::to_string(t) + " is not a node of the grid");
    }
    return static_cast<std::size_t>(k);
}

Kernel::Kernel(TimeGrid grid_, std::vector<double> values_, std::string label_,
               std::optional<std::vector<double>> derivative_values_)
    : grid(grid_),
      values(std::move(values_)),
      derivative_values(std::move(derivative_values_)),
      label(std::move(label_)) {
    if (values.size() != grid.size()) {
        throw ConfigError("kernel '" + label + "': expected " + std::to_string(grid.size()) +
                          " samples, got " + std::to_string(values.size()));
    }
    if (derivative_values && derivative_values->size() != values.size()) {
        throw ConfigError("kernel '" + label + "': derivative length mismatch");
    }
}

// ---------------------------------------------------------------------------
// KernelSpec

namespace {

double parse_number(const std::string& token, std::string_view context) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size() || !std::isfinite(value)) {
        throw ConfigError("kernel '" + std::string(context) + "': '" + token +
                          "' is not a number");
    }
    return value;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

KernelSpec KernelSpec::parse(std::string_view text) {
    std::istringstream is{std::string(text)};
    std::vector<std::string> tokens;
    for (std::string tok; is >> tok;) {
        tokens.push_back(tok);
    }
    if (tokens.empty()) {
        throw ConfigError("kernel: empty specification");
    }
    const std::string& name = tokens.front();
    auto expect = [&](std::size_t n) {
        if (tokens.size() != n + 1) {
            throw ConfigError("kernel '" + std::string(text) + "': expected " + std::to_string(n) +
                              " argument(s)");
        }
    };
    if (name == "zero") {
        expect(0);
        return zero();
    }
    if (name == "constant") {
        expect(1);
        return constant(parse_number(tokens[1], text));
    }
    if (name == "exp") {
        expect(1);
        return exponential(parse_number(tokens[1], text));
    }
    if (name == "poly") {
        expect(3);
        return polynomial(parse_number(tokens[1], text), parse_number(tokens[2], text),
                          parse_number(tokens[3], text));
    }
    if (name == "table") {
        expect(1);
        return table(tokens[1]);
    }
    throw ConfigError("kernel: unknown closed form '" + name + "'");
}

std::string KernelSpec::label() const {
    switch (kind_) {
        case Kind::zero: return "zero";
        case Kind::constant: return "constant " + format_number(params_[0]);
        case Kind::exponential: return "exp " + format_number(params_[0]);
        case Kind::polynomial:
            return "poly " + format_number(params_[0]) + " " + format_number(params_[1]) + " " +
                   format_number(params_[2]);
        case Kind::table: return "table " + path_;
    }
    return {};
}

double KernelSpec::value(double t) const {
    switch (kind_) {
        case Kind::zero: return 0.0;
        case Kind::constant: return params_[0];
        case Kind::exponential: return std::exp(params_[0] * t);
        case Kind::polynomial: return params_[0] + t * (params_[1] + t * params_[2]);
        case Kind::table: break;
    }
    throw PreconditionError("kernel: tabulated kernels have no pointwise closed form");
}

double KernelSpec::derivative(double t) const {
    switch (kind_) {
        case Kind::zero:
        case Kind::constant: return 0.0;
        case Kind::exponential: return params_[0] * std::exp(params_[0] * t);
        case Kind::polynomial: return params_[1] + 2.0 * params_[2] * t;
        case Kind::table: break;
    }
    throw PreconditionError("kernel: tabulated kernels have no pointwise derivative");
}

Kernel KernelSpec::sample(const TimeGrid& grid) const {
    if (kind_ == Kind::table) {
        const TableColumns table = read_table(path_);
        if (table.t.size() != grid.size()) {
            throw ConfigError("kernel table '" + path_ + "' has " + std::to_string(table.t.size()) +
                              " rows; the grid has " + std::to_string(grid.size()) + " nodes");
        }
        const double tol = 1e-9 * std::max(1.0, grid.t_final());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (std::abs(table.t[k] - grid.node(k)) > tol) {
                throw ConfigError("kernel table '" + path_ + "': row " + std::to_string(k + 1) +
                                  " is not at grid node t = " + format_number(grid.node(k)));
            }
        }
        return Kernel(grid, table.value, label());
    }
    std::vector<double> v(grid.size());
    std::vector<double> d(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        v[k] = value(grid.node(k));
        d[k] = derivative(grid.node(k));
    }
    return Kernel(grid, std::move(v), label(), std::move(d));
}

TableColumns read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open table '" + path + "'");
    }
    TableColumns out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 't,value'");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string a = trim(line.substr(0, comma));
        const std::string b = trim(line.substr(comma + 1));
        try {
            std::size_t ua = 0;
            std::size_t ub = 0;
            const double t = std::stod(a, &ua);
            const double v = std::stod(b, &ub);
            if (ua != a.size() || ub != b.size()) {
                throw std::invalid_argument("trailing characters");
            }
            out.t.push_back(t);
            out.value.push_back(v);
        } catch (const std::exception&) {
            if (out.t.empty() && line_no == 1) {
                continue;  // header
            }
            throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// TwoVarKernel

TwoVarKernel::TwoVarKernel(TimeGrid grid, std::size_t truncation_order)
    : grid_(grid),
      truncation_order_(truncation_order),
      values_(grid.size() * (grid.size() + 1) / 2, 0.0) {
    if (truncation_order == 0) {
        throw ConfigError("two-variable kernel: truncation_order must be at least 1");
    }
}

// ---------------------------------------------------------------------------
// Quadrature primitives

double convolve_at(std::span<const double> a, std::span<const double> b, double step,
                   std::size_t k) {
    if (k == 0) {
        return 0.0;
    }
    double s = 0.5 * (a[k] * b[0] + a[0] * b[k]);
    for (std::size_t j = 1; j < k; ++j) {
        s += a[k - j] * b[j];
    }
    return step * s;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b, double step) {
    if (a.size() != b.size()) {
        throw ConfigError("convolve: operands sampled on different grids");
    }
    std::vector<double> out(a.size(), 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) {
        out[k] = convolve_at(a, b, step, k);
    }
    return out;
}

ExpWeights exp_weights(double rate, double step) {
    const double p = rate * step;
    double total = 0.0;  // ∫_0^1 e^{-p(1-x)} dx
    double right = 0.0;  // ∫_0^1 x e^{-p(1-x)} dx
    if (std::abs(p) < 1e-2) {
        total = 1.0 - p / 2.0 + p * p / 6.0 - p * p * p / 24.0 + p * p * p * p / 120.0;
        right = 0.5 - p / 6.0 + p * p / 24.0 - p * p * p / 120.0 + p * p * p * p / 720.0;
    } else {
        const double em1 = std::expm1(-p);
        total = -em1 / p;
        right = (p + em1) / (p * p);
    }
    return {step * (total - right), step * right, std::exp(-p)};
}

std::vector<double> exp_convolve(std::span<const double> f, double rate, double step) {
    const ExpWeights w = exp_weights(rate, step);
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 0; k + 1 < f.size(); ++k) {
        out[k + 1] = w.decay * out[k] + w.left * f[k] + w.right * f[k + 1];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solvers

std::vector<double> solve_second_kind(const Kernel& kernel, std::span<const double> forcing) {
    const auto& k = kernel.values;
    if (forcing.size() != k.size()) {
        throw ConfigError("solve_second_kind: forcing is not sampled on the kernel grid");
    }
    const double h = kernel.grid.step();
    const double denom = 1.0 + 0.5 * h * k[0];
    std::vector<double> y(k.size(), 0.0);
    y[0] = forcing[0];
    if (k.size() > 1 && std::abs(denom) < 1e-14) {
        throw SingularStepError(1);
    }
    for (std::size_t n = 1; n < k.size(); ++n) {
        double s = 0.5 * k[n] * y[0];
        for (std::size_t j = 1; j < n; ++j) {
            s += k[n - j] * y[j];
        }
        y[n] = (forcing[n] - h * s) / denom;
    }
    return y;
}

std::vector<double> solve_second_kind(const TwoVarKernel& kernel,
                                      std::span<const double> forcing) {
    const std::size_t size = kernel.grid().size();
    if (forcing.size() != size) {
        throw ConfigError("solve_second_kind: forcing is not sampled on the kernel grid");
    }
    const double h = kernel.grid().step();
    std::vector<double> y(size, 0.0);
    y[0] = forcing[0];
    for (std::size_t n = 1; n < size; ++n) {
        const auto row = kernel.row(n);
        const double denom = 1.0 + 0.5 * h * row[n];
        if (std::abs(denom) < 1e-14) {
            throw SingularStepError(n);
        }
        double s = 0.5 * row[0] * y[0];
        for (std::size_t j = 1; j < n; ++j) {
            s += row[j] * y[j];
        }
        y[n] = (forcing[n] - h * s) / denom;
    }
    return y;
}

Kernel resolvent(const Kernel& m) {
    std::vector<double> r = solve_second_kind(m, m.values);
    std::optional<std::vector<double>> dr;
    if (m.derivative_values) {
        // Differentiating R = M - M * R gives R' = M' - M(0) R - M' * R.
        const auto& dm = *m.derivative_values;
        const std::vector<double> dm_r = convolve(dm, r, m.grid.step());
        std::vector<double> d(r.size());
        for (std::size_t k = 0; k < r.size(); ++k) {
            d[k] = dm[k] - m.values[0] * r[k] - dm_r[k];
        }
        dr = std::move(d);
    }
    return Kernel(m.grid, std::move(r), "resolvent(" + m.label + ")", std::move(dr));
}

Kernel l_kernel(const Kernel& m, const Kernel& r) {
    if (!(m.grid == r.grid)) {
        throw ConfigError("l_kernel: M and R live on different grids");
    }
    const std::size_t n = r.values.size();
    const double h = r.grid.step();
    std::vector<double> dr(n);
    if (r.derivative_values) {
        dr = *r.derivative_values;
    } else {
        dr[0] = (r.values[1] - r.values[0]) / h;
        dr[n - 1] = (r.values[n - 1] - r.values[n - 2]) / h;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dr[k] = (r.values[k + 1] - r.values[k - 1]) / (2.0 * h);
        }
    }
    const double m0 = m.values[0];
    std::vector<double> l(n);
    for (std::size_t k = 0; k < n; ++k) {
        l[k] = dr[k] + m0 * r.values[k];
    }
    return Kernel(r.grid, std::move(l), "L(" + m.label + ")");
}

TwoVarKernel j_kernel(const Kernel& l, std::size_t truncation_order, double tolerance) {
    TwoVarKernel j(l.grid, truncation_order);
    const double t_final = l.grid.t_final();
    const double h = l.grid.step();
    double sup = 0.0;
    for (double v : l.values) {
        sup = std::max(sup, std::abs(v));
    }

    // Number of series terms from the a-priori bound (T^k sup^k / k!) (T^k / k!).
    std::size_t terms = truncation_order;
    bool converged = false;
    double bound = 1.0;
    for (std::size_t k = 1; k <= truncation_order; ++k) {
        const double kk = static_cast<double>(k);
        bound *= (t_final * sup / kk) * (t_final / kk);
        if (bound < tolerance) {
            terms = k;
            converged = true;
            break;
        }
    }
    j.terms_used = terms;
    j.converged = converged;
    if (sup == 0.0) {
        return j;
    }

    const std::size_t size = l.grid.size();
    std::vector<double> power = l.values;  // L^{*k}
    std::vector<double> s_pow(size, 1.0);  // s_j^k / k!
    for (std::size_t k = 1; k <= terms; ++k) {
        for (std::size_t c = 0; c < size; ++c) {
            s_pow[c] *= l.grid.node(c) / static_cast<double>(k);
        }
        for (std::size_t i = 0; i < size; ++i) {
            auto row = j.row(i);
            for (std::size_t c = 0; c <= i; ++c) {
                row[c] -= power[i - c] * s_pow[c];
            }
        }
        if (k < terms) {
            power = convolve(l.values, power, h);
        }
    }
    return j;
}

Kernel zn_kernel(const Kernel& l, double lambda_sq) {
    if (!(lambda_sq > 0.0)) {
        throw ConfigError("zn_kernel: lambda_sq must be positive");
    }
    std::vector<double> z = exp_convolve(l.values, lambda_sq, l.grid.step());
    for (double& v : z) {
        v = -v;
    }
    std::ostringstream label;
    label.precision(17);
    label << "Z(" << lambda_sq << ")";
    return Kernel(l.grid, std::move(z), label.str());
}

}  // namespace memheat::volterra
