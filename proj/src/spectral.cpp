#include "memheat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "memheat/errors.hpp"

namespace memheat::spectral {

namespace {

constexpr double pi = std::numbers::pi;

struct Rule1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// 10-point Gauss–Legendre on [-1, 1].
const Rule1d& reference_rule() {
    static const Rule1d rule = [] {
        using gauss = boost::math::quadrature::gauss<double, 10>;
        Rule1d r;
        const auto& x = gauss::abscissa();
        const auto& w = gauss::weights();
        for (std::size_t i = x.size(); i-- > 0;) {
            r.nodes.push_back(-x[i]);
            r.weights.push_back(w[i]);
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.nodes.push_back(x[i]);
            r.weights.push_back(w[i]);
        }
        return r;
    }();
    return rule;
}

Rule1d composite_1d(double lo, double hi, double per_unit, std::vector<double> breaks) {
    std::vector<double> cuts{lo};
    std::sort(breaks.begin(), breaks.end());
    for (double b : breaks) {
        if (b > lo && b < hi && b > cuts.back()) {
            cuts.push_back(b);
        }
    }
    cuts.push_back(hi);

    const Rule1d& ref = reference_rule();
    Rule1d out;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s];
        const double b = cuts[s + 1];
        const auto panels =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(per_unit * (b - a) - 1e-9)));
        const double width = (b - a) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double mid = a + (static_cast<double>(p) + 0.5) * width;
            for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
                out.nodes.push_back(mid + 0.5 * width * ref.nodes[q]);
                out.weights.push_back(0.5 * width * ref.weights[q]);
            }
        }
    }
    return out;
}

Quadrature tensor(const std::vector<Rule1d>& axes) {
    Quadrature q;
    q.dim = axes.size();
    std::size_t total = 1;
    for (const auto& r : axes) {
        total *= r.nodes.size();
    }
    q.points.reserve(total * q.dim);
    q.weights.reserve(total);
    std::vector<std::size_t> idx(q.dim, 0);
    for (std::size_t k = 0; k < total; ++k) {
        double w = 1.0;
        for (std::size_t a = 0; a < q.dim; ++a) {
            q.points.push_back(axes[a].nodes[idx[a]]);
            w *= axes[a].weights[idx[a]];
        }
        q.weights.push_back(w);
        for (std::size_t a = q.dim; a-- > 0;) {
            if (++idx[a] < axes[a].nodes.size()) {
                break;
            }
            idx[a] = 0;
        }
    }
    return q;
}

std::vector<Mode> enumerate_modes(const std::vector<double>& lengths, std::size_t count) {
    const std::size_t dim = lengths.size();
    auto make = [&](std::vector<int> index) {
        Mode m;
        m.norm = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
            const double k = index[a] * pi / lengths[a];
            m.lambda_sq += k * k;
            m.norm *= std::sqrt(2.0 / lengths[a]);
        }
        m.index = std::move(index);
        return m;
    };

    std::vector<Mode> modes;
    if (dim == 1) {
        for (std::size_t n = 1; n <= count; ++n) {
            modes.push_back(make({static_cast<int>(n)}));
        }
        return modes;
    }

    auto k_max = static_cast<int>(std::ceil(std::pow(static_cast<double>(count), 1.0 / dim))) + 1;
    for (;;) {
        // Every tuple with some index above k_max has λ² at least `bound`.
        double bound = std::numeric_limits<double>::infinity();
        for (double l : lengths) {
            bound = std::min(bound, std::pow((k_max + 1) * pi / l, 2));
        }
        modes.clear();
        std::vector<int> idx(dim, 1);
        for (;;) {
            Mode m = make(idx);
            if (m.lambda_sq < bound) {
                modes.push_back(std::move(m));
            }
            std::size_t a = dim;
            while (a-- > 0) {
                if (++idx[a] <= k_max) {
                    break;
                }
                idx[a] = 1;
            }
            if (a == static_cast<std::size_t>(-1)) {
                break;
            }
        }
        if (modes.size() >= count) {
            break;
        }
        k_max *= 2;
    }
    std::sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) {
        const double tol = 1e-12 * std::max(x.lambda_sq, y.lambda_sq);
        if (std::abs(x.lambda_sq - y.lambda_sq) > tol) {
            return x.lambda_sq < y.lambda_sq;
        }
        return x.index < y.index;
    });
    modes.resize(count);
    return modes;
}

}  // namespace

bool Region::contains(std::span<const double> x) const {
    for (std::size_t a = 0; a < dim(); ++a) {
        if (x[a] < lower[a] || x[a] > upper[a]) {
            return false;
        }
    }
    return true;
}

Face parse_face(const std::string& name, std::size_t dim) {
    static const char* const names[3][2] = {{"left", "right"}, {"bottom", "top"}, {"back", "front"}};
    for (std::size_t a = 0; a < std::min<std::size_t>(dim, 3); ++a) {
        for (int u = 0; u < 2; ++u) {
            if (name == names[a][u]) {
                return {a, u == 1};
            }
        }
    }
    throw ConfigError("unknown boundary face '" + name + "' for a " + std::to_string(dim) +
                      "-dimensional domain");
}

std::string face_name(const Face& face) {
    static const char* const names[3][2] = {{"left", "right"}, {"bottom", "top"}, {"back", "front"}};
    if (face.axis < 3) {
        return names[face.axis][face.upper ? 1 : 0];
    }
    return "axis" + std::to_string(face.axis) + (face.upper ? "+" : "-");
}

Domain Domain::interval(double length) {
    Domain d;
    d.lengths = {length};
    return d;
}

Domain Domain::box(std::vector<double> lengths) {
    Domain d;
    d.lengths = std::move(lengths);
    return d;
}

Region Domain::whole() const {
    return {std::vector<double>(lengths.size(), 0.0), lengths};
}

void Domain::validate(bool distributed) const {
    if (lengths.empty() || lengths.size() > 3) {
        throw ConfigError("domain: dimension must be 1, 2 or 3");
    }
    for (double l : lengths) {
        if (!(l > 0.0) || !std::isfinite(l)) {
            throw ConfigError("domain: lengths must be positive");
        }
    }
    auto check_shape = [&](const Region& r, const char* what) {
        if (r.lower.size() != dim() || r.upper.size() != dim()) {
            throw ConfigError(std::string("domain: ") + what + " has the wrong dimension");
        }
        for (std::size_t a = 0; a < dim(); ++a) {
            if (!(r.lower[a] < r.upper[a])) {
                throw ConfigError(std::string("domain: ") + what + " is empty along axis " +
                                  std::to_string(a));
            }
        }
    };
    if (omega) {
        check_shape(*omega, "omega");
        for (std::size_t a = 0; a < dim(); ++a) {
            if (omega->lower[a] < 0.0 || omega->upper[a] > lengths[a]) {
                throw ConfigError("domain: omega leaves the domain");
            }
        }
    }
    if (omega_tilde) {
        check_shape(*omega_tilde, "omega_tilde");
        for (std::size_t a = 0; a < dim(); ++a) {
            if (omega_tilde->lower[a] <= 0.0 || omega_tilde->upper[a] >= lengths[a]) {
                throw ConfigError("domain: closure of omega_tilde must lie inside the domain");
            }
        }
        if (distributed) {
            const Region w = control_region();
            bool overlap = true;
            for (std::size_t a = 0; a < dim(); ++a) {
                if (omega_tilde->upper[a] < w.lower[a] || omega_tilde->lower[a] > w.upper[a]) {
                    overlap = false;
                }
            }
            if (overlap) {
                throw ConfigError("domain: closures of omega and omega_tilde must be disjoint");
            }
        }
    }
    for (const Face& f : gamma) {
        if (f.axis >= dim()) {
            throw ConfigError("domain: boundary face '" + face_name(f) + "' does not exist");
        }
    }
}

Quadrature composite_gauss(const Region& region, std::span<const double> panels_per_unit,
                           const std::vector<std::vector<double>>& breakpoints) {
    std::vector<Rule1d> axes;
    for (std::size_t a = 0; a < region.dim(); ++a) {
        axes.push_back(composite_1d(region.lower[a], region.upper[a], panels_per_unit[a],
                                    a < breakpoints.size() ? breakpoints[a] : std::vector<double>{}));
    }
    return tensor(axes);
}

SpectralBasis::SpectralBasis(Domain domain, std::size_t mode_count, std::size_t mode_cap)
    : domain_(std::move(domain)) {
    domain_.validate();
    if (mode_count == 0) {
        throw ConfigError("basis: mode_count must be at least 1");
    }
    if (mode_count > mode_cap) {
        throw ConfigError("basis: mode_count " + std::to_string(mode_count) + " exceeds the cap " +
                          std::to_string(mode_cap));
    }
    modes_ = enumerate_modes(domain_.lengths, mode_count);

    const std::size_t dim = domain_.dim();
    density_.assign(dim, 0.0);
    for (std::size_t a = 0; a < dim; ++a) {
        int top = 0;
        for (const Mode& m : modes_) {
            top = std::max(top, m.index[a]);
        }
        density_[a] = static_cast<double>(top + 1) / domain_.lengths[a];
    }

    q_domain_ = quadrature_on(domain_.whole());
    q_control_ = quadrature_on(domain_.control_region());
    if (domain_.omega_tilde) {
        q_observe_ = quadrature_on(*domain_.omega_tilde);
    } else {
        q_observe_.dim = dim;
    }

    q_boundary_.dim = dim;
    for (std::size_t f = 0; f < domain_.gamma.size(); ++f) {
        const Face& face = domain_.gamma[f];
        const double fixed = face.upper ? domain_.lengths[face.axis] : 0.0;
        std::vector<Rule1d> axes;
        for (std::size_t a = 0; a < dim; ++a) {
            if (a == face.axis) {
                axes.push_back({{fixed}, {1.0}});
            } else {
                axes.push_back(composite_1d(0.0, domain_.lengths[a], density_[a], {}));
            }
        }
        const Quadrature q = tensor(axes);
        q_boundary_.points.insert(q_boundary_.points.end(), q.points.begin(), q.points.end());
        q_boundary_.weights.insert(q_boundary_.weights.end(), q.weights.begin(), q.weights.end());
        face_of_.insert(face_of_.end(), q.size(), f);
    }
}

std::vector<double> SpectralBasis::lambda_sq_values() const {
    std::vector<double> out;
    out.reserve(modes_.size());
    for (const Mode& m : modes_) {
        out.push_back(m.lambda_sq);
    }
    return out;
}

Quadrature SpectralBasis::quadrature_on(const Region& region,
                                        const std::vector<std::vector<double>>& breakpoints) const {
    return composite_gauss(region, density_, breakpoints);
}

double SpectralBasis::eval(std::size_t i, std::span<const double> x) const {
    const Mode& m = modes_.at(i);
    double v = m.norm;
    for (std::size_t a = 0; a < m.index.size(); ++a) {
        v *= std::sin(m.index[a] * pi * x[a] / domain_.lengths[a]);
    }
    return v;
}

double SpectralBasis::laplacian(std::size_t i, std::span<const double> x) const {
    const Mode& m = modes_.at(i);
    double total = 0.0;
    for (std::size_t d = 0; d < m.index.size(); ++d) {
        double term = m.norm;
        for (std::size_t a = 0; a < m.index.size(); ++a) {
            const double k = m.index[a] * pi / domain_.lengths[a];
            term *= a == d ? -k * k * std::sin(k * x[a]) : std::sin(k * x[a]);
        }
        total += term;
    }
    return total;
}

double SpectralBasis::trace(std::size_t i, const Face& face, std::span<const double> x) const {
    const Mode& m = modes_.at(i);
    const double k = m.index[face.axis] * pi / domain_.lengths[face.axis];
    double v = m.norm * k;
    if (face.upper) {
        v *= (m.index[face.axis] % 2 == 0) ? 1.0 : -1.0;  // cos(n π), exterior normal +e_a
    } else {
        v = -v;  // exterior normal -e_a
    }
    for (std::size_t a = 0; a < m.index.size(); ++a) {
        if (a != face.axis) {
            v *= std::sin(m.index[a] * pi * x[a] / domain_.lengths[a]);
        }
    }
    return v;
}

std::vector<double> SpectralBasis::sample(std::size_t i, const Quadrature& q) const {
    std::vector<double> out(q.size());
    for (std::size_t p = 0; p < q.size(); ++p) {
        out[p] = eval(i, q.point(p));
    }
    return out;
}

std::vector<double> SpectralBasis::boundary_trace(std::size_t i) const {
    std::vector<double> out(q_boundary_.size());
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = trace(i, domain_.gamma[face_of_[p]], q_boundary_.point(p));
    }
    return out;
}

std::vector<double> project(const Field& field, const SpectralBasis& basis) {
    return project(field, basis, basis.domain_quadrature());
}

std::vector<double> project(const Field& field, const SpectralBasis& basis, const Quadrature& q) {
    std::vector<double> fw(q.size());
    for (std::size_t p = 0; p < q.size(); ++p) {
        fw[p] = field(q.point(p)) * q.weights[p];
    }
    std::vector<double> out(basis.size(), 0.0);
    for (std::size_t n = 0; n < basis.size(); ++n) {
        double s = 0.0;
        for (std::size_t p = 0; p < q.size(); ++p) {
            if (fw[p] != 0.0) {
                s += fw[p] * basis.eval(n, q.point(p));
            }
        }
        out[n] = s;
    }
    return out;
}

std::vector<double> project_values(std::span<const double> values, const SpectralBasis& basis) {
    const Quadrature& q = basis.domain_quadrature();
    if (values.size() != q.size()) {
        throw ConfigError("project_values: expected values at " + std::to_string(q.size()) +
                          " quadrature nodes");
    }
    std::vector<double> out(basis.size(), 0.0);
    for (std::size_t n = 0; n < basis.size(); ++n) {
        double s = 0.0;
        for (std::size_t p = 0; p < q.size(); ++p) {
            s += values[p] * q.weights[p] * basis.eval(n, q.point(p));
        }
        out[n] = s;
    }
    return out;
}

std::vector<double> synthesize(std::span<const double> coeffs, const SpectralBasis& basis,
                               std::span<const double> points) {
    const std::size_t dim = basis.domain().dim();
    if (points.size() % dim != 0) {
        throw ConfigError("synthesize: point list length is not a multiple of the dimension");
    }
    const std::size_t count = points.size() / dim;
    const std::size_t modes = std::min(coeffs.size(), basis.size());
    std::vector<double> out(count, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
        const auto x = points.subspan(p * dim, dim);
        double s = 0.0;
        for (std::size_t n = 0; n < modes; ++n) {
            if (coeffs[n] != 0.0) {
                s += coeffs[n] * basis.eval(n, x);
            }
        }
        out[p] = s;
    }
    return out;
}

double boundary_moment(std::span<const double> f_shape, const SpectralBasis& basis, std::size_t n) {
    const Quadrature& q = basis.boundary_quadrature();
    if (f_shape.size() != q.size()) {
        throw ConfigError("boundary_moment: shape is not sampled on the boundary nodes");
    }
    const auto& face_of = basis.boundary_face_of();
    const auto& faces = basis.domain().gamma;
    double s = 0.0;
    for (std::size_t p = 0; p < q.size(); ++p) {
        if (f_shape[p] != 0.0) {
            s += q.weights[p] * f_shape[p] * basis.trace(n, faces[face_of[p]], q.point(p));
        }
    }
    return s;
}

std::vector<double> domA_coefficients(std::span<const double> coeffs, const SpectralBasis& basis,
                                      DomA direction) {
    if (coeffs.size() > basis.size()) {
        throw ConfigError("domA_coefficients: more coefficients than modes");
    }
    std::vector<double> out(coeffs.begin(), coeffs.end());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double l2 = basis.lambda_sq(n);
        out[n] = direction == DomA::to_state ? out[n] / l2 : out[n] * l2;
    }
    return out;
}

DecayFit sobolev_decay_fit(std::span<const double> coeffs, const SpectralBasis& basis,
                           std::size_t blocks) {
    const std::size_t k = coeffs.size();
    if (k < 16) {
        throw ConfigError("sobolev_decay_fit: at least 16 modes are required");
    }
    if (k > basis.size()) {
        throw ConfigError("sobolev_decay_fit: more coefficients than modes");
    }
    if (blocks < 2) {
        throw ConfigError("sobolev_decay_fit: at least 2 blocks are required");
    }
    const std::size_t start = k / 2;
    const std::size_t width = (k - start + blocks - 1) / blocks;

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t b = start; b < k; b += width) {
        const std::size_t e = std::min(k, b + width);
        std::size_t best = b;
        for (std::size_t n = b; n < e; ++n) {
            if (std::abs(coeffs[n]) > std::abs(coeffs[best])) {
                best = n;
            }
        }
        if (coeffs[best] != 0.0 && std::isfinite(coeffs[best])) {
            xs.push_back(0.5 * std::log(basis.lambda_sq(best)));
            ys.push_back(std::log(std::abs(coeffs[best])));
        }
    }
    if (xs.size() < 2) {
        throw NumericalError("sobolev_decay_fit: undefined fit (coefficients vanish on the fit range)");
    }

    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / n;
        my += ys[i] / n;
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) {
        throw NumericalError("sobolev_decay_fit: undefined fit (degenerate eigenvalues)");
    }
    const double slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (my + slope * (xs[i] - mx));
        rss += r * r;
    }
    return {-slope, std::sqrt(rss / n), xs.size()};
}

}  // namespace memheat::spectral
