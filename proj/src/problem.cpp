#include "sdg/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdg/errors.hpp"

namespace sdg {

ControlSet::ControlSet(std::vector<Dim> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw spec_error("control set needs at least one dimension");
    count_ = 1;
    for (const auto& d : dims_) {
        if (d.points < 1) throw spec_error("control set dimension needs at least one point");
        if (d.points > 1 && !(d.hi > d.lo))
            throw spec_error("control set interval must have positive width");
        count_ *= d.points;
    }
    flat_.resize(static_cast<std::size_t>(count_) * dims_.size());
    for (int k = 0; k < count_; ++k) {
        int rem = k;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            const auto& d = dims_[j];
            const int idx = rem % d.points;
            rem /= d.points;
            const double step = d.points > 1 ? (d.hi - d.lo) / (d.points - 1) : 0.0;
            flat_[static_cast<std::size_t>(k) * dims_.size() + j] = d.lo + idx * step;
        }
    }
}

ControlSet ControlSet::interval(double lo, double hi, int points) {
    return ControlSet({Dim{lo, hi, points}});
}

double ControlSet::mesh_size() const {
    double m = 0.0;
    for (const auto& d : dims_)
        if (d.points > 1) m = std::max(m, (d.hi - d.lo) / (d.points - 1));
    return m;
}

int ControlSet::nearest_index(std::span<const double> coords) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count_; ++k) {
        const auto p = point(k);
        double d = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double c = j < coords.size() ? coords[j] : 0.0;
            d += (p[j] - c) * (p[j] - c);
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

void ProblemSpec::check_structure() const {
    if (!(horizon > 0.0)) throw spec_error("horizon T must be positive");
    if (control_u.count() < 1 || control_v.count() < 1)
        throw spec_error("control sets must be non-empty");
    if (!drift.valid() || !diffusion.valid() || !generator.valid() || !terminal.valid())
        throw spec_error("spec \"" + name + "\" has an unset coefficient");
    if (state_dim != 1 || noise_dim != 1)
        throw spec_error("only state_dim = noise_dim = 1 is implemented");
    if (y_band && !(y_band->lo < y_band->hi))
        throw spec_error("y_band must be a non-degenerate interval");
}

void GridSpec::check() const {
    if (!(x_lo < x_hi)) throw spec_error("grid needs x_lo < x_hi");
    if (n_x < 3) throw spec_error("grid needs at least 3 space nodes");
    if (n_t < 0) throw spec_error("grid n_t must be >= 0");
}

double ValueField::interpolate(double t_query, double x_query) const {
    const int k = std::clamp(static_cast<int>(std::lround(t_query / dt())), 0, grid.n_t);
    const double dx = grid.dx();
    double s = (x_query - grid.x_lo) / dx;
    s = std::clamp(s, 0.0, static_cast<double>(grid.n_x - 1));
    const int i = std::min(static_cast<int>(s), grid.n_x - 2);
    const double w = s - i;
    return (1.0 - w) * at(k, i) + w * at(k, i + 1);
}

int FeedbackPair::time_index(double t) const {
    return std::clamp(static_cast<int>(std::lround(t / dt())), 0, grid.n_t);
}

int FeedbackPair::space_index(double x) const {
    const double s = (x - grid.x_lo) / grid.dx();
    return std::clamp(static_cast<int>(std::lround(s)), 0, grid.n_x - 1);
}

int FeedbackPair::own_at(double t, double x) const {
    return own_idx[static_cast<std::size_t>(time_index(t)) * grid.n_x + space_index(x)];
}

int FeedbackPair::response_at(double t, double x, int opponent_index) const {
    const std::size_t node = static_cast<std::size_t>(time_index(t)) * grid.n_x + space_index(x);
    return response_idx[node * n_u + opponent_index];
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed ? "pass " : "FAIL ") << c.name << ": worst violation "
           << c.worst_violation << " (tol " << c.tolerance << ")";
        if (!c.worst_point.empty()) os << " at " << c.worst_point;
        os << "\n";
    }
    return os.str();
}

namespace {

// Additive low-discrepancy sequence on [0,1)^dim (Weyl / Kronecker with the
// generalized golden ratios). Deterministic across platforms.
class WeylSampler {
public:
    explicit WeylSampler(int dim) : dim_(dim), state_(dim, 0.5) {
        double phi = 2.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
        alpha_.resize(dim);
        double a = 1.0;
        for (int j = 0; j < dim; ++j) {
            a /= phi;
            alpha_[j] = a;
        }
    }

    std::span<const double> next() {
        for (int j = 0; j < dim_; ++j) {
            state_[j] += alpha_[j];
            if (state_[j] >= 1.0) state_[j] -= 1.0;
        }
        return state_;
    }

private:
    int dim_;
    std::vector<double> alpha_;
    std::vector<double> state_;
};

double lerp_range(double lo, double hi, double s) { return lo + (hi - lo) * s; }

std::string point_string(const CoeffArgs& a) {
    std::ostringstream os;
    os << "(t=" << a.t << ", x=" << a.x << ", y=" << a.y << ", z=" << a.z << ")";
    return os.str();
}

void require_finite(const char* coeff, double v, const CoeffArgs& a) {
    if (!std::isfinite(v))
        throw spec_error(std::string("coefficient ") + coeff +
                         " is non-finite at sampled point " + point_string(a));
}

} // namespace

ValidationReport validate_problem(const ProblemSpec& spec, int sample_budget, double tol,
                                  const ValidationOptions& opts) {
    spec.check_structure();
    if (sample_budget < 100) throw spec_error("validate_problem needs sample_budget >= 100");

    double y_lo = opts.y_lo.value_or(spec.y_band ? spec.y_band->lo : -2.0);
    double y_hi = opts.y_hi.value_or(spec.y_band ? spec.y_band->hi : 2.0);

    ValidationReport rep;
    auto& lip_x = rep.checks.emplace_back();
    lip_x.name = "lipschitz_x(b,sigma,g,h)";
    auto& lip_z = rep.checks.emplace_back();
    lip_z.name = "lipschitz_z(g)";
    auto& mono = rep.checks.emplace_back();
    mono.name = "monotone_y(g, theta)";
    auto& grow = rep.checks.emplace_back();
    grow.name = "growth_y(g, eta, p)";
    for (auto& c : rep.checks) c.tolerance = tol;

    auto record = [](ValidationReport::Check& c, double violation, const CoeffArgs& a) {
        if (violation > c.worst_violation) {
            c.worst_violation = violation;
            c.worst_point = point_string(a);
        }
    };

    WeylSampler sampler(8);
    for (int n = 0; n < sample_budget; ++n) {
        const auto s = sampler.next();
        CoeffArgs a;
        a.t = lerp_range(0.0, spec.horizon, s[0]);
        a.x = lerp_range(opts.x_lo, opts.x_hi, s[1]);
        a.y = lerp_range(y_lo, y_hi, s[2]);
        a.z = lerp_range(opts.z_lo, opts.z_hi, s[3]);
        const int iu = static_cast<int>(s[4] * spec.control_u.count()) % spec.control_u.count();
        const int iv = static_cast<int>(s[5] * spec.control_v.count()) % spec.control_v.count();
        a.u = spec.control_u.point(iu);
        a.v = spec.control_v.point(iv);

        CoeffArgs a2 = a;
        a2.x = lerp_range(opts.x_lo, opts.x_hi, s[6]);
        CoeffArgs az = a;
        az.z = lerp_range(opts.z_lo, opts.z_hi, s[7]);
        CoeffArgs ay = a;
        ay.y = lerp_range(y_lo, y_hi, 1.0 - s[2]);
        CoeffArgs a0 = a;
        a0.y = spec.y_band ? std::clamp(0.0, y_lo, y_hi) : 0.0;

        const double b1 = spec.drift(a), b2 = spec.drift(a2);
        const double s1 = spec.diffusion(a), s2 = spec.diffusion(a2);
        const double g1 = spec.generator(a), g2 = spec.generator(a2);
        const double gz = spec.generator(az);
        const double gy = spec.generator(ay);
        const double g0 = spec.generator(a0);
        CoeffArgs ah = a, ah2 = a2;
        const double h1 = spec.terminal(ah), h2 = spec.terminal(ah2);
        require_finite("b", b1, a);
        require_finite("sigma", s1, a);
        require_finite("g", g1, a);
        require_finite("g", gy, ay);
        require_finite("g", g0, a0);
        require_finite("h", h1, a);

        // Lipschitz in x, one normalized difference quotient per coefficient.
        const double dxs = std::fabs(a.x - a2.x);
        if (dxs > 1e-9) {
            record(lip_x, (std::fabs(b1 - b2) - spec.lip_c * dxs) / dxs, a);
            record(lip_x, (std::fabs(s1 - s2) - spec.lip_c * dxs) / dxs, a);
            record(lip_x, (std::fabs(g1 - g2) - spec.lip_c * dxs) / dxs, a);
            record(lip_x, (std::fabs(h1 - h2) - spec.lip_c * dxs) / dxs, a);
        }
        const double dzs = std::fabs(a.z - az.z);
        if (dzs > 1e-9) record(lip_z, (std::fabs(g1 - gz) - spec.lip_c * dzs) / dzs, a);

        // One-sided monotonicity in y, normalized by |y - y'|^2.
        const double dy = a.y - ay.y;
        if (std::fabs(dy) > 1e-9)
            record(mono, dy * (g1 - gy) / (dy * dy) - spec.theta, a);

        // Polynomial growth in y around y = 0 (band-clamped reference).
        const double bound = spec.eta * (1.0 + std::pow(std::fabs(a.y), spec.growth_p));
        record(grow, std::fabs(g1 - g0) - bound, a);
    }

    rep.passed = true;
    for (auto& c : rep.checks) {
        c.passed = c.worst_violation <= tol;
        rep.passed = rep.passed && c.passed;
    }
    return rep;
}

} // namespace sdg
