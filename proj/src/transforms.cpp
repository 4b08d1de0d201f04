#include "sdg/transforms.hpp"

#include <cmath>
#include <sstream>

#include "sdg/errors.hpp"

namespace sdg {

void TransformSpec::check() const {
    if (m < 1 || k < 1) throw spec_error("transform m and k must be positive integers");
    if (quad_points < 8) throw spec_error("transform needs at least 8 quadrature nodes");
}

Quadrature Quadrature::gauss_legendre(int n) {
    // Newton iteration on Legendre polynomials, nodes seeded by the Chebyshev
    // approximation. Standard and accurate to machine precision.
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        q.nodes[i] = -x;
        q.nodes[n - 1 - i] = x;
        q.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        q.weights[n - 1 - i] = q.weights[i];
    }
    return q;
}

namespace {

double bump_raw(double s) {
    const double s2 = s * s;
    return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0;
}

// 1 / integral of the unit bump over [-1, 1], computed once by high-order
// quadrature.
double bump_norm() {
    static const double c = [] {
        const auto q = Quadrature::gauss_legendre(200);
        double integral = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            integral += q.weights[i] * bump_raw(q.nodes[i]);
        return 1.0 / integral;
    }();
    return c;
}

} // namespace

double mollifier_eval(int m, double y) {
    if (m < 1) throw spec_error("mollifier index must be >= 1");
    return m * bump_norm() * bump_raw(m * y);
}

Coefficient mollify(const ProblemSpec& spec, int m, int quad_points) {
    if (m < 1) throw spec_error("mollification index must be >= 1");
    if (quad_points < 8) throw spec_error("mollification needs at least 8 quadrature nodes");
    const Coefficient g = spec.generator;
    if (!g.depends_y()) return g; // convolution in y is the identity

    // Nodes across the support, weights normalized so constants in y are
    // reproduced exactly.
    const auto gl = Quadrature::gauss_legendre(quad_points);
    auto offsets = std::make_shared<std::vector<double>>(quad_points);
    auto weights = std::make_shared<std::vector<double>>(quad_points);
    double total = 0.0;
    for (int i = 0; i < quad_points; ++i) {
        const double s = gl.nodes[i] / m;
        (*offsets)[i] = s;
        (*weights)[i] = gl.weights[i] / m * mollifier_eval(m, s);
        total += (*weights)[i];
    }
    for (auto& w : *weights) w /= total;

    auto fn = [g, offsets, weights](const CoeffArgs& a) {
        CoeffArgs shifted = a;
        double acc = 0.0;
        for (std::size_t i = 0; i < offsets->size(); ++i) {
            shifted.y = a.y - (*offsets)[i];
            const double gi = g(shifted);
            if (!std::isfinite(gi)) {
                std::ostringstream os;
                os << "mollified generator hit a non-finite value at y=" << shifted.y
                   << " (query y=" << a.y << ")";
                throw numeric_error(os.str());
            }
            acc += (*weights)[i] * gi;
        }
        return acc;
    };
    return Coefficient::from_fn(std::move(fn), kNonlinear, g.degree_z(), g.time_varying());
}

double clamp_to_level(double x, double k) {
    if (x > k) return k;
    if (x < -k) return -k;
    return x;
}

Coefficient truncate(const ProblemSpec& spec, int k) {
    if (k < 1) throw spec_error("truncation level must be >= 1");
    const Coefficient g = spec.generator;
    const double level = static_cast<double>(k);
    auto fn = [g, level](const CoeffArgs& a) {
        CoeffArgs at_zero = a;
        at_zero.y = 0.0;
        const double g0 = g(at_zero);
        return g(a) - g0 + clamp_to_level(g0, level);
    };
    // The clamp acts through g(., 0, .), so the result reads y even when g
    // does not, and any z-dependence stops being affine.
    return Coefficient::from_fn(std::move(fn), std::max(g.degree_y(), 1),
                                g.depends_z() ? kNonlinear : 0, g.time_varying());
}

double sup_distance_on_compact(const Coefficient& g1, const Coefficient& g2,
                               const CompactBox& box, const ProblemSpec& spec, int samples) {
    if (samples < 1000) throw spec_error("sup_distance_on_compact needs samples >= 1000");
    if (!(box.t_hi >= box.t_lo) || !(box.x_hi > box.x_lo) || !(box.y_hi > box.y_lo))
        throw spec_error("degenerate compact box");

    // Same additive lattice as validate_problem; 5 dims cover (t, x, y, u, v).
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / 6.0);
    double alpha[5];
    double state[5];
    double a = 1.0;
    for (int j = 0; j < 5; ++j) {
        a /= phi;
        alpha[j] = a;
        state[j] = 0.5;
    }

    double worst = 0.0;
    for (int n = 0; n < samples; ++n) {
        for (int j = 0; j < 5; ++j) {
            state[j] += alpha[j];
            if (state[j] >= 1.0) state[j] -= 1.0;
        }
        CoeffArgs args;
        args.t = box.t_lo + (box.t_hi - box.t_lo) * state[0];
        args.x = box.x_lo + (box.x_hi - box.x_lo) * state[1];
        args.y = box.y_lo + (box.y_hi - box.y_lo) * state[2];
        const int iu = static_cast<int>(state[3] * spec.control_u.count()) % spec.control_u.count();
        const int iv = static_cast<int>(state[4] * spec.control_v.count()) % spec.control_v.count();
        args.u = spec.control_u.point(iu);
        args.v = spec.control_v.point(iv);
        const double d1 = g1(args);
        const double d2 = g2(args);
        if (!std::isfinite(d1) || !std::isfinite(d2)) {
            std::ostringstream os;
            os << "generator non-finite on the probe compact at (t=" << args.t
               << ", x=" << args.x << ", y=" << args.y << ")";
            throw numeric_error(os.str());
        }
        worst = std::max(worst, std::fabs(d1 - d2));
    }
    return worst;
}

} // namespace sdg
