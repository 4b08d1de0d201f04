#pragma once

#include <vector>

#include "sdg/problem.hpp"

namespace sdg {

/// Settings for the generator transforms.
struct TransformSpec {
    int m = 8;           // mollification index, support [-1/m, 1/m]
    int k = 8;           // truncation level
    int quad_points = 64; // quadrature nodes across the mollifier support

    void check() const;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    static Quadrature gauss_legendre(int n);
};

/// The scaled standard bump: m * c * exp(-1 / (1 - (m y)^2)) for |m y| < 1,
/// zero outside, with c normalizing the unit integral.
double mollifier_eval(int m, double y);

/// Convolves the generator in y with the index-m bump. The result carries
/// the same control structure; it is nonlinear in y unless the input ignores
/// y entirely (then it is returned unchanged). Quadrature hitting a
/// non-finite generator value raises numeric_error.
Coefficient mollify(const ProblemSpec& spec, int m, int quad_points = 64);

/// Replaces g(.,0,.) by its clamp to [-k, k]:
///   g_k(., y, .) = g(., y, .) - g(., 0, .) + clamp_k(g(., 0, .)).
Coefficient truncate(const ProblemSpec& spec, int k);

/// clamp_k(x) = x for |x| <= k, sign(x) * k otherwise; 0 at x = 0.
double clamp_to_level(double x, double k);

/// Box in (t, x, y) over which generator distances are probed; the control
/// meshes of the owning spec supply the (u, v) directions.
struct CompactBox {
    double t_lo = 0.0, t_hi = 1.0;
    double x_lo = -2.0, x_hi = 2.0;
    double y_lo = -2.0, y_hi = 2.0;
};

/// max |g1 - g2| over a deterministic low-discrepancy sample of the box and
/// the control meshes. Needs samples >= 1000.
double sup_distance_on_compact(const Coefficient& g1, const Coefficient& g2,
                               const CompactBox& box, const ProblemSpec& spec, int samples);

} // namespace sdg
