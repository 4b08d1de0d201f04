#include "sdg/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sdg/errors.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/transforms.hpp"

namespace sdg {

FeedbackPair extract_feedback(const ProblemSpec& spec, const ValueField& field,
                              int max_time_slices) {
    spec.check_structure();
    if (field.grid.n_t < 1) throw spec_error("extract_feedback needs a solved field");

    FeedbackPair pair;
    pair.grid = field.grid;
    pair.grid.n_t = std::min(field.grid.n_t, max_time_slices);
    pair.side = field.side;
    pair.horizon = field.horizon;
    const bool lower = field.side == Side::lower;
    const int n_own = lower ? spec.control_u.count() : spec.control_v.count();
    const int n_opp = lower ? spec.control_v.count() : spec.control_u.count();
    pair.n_u = n_opp;

    const int n = field.grid.n_x;
    const double dx = field.grid.dx();
    pair.own_idx.assign(static_cast<std::size_t>(pair.grid.n_t + 1) * n, 0);
    pair.response_idx.assign(static_cast<std::size_t>(pair.grid.n_t + 1) * n * n_opp, 0);
    pair.boundary_flag.assign(static_cast<std::size_t>(pair.grid.n_t + 1) * n, 0);

    for (int kc = 0; kc <= pair.grid.n_t; ++kc) {
        // Nearest field slice to the coarse time node.
        const double t = kc * pair.dt();
        const int k = std::clamp(static_cast<int>(std::lround(t / field.dt())), 0, field.grid.n_t);

        for (int i = 1; i < n - 1; ++i) {
            HamiltonianQuery q;
            q.t = field.t(k);
            q.x = field.grid.x(i);
            q.y = field.at(k, i);
            q.p = (field.at(k, i + 1) - field.at(k, i - 1)) / (2.0 * dx);
            q.a = (field.at(k, i + 1) - 2.0 * field.at(k, i) + field.at(k, i - 1)) / (dx * dx);

            const std::size_t node = static_cast<std::size_t>(kc) * n + i;
            if (lower) {
                const auto r = lower_hamiltonian(q, spec);
                pair.own_idx[node] = r.u_star;
                for (int iu = 0; iu < n_opp; ++iu)
                    pair.response_idx[node * n_opp + iu] = r.v_response[iu];
            } else {
                const auto r = upper_hamiltonian(q, spec);
                pair.own_idx[node] = r.v_star;
                for (int iv = 0; iv < n_opp; ++iv)
                    pair.response_idx[node * n_opp + iv] = r.u_response[iv];
            }
        }
        // Boundary nodes copy the nearest interior node, flagged.
        for (int i : {0, n - 1}) {
            const int src = i == 0 ? 1 : n - 2;
            const std::size_t node = static_cast<std::size_t>(kc) * n + i;
            const std::size_t from = static_cast<std::size_t>(kc) * n + src;
            pair.own_idx[node] = pair.own_idx[from];
            for (int j = 0; j < n_opp; ++j)
                pair.response_idx[node * n_opp + j] = pair.response_idx[from * n_opp + j];
            pair.boundary_flag[node] = 1;
        }
    }
    return pair;
}

namespace {

double paired_std_error(std::span<const double> a, std::span<const double> b) {
    const int m = static_cast<int>(a.size());
    double acc = 0.0, acc2 = 0.0;
    for (int p = 0; p < m; ++p) {
        const double d = a[p] - b[p];
        acc += d;
        acc2 += d * d;
    }
    const double mean = acc / m;
    return std::sqrt(std::max(0.0, acc2 / m - mean * mean) / m);
}

} // namespace

SaddleReport saddle_check(const ProblemSpec& spec, const FeedbackPair& pair, double t, double x,
                          const std::vector<int>& own_deviations,
                          const std::vector<int>& opponent_deviations, const McSection& mc,
                          double scheme_tolerance) {
    const bool lower = pair.side == Side::lower;
    auto shared = std::make_shared<const FeedbackPair>(pair);

    // The pair itself: own control from the field, opponent from the
    // strategy response to it.
    const ControlPolicy own = feedback_own_policy(shared);
    const ControlPolicy response_to_own = feedback_response_policy(shared, own);
    const ControlPolicy u_pair = lower ? own : response_to_own;
    const ControlPolicy v_pair = lower ? response_to_own : own;

    SaddleReport rep;
    const CostEstimate base = cost_j(spec, u_pair, v_pair, t, x, mc);
    rep.j_pair = base.j;
    rep.pair_std_error = base.std_error;

    // Deviations of the player whose control feeds the strategy: the
    // strategy responds to the deviation.
    for (int dev : own_deviations) {
        const ControlPolicy dev_policy = constant_policy(dev);
        const ControlPolicy response = feedback_response_policy(shared, dev_policy);
        const CostEstimate e = cost_j(spec, lower ? dev_policy : response,
                                      lower ? response : dev_policy, t, x, mc);
        SaddleDeviation d;
        d.mesh_index = dev;
        d.j = e.j;
        d.paired_std_error = paired_std_error(e.path_y0, base.path_y0);
        // Lower side: J(u, beta(u)) <= J_pair; upper side: J(alpha(v), v) >= J_pair.
        const double excess = lower ? e.j - base.j : base.j - e.j;
        d.violation = std::max(0.0, excess - 3.0 * d.paired_std_error - scheme_tolerance);
        rep.max_own_violation = std::max(rep.max_own_violation, d.violation);
        rep.own_deviations.push_back(d);
    }

    // Deviations of the adversary against the pair's own control.
    for (int dev : opponent_deviations) {
        const ControlPolicy dev_policy = constant_policy(dev);
        const CostEstimate e = cost_j(spec, lower ? own : dev_policy,
                                      lower ? dev_policy : own, t, x, mc);
        SaddleDeviation d;
        d.mesh_index = dev;
        d.j = e.j;
        d.paired_std_error = paired_std_error(e.path_y0, base.path_y0);
        // Lower side: J(u_hat, v) >= J_pair; upper side: J(u, v_hat) <= J_pair.
        const double excess = lower ? base.j - e.j : e.j - base.j;
        d.violation = std::max(0.0, excess - 3.0 * d.paired_std_error - scheme_tolerance);
        rep.max_opponent_violation = std::max(rep.max_opponent_violation, d.violation);
        rep.opponent_deviations.push_back(d);
    }

    rep.passed = rep.max_own_violation == 0.0 && rep.max_opponent_violation == 0.0;
    std::ostringstream os;
    os << "J(pair) = " << rep.j_pair << ", max own violation = " << rep.max_own_violation
       << ", max opponent violation = " << rep.max_opponent_violation;
    rep.detail = os.str();
    return rep;
}

DppResult dpp_one_step(const ProblemSpec& spec, const ValueField& field, double t, double x,
                       double delta, int quad_points) {
    spec.check_structure();
    if (delta <= 0.0) throw spec_error("dpp_one_step needs delta > 0");

    const auto& grid = field.grid;
    const int k_next =
        std::clamp(static_cast<int>(std::lround((t + delta) / field.dt())), 0, grid.n_t);
    const std::span<const double> w = field.slice(k_next);
    const double dx = grid.dx();

    // Quadrature against the standard normal on [-6, 6], weights normalized
    // so a constant integrand is reproduced exactly.
    const auto gl = Quadrature::gauss_legendre(quad_points);
    std::vector<double> xi(quad_points), wq(quad_points);
    double wsum = 0.0;
    for (int i = 0; i < quad_points; ++i) {
        xi[i] = 6.0 * gl.nodes[i];
        wq[i] = gl.weights[i] * 6.0 * std::exp(-0.5 * xi[i] * xi[i]) * 0.3989422804014327;
        wsum += wq[i];
    }
    for (auto& v : wq) v /= wsum;

    bool extrapolated = false;
    auto field_next_at = [&](double xq) {
        const double s = (xq - grid.x_lo) / dx;
        if (s < 0.0 || s > grid.n_x - 1) extrapolated = true;
        const double snapped = std::nearbyint(s);
        if (std::fabs(s - snapped) < 1e-9 && snapped >= 0.0 && snapped <= grid.n_x - 1)
            return w[static_cast<int>(snapped)];
        // Edge cells extend linearly outside the domain.
        const int i = std::clamp(static_cast<int>(std::floor(s)), 0, grid.n_x - 2);
        const double frac = s - i;
        return (1.0 - frac) * w[i] + frac * w[i + 1];
    };

    // Discrete central gradient of the next slice at x.
    const int ic = std::clamp(static_cast<int>(std::lround((x - grid.x_lo) / dx)), 0,
                              grid.n_x - 1);
    double dc;
    if (ic == 0)
        dc = (w[1] - w[0]) / dx;
    else if (ic == grid.n_x - 1)
        dc = (w[grid.n_x - 1] - w[grid.n_x - 2]) / dx;
    else
        dc = (w[ic + 1] - w[ic - 1]) / (2.0 * dx);

    const bool lower = field.side == Side::lower;
    const int nu = spec.control_u.count();
    const int nv = spec.control_v.count();
    const double sqrt_delta = std::sqrt(delta);

    auto one_pair = [&](int iu, int iv) {
        CoeffArgs a;
        a.t = t;
        a.x = x;
        a.u = spec.control_u.point(iu);
        a.v = spec.control_v.point(iv);
        const double b = spec.drift(a);
        const double sig = spec.diffusion(a);
        double expect = 0.0;
        if (sig == 0.0) {
            expect = field_next_at(x + b * delta);
        } else {
            for (int q = 0; q < quad_points; ++q)
                expect += wq[q] * field_next_at(x + b * delta + sig * sqrt_delta * xi[q]);
        }
        a.z = dc * sig;
        double y = expect;
        if (!spec.generator.depends_y()) {
            a.y = y;
            y = expect + delta * spec.generator(a);
        } else {
            bool converged = false;
            for (int it = 0; it < 100; ++it) {
                a.y = y;
                const double y_new = expect + delta * spec.generator(a);
                if (!std::isfinite(y_new)) break;
                if (std::fabs(y_new - y) <= 1e-12) {
                    y = y_new;
                    converged = true;
                    break;
                }
                y = y_new;
            }
            if (!converged)
                throw numeric_error("dpp_one_step: implicit recursion failed to converge");
        }
        return y;
    };

    // inf over one-step strategy maps of sup_u equals sup_u inf_v here:
    // a one-step response may pick v per u independently.
    double outer = lower ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
    for (int a_out = 0; a_out < (lower ? nu : nv); ++a_out) {
        double inner = lower ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
        for (int a_in = 0; a_in < (lower ? nv : nu); ++a_in) {
            const double val = lower ? one_pair(a_out, a_in) : one_pair(a_in, a_out);
            inner = lower ? std::min(inner, val) : std::max(inner, val);
        }
        outer = lower ? std::max(outer, inner) : std::min(outer, inner);
    }
    if (!std::isfinite(outer))
        throw numeric_error("dpp_one_step produced a non-finite value");
    return DppResult{outer, extrapolated};
}

} // namespace sdg
