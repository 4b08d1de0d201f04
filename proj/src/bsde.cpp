#include "sdg/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "sdg/errors.hpp"
#include "sdg/parallel.hpp"
#include "sdg/rng.hpp"

namespace sdg {

ControlPolicy constant_policy(int mesh_index) {
    return [mesh_index](double, double) { return mesh_index; };
}

ControlPolicy feedback_own_policy(std::shared_ptr<const FeedbackPair> pair) {
    return [pair](double t, double x) { return pair->own_at(t, x); };
}

ControlPolicy feedback_response_policy(std::shared_ptr<const FeedbackPair> pair,
                                       ControlPolicy opponent) {
    return [pair, opponent](double t, double x) {
        return pair->response_at(t, x, opponent(t, x));
    };
}

PathBundle simulate_paths(const ProblemSpec& spec, const ControlPolicy& u_policy,
                          const ControlPolicy& v_policy, double t0, double x0, int m_paths,
                          int n_steps, std::uint64_t seed, int threads) {
    spec.check_structure();
    if (!(t0 < spec.horizon)) throw spec_error("simulate_paths needs t0 < T");
    if (m_paths < 1 || n_steps < 1)
        throw spec_error("simulate_paths needs at least one path and one step");

    PathBundle b;
    b.t0 = t0;
    b.x0 = x0;
    b.m_paths = m_paths;
    b.n_steps = n_steps;
    b.seed = seed;
    const double dt = (spec.horizon - t0) / n_steps;
    b.times.resize(n_steps + 1);
    for (int k = 0; k <= n_steps; ++k) b.times[k] = t0 + k * dt;
    b.states.assign(static_cast<std::size_t>(m_paths) * (n_steps + 1), 0.0);
    b.db.assign(static_cast<std::size_t>(m_paths) * n_steps, 0.0);
    b.u_index.assign(static_cast<std::size_t>(m_paths) * n_steps, 0);
    b.v_index.assign(static_cast<std::size_t>(m_paths) * n_steps, 0);

    const double sqrt_dt = std::sqrt(dt);
    std::string abort_msg;
    std::mutex abort_mutex;

    parallel_for(m_paths, threads, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            PathRng rng(seed, static_cast<std::uint64_t>(p));
            double x = x0;
            b.states[static_cast<std::size_t>(p) * (n_steps + 1)] = x;
            CoeffArgs a;
            for (int k = 0; k < n_steps; ++k) {
                const double t = b.times[k];
                const int iu = u_policy(t, x);
                const int iv = v_policy(t, x);
                a.t = t;
                a.x = x;
                a.u = spec.control_u.point(iu);
                a.v = spec.control_v.point(iv);
                const double db = sqrt_dt * rng.normal();
                x += spec.drift(a) * dt + spec.diffusion(a) * db;
                if (!std::isfinite(x)) {
                    std::ostringstream os;
                    os << "state became non-finite on path " << p << " at step " << k;
                    std::lock_guard<std::mutex> lock(abort_mutex);
                    if (abort_msg.empty()) abort_msg = os.str();
                    return;
                }
                const std::size_t idx = static_cast<std::size_t>(p) * n_steps + k;
                b.db[idx] = db;
                b.u_index[idx] = iu;
                b.v_index[idx] = iv;
                b.states[static_cast<std::size_t>(p) * (n_steps + 1) + k + 1] = x;
            }
        }
    });
    if (!abort_msg.empty()) throw numeric_error(abort_msg);
    return b;
}

namespace {

// Least-squares projection onto polynomials of x up to `degree`, with
// centering/scaling for conditioning. Falls back to lower degrees when the
// normal equations are numerically singular.
class PolynomialRegression {
public:
    PolynomialRegression(std::span<const double> x, int degree) : x_(x) {
        mean_ = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
        double var = 0.0;
        for (double v : x) var += (v - mean_) * (v - mean_);
        scale_ = std::sqrt(var / x.size());
        if (scale_ < 1e-13) scale_ = 1.0;
        degree_used_ = degree;
    }

    /// Fits coefficients of E[rhs | x] and returns fitted values at x_.
    /// Lowers the degree when the Gram matrix is not positive definite.
    std::vector<double> fit(std::span<const double> rhs, bool& reduced) {
        for (int d = degree_used_; d >= 0; --d) {
            std::vector<double> coeff;
            if (try_fit(rhs, d, coeff)) {
                reduced = d < degree_used_;
                degree_used_ = d;
                std::vector<double> fitted(x_.size());
                for (std::size_t p = 0; p < x_.size(); ++p) {
                    const double s = (x_[p] - mean_) / scale_;
                    double acc = 0.0, pw = 1.0;
                    for (int j = 0; j <= d; ++j) {
                        acc += coeff[j] * pw;
                        pw *= s;
                    }
                    fitted[p] = acc;
                }
                return fitted;
            }
        }
        // d = 0 (the sample mean) cannot fail.
        reduced = true;
        degree_used_ = 0;
        const double m = std::accumulate(rhs.begin(), rhs.end(), 0.0) / rhs.size();
        return std::vector<double>(x_.size(), m);
    }

    int degree_used() const { return degree_used_; }

private:
    bool try_fit(std::span<const double> rhs, int d, std::vector<double>& coeff) const {
        const int n = d + 1;
        std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0);
        std::vector<double> b(n, 0.0);
        std::vector<double> basis(n);
        for (std::size_t p = 0; p < x_.size(); ++p) {
            const double s = (x_[p] - mean_) / scale_;
            double pw = 1.0;
            for (int j = 0; j < n; ++j) {
                basis[j] = pw;
                pw *= s;
            }
            for (int r = 0; r < n; ++r) {
                b[r] += basis[r] * rhs[p];
                for (int c = r; c < n; ++c) gram[r * n + c] += basis[r] * basis[c];
            }
        }
        // Cholesky with a positivity guard.
        std::vector<double> chol(gram);
        for (int r = 0; r < n; ++r) {
            for (int c = r; c < n; ++c) {
                double sum = chol[r * n + c];
                for (int j = 0; j < r; ++j) sum -= chol[j * n + r] * chol[j * n + c];
                if (r == c) {
                    if (sum <= 1e-10 * x_.size()) return false;
                    chol[r * n + r] = std::sqrt(sum);
                } else {
                    chol[r * n + c] = sum / chol[r * n + r];
                }
            }
        }
        // Forward/backward solve with the upper-triangular factor rows.
        coeff.assign(n, 0.0);
        for (int r = 0; r < n; ++r) {
            double sum = b[r];
            for (int j = 0; j < r; ++j) sum -= chol[j * n + r] * coeff[j];
            coeff[r] = sum / chol[r * n + r];
        }
        for (int r = n - 1; r >= 0; --r) {
            double sum = coeff[r];
            for (int j = r + 1; j < n; ++j) sum -= chol[r * n + j] * coeff[j];
            coeff[r] = sum / chol[r * n + r];
        }
        return true;
    }

    std::span<const double> x_;
    double mean_ = 0.0;
    double scale_ = 1.0;
    int degree_used_ = 0;
};

} // namespace

BSDESolution solve_bsde(const PathBundle& bundle, const ProblemSpec& spec, int basis_degree) {
    if (basis_degree < 1) throw spec_error("solve_bsde needs basis_degree >= 1");
    const int m = bundle.m_paths;
    const int n = bundle.n_steps;
    const double dt = bundle.dt();

    BSDESolution sol;
    sol.y.assign(static_cast<std::size_t>(m) * (n + 1), 0.0);
    sol.z.assign(static_cast<std::size_t>(m) * n, 0.0);
    sol.basis_degree_used = basis_degree;

    // Terminal slice equals h exactly.
    for (int p = 0; p < m; ++p) {
        CoeffArgs a;
        a.x = bundle.state(p, n);
        sol.y[static_cast<std::size_t>(p) * (n + 1) + n] = spec.terminal(a);
    }

    std::vector<double> xk(m), y_next(m), z_rhs(m);
    bool any_reduced = false;
    bool all_degenerate = true;

    for (int k = n - 1; k >= 0; --k) {
        const double t = bundle.times[k];
        for (int p = 0; p < m; ++p) {
            xk[p] = bundle.state(p, k);
            y_next[p] = sol.y[static_cast<std::size_t>(p) * (n + 1) + k + 1];
        }

        // Paths that coincide (sigma == 0 so far) need no regression: the
        // conditional expectation is the pathwise value.
        const auto [lo_it, hi_it] = std::minmax_element(xk.begin(), xk.end());
        const bool degenerate = (*hi_it - *lo_it) <= 1e-13 * (1.0 + std::fabs(*hi_it));
        all_degenerate = all_degenerate && degenerate;

        std::vector<double> cond_y, cond_z;
        if (degenerate) {
            cond_y = y_next;
            cond_z.assign(m, 0.0);
        } else {
            PolynomialRegression reg(xk, basis_degree);
            bool reduced = false;
            cond_y = reg.fit(y_next, reduced);
            any_reduced = any_reduced || reduced;
            for (int p = 0; p < m; ++p)
                z_rhs[p] = y_next[p] * bundle.db[static_cast<std::size_t>(p) * n + k] / dt;
            bool reduced_z = false;
            cond_z = reg.fit(z_rhs, reduced_z);
            any_reduced = any_reduced || reduced_z;
            sol.basis_degree_used = std::min(sol.basis_degree_used, reg.degree_used());
        }

        const bool gen_depends_y = spec.generator.depends_y();
        for (int p = 0; p < m; ++p) {
            const std::size_t idx = static_cast<std::size_t>(p) * n + k;
            CoeffArgs a;
            a.t = t;
            a.x = xk[p];
            a.z = cond_z[p];
            a.u = spec.control_u.point(bundle.u_index[idx]);
            a.v = spec.control_v.point(bundle.v_index[idx]);

            double y = cond_y[p];
            if (!gen_depends_y) {
                a.y = y;
                y = cond_y[p] + dt * spec.generator(a);
            } else {
                bool converged = false;
                for (int it = 0; it < 100; ++it) {
                    a.y = y;
                    const double y_new = cond_y[p] + dt * spec.generator(a);
                    if (!std::isfinite(y_new)) break;
                    if (std::fabs(y_new - y) <= 1e-12) {
                        y = y_new;
                        converged = true;
                        break;
                    }
                    y = y_new;
                }
                if (!converged) {
                    std::ostringstream os;
                    os << "implicit Y step failed to converge on path " << p << " at step " << k;
                    throw numeric_error(os.str());
                }
            }
            if (!std::isfinite(y)) {
                std::ostringstream os;
                os << "Y became non-finite on path " << p << " at step " << k;
                throw numeric_error(os.str());
            }
            sol.y[static_cast<std::size_t>(p) * (n + 1) + k] = y;
            sol.z[idx] = cond_z[p];
        }
    }

    sol.degenerate_dynamics = all_degenerate;
    if (any_reduced)
        sol.warnings.push_back("regression rank deficiency: basis degree reduced");

    double acc = 0.0;
    for (int p = 0; p < m; ++p) acc += sol.y[static_cast<std::size_t>(p) * (n + 1)];
    sol.y0 = acc / m;
    return sol;
}

namespace {

double bootstrap_std_error(std::span<const double> samples, std::uint64_t seed) {
    const int b_rounds = 200;
    const int m = static_cast<int>(samples.size());
    if (m < 2) return 0.0;
    PathRng rng(seed ^ 0xB00757A9ULL, 7);
    double sum = 0.0, sum2 = 0.0;
    for (int b = 0; b < b_rounds; ++b) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i)
            acc += samples[static_cast<int>(rng.uniform() * m) % m];
        const double mean = acc / m;
        sum += mean;
        sum2 += mean * mean;
    }
    const double mean_of_means = sum / b_rounds;
    return std::sqrt(std::max(0.0, sum2 / b_rounds - mean_of_means * mean_of_means));
}

} // namespace

CostEstimate cost_j(const ProblemSpec& spec, const ControlPolicy& u_policy,
                    const ControlPolicy& v_policy, double t0, double x0, const McSection& mc,
                    int threads) {
    const PathBundle bundle =
        simulate_paths(spec, u_policy, v_policy, t0, x0, mc.paths, mc.steps, mc.seed, threads);
    const BSDESolution sol = solve_bsde(bundle, spec, mc.basis_degree);

    CostEstimate est;
    est.j = sol.y0;
    est.m_paths = mc.paths;
    est.n_steps = mc.steps;
    est.seed = mc.seed;
    est.degenerate_dynamics = sol.degenerate_dynamics;
    est.path_y0.resize(mc.paths);
    for (int p = 0; p < mc.paths; ++p)
        est.path_y0[p] = sol.y_at(p, 0, mc.steps);
    est.std_error = bootstrap_std_error(est.path_y0, mc.seed);
    return est;
}

ComparisonReport comparison_probe(const ProblemSpec& spec1, const ProblemSpec& spec2,
                                  const ControlPolicy& u_policy, const ControlPolicy& v_policy,
                                  double t0, double x0, const McSection& mc) {
    // Premises: shared dynamics, g1 <= g2 and h1 <= h2, checked by sampling.
    ValidationOptions box;
    const int budget = 2000;
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / 7.0);
    double alpha[6], state[6];
    double a0 = 1.0;
    for (int j = 0; j < 6; ++j) {
        a0 /= phi;
        alpha[j] = a0;
        state[j] = 0.5;
    }
    for (int s = 0; s < budget; ++s) {
        for (int j = 0; j < 6; ++j) {
            state[j] += alpha[j];
            if (state[j] >= 1.0) state[j] -= 1.0;
        }
        CoeffArgs a;
        a.t = state[0] * spec1.horizon;
        a.x = box.x_lo + (box.x_hi - box.x_lo) * state[1];
        a.y = -2.0 + 4.0 * state[2];
        a.z = -2.0 + 4.0 * state[3];
        const int iu = static_cast<int>(state[4] * spec1.control_u.count()) %
                       spec1.control_u.count();
        const int iv = static_cast<int>(state[5] * spec1.control_v.count()) %
                       spec1.control_v.count();
        a.u = spec1.control_u.point(iu);
        a.v = spec1.control_v.point(iv);
        if (spec1.generator(a) > spec2.generator(a) + 1e-12)
            throw spec_error("comparison_probe premise violated: g1 > g2 at a sampled point");
        if (spec1.terminal(a) > spec2.terminal(a) + 1e-12)
            throw spec_error("comparison_probe premise violated: h1 > h2 at a sampled point");
        if (std::fabs(spec1.drift(a) - spec2.drift(a)) > 1e-12 ||
            std::fabs(spec1.diffusion(a) - spec2.diffusion(a)) > 1e-12)
            throw spec_error("comparison_probe premise violated: dynamics differ");
    }

    // Identical bundle for both solves: literal common random numbers.
    const PathBundle bundle =
        simulate_paths(spec1, u_policy, v_policy, t0, x0, mc.paths, mc.steps, mc.seed);
    const BSDESolution s1 = solve_bsde(bundle, spec1, mc.basis_degree);
    const BSDESolution s2 = solve_bsde(bundle, spec2, mc.basis_degree);

    ComparisonReport rep;
    rep.j1 = s1.y0;
    rep.j2 = s2.y0;
    double acc = 0.0, acc2 = 0.0;
    for (int p = 0; p < mc.paths; ++p) {
        const double d = s2.y_at(p, 0, mc.steps) - s1.y_at(p, 0, mc.steps);
        acc += d;
        acc2 += d * d;
    }
    rep.diff_mean = acc / mc.paths;
    const double var = std::max(0.0, acc2 / mc.paths - rep.diff_mean * rep.diff_mean);
    rep.diff_std_error = std::sqrt(var / mc.paths);
    rep.passed = rep.j1 <= rep.j2 + 3.0 * rep.diff_std_error;
    std::ostringstream os;
    os << "J1 = " << rep.j1 << ", J2 = " << rep.j2 << ", paired diff = " << rep.diff_mean
       << " +- " << rep.diff_std_error;
    rep.detail = os.str();
    return rep;
}

} // namespace sdg
