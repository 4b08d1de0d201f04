#include "sdg/hjbi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "sdg/errors.hpp"
#include "sdg/parallel.hpp"

namespace sdg {

std::string CflReport::to_string() const {
    std::ostringstream os;
    os << "max sigma^2 = " << max_sigma_sq << ", max |b| = " << max_abs_drift
       << ", zero-order = " << zero_order << ", |Y|_est = " << y_estimate << ", dt_max = ";
    if (unconstrained)
        os << "unconstrained";
    else
        os << max_stable_dt;
    return os.str();
}

CflReport cfl_check(const ProblemSpec& spec, const GridSpec& grid) {
    spec.check_structure();
    grid.check();
    const double dx = grid.dx();
    if (!(dx > 0.0)) throw spec_error("cfl_check: zero space step");

    const int nu = spec.control_u.count();
    const int nv = spec.control_v.count();
    const bool timed = spec.drift.time_varying() || spec.diffusion.time_varying();
    const std::vector<double> t_samples =
        timed ? std::vector<double>{0.0, 0.25 * spec.horizon, 0.5 * spec.horizon,
                                    0.75 * spec.horizon, spec.horizon}
              : std::vector<double>{0.0};

    CflReport rep;
    double max_h = 0.0;
    // Generator probe point: the band midpoint for band-limited generators
    // (their edges may be singular or unreachable for transformed g).
    const double y_ref = spec.y_band ? 0.5 * (spec.y_band->lo + spec.y_band->hi) : 0.0;
    double max_g0 = 0.0;
    for (int i = 0; i < grid.n_x; ++i) {
        CoeffArgs args;
        args.x = grid.x(i);
        max_h = std::max(max_h, std::fabs(spec.terminal(args)));
        args.y = y_ref;
        for (double t : t_samples) {
            args.t = t;
            for (int iu = 0; iu < nu; ++iu) {
                args.u = spec.control_u.point(iu);
                for (int iv = 0; iv < nv; ++iv) {
                    args.v = spec.control_v.point(iv);
                    const double b = spec.drift(args);
                    const double s = spec.diffusion(args);
                    const double g0 = spec.generator(args);
                    if (!std::isfinite(b) || !std::isfinite(s) || !std::isfinite(g0)) {
                        std::ostringstream os;
                        os << "cfl_check: non-finite coefficient at (t=" << t
                           << ", x=" << args.x << ")";
                        throw numeric_error(os.str());
                    }
                    rep.max_sigma_sq = std::max(rep.max_sigma_sq, s * s);
                    rep.max_abs_drift = std::max(rep.max_abs_drift, std::fabs(b));
                    max_g0 = std::max(max_g0, std::fabs(g0));
                }
            }
        }
    }
    rep.y_estimate =
        max_h + spec.horizon * (max_g0 + spec.eta * (1.0 + std::pow(max_h, spec.growth_p)));
    rep.zero_order = std::fabs(spec.theta) +
                     spec.eta * std::max(1.0, std::pow(rep.y_estimate, spec.growth_p - 1.0));
    if (spec.eta == 0.0 && spec.theta == 0.0) rep.zero_order = 0.0;

    const double denom = rep.max_sigma_sq + dx * rep.max_abs_drift + dx * dx * rep.zero_order;
    if (denom <= 0.0) {
        rep.unconstrained = true;
        rep.max_stable_dt = std::numeric_limits<double>::infinity();
    } else {
        rep.max_stable_dt = dx * dx / denom;
    }
    return rep;
}

namespace {

struct NodeDerivatives {
    double dp, dm, dc, d2;
};

NodeDerivatives derivatives_at(std::span<const double> w, int i, int n, double dx) {
    NodeDerivatives d;
    if (i == 0) {
        d.dp = d.dm = d.dc = (w[1] - w[0]) / dx;
        d.d2 = 0.0;
    } else if (i == n - 1) {
        d.dp = d.dm = d.dc = (w[n - 1] - w[n - 2]) / dx;
        d.d2 = 0.0;
    } else {
        d.dp = (w[i + 1] - w[i]) / dx;
        d.dm = (w[i] - w[i - 1]) / dx;
        d.dc = (w[i + 1] - w[i - 1]) / (2.0 * dx);
        d.d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
    }
    return d;
}

} // namespace

ValueField solve_hjbi(const ProblemSpec& spec, GridSpec grid, Side side,
                      const SolveOptions& opts) {
    spec.check_structure();
    grid.check();
    const CflReport cfl = cfl_check(spec, grid);
    const double T = spec.horizon;

    if (grid.n_t == 0) {
        if (cfl.unconstrained)
            grid.n_t = opts.default_steps;
        else
            grid.n_t = std::max(1, static_cast<int>(
                                       std::ceil(T / (opts.cfl_safety * cfl.max_stable_dt))));
    } else if (!cfl.unconstrained && T / grid.n_t > cfl.max_stable_dt * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "CFL violation: dt = " << T / grid.n_t << " exceeds dt_max = " << cfl.max_stable_dt
           << " (" << cfl.to_string() << ")";
        throw numeric_error(os.str());
    }

    const int n = grid.n_x;
    const int nu = spec.control_u.count();
    const int nv = spec.control_v.count();
    const int np = nu * nv;
    const double dx = grid.dx();
    const double dt = T / grid.n_t;

    ValueField field;
    field.grid = grid;
    field.side = side;
    field.horizon = T;
    field.values.assign(static_cast<std::size_t>(grid.n_t + 1) * n, 0.0);

    // Terminal slice equals h on the grid exactly.
    for (int i = 0; i < n; ++i) {
        CoeffArgs a;
        a.x = grid.x(i);
        const double h = spec.terminal(a);
        if (!std::isfinite(h))
            throw numeric_error("terminal condition non-finite at x=" + std::to_string(a.x));
        field.at(grid.n_t, i) = h;
    }

    const bool dyn_tabulated = !spec.drift.time_varying() && !spec.diffusion.time_varying();
    const bool gen_tabulated = !spec.generator.time_varying() && !spec.generator.depends_y() &&
                               spec.generator.affine_z();
    const bool needs_y_iteration = spec.generator.depends_y();

    // Per-(node, pair) coefficient tables, refreshed per step only when a
    // coefficient reads t.
    std::vector<double> tab_b(static_cast<std::size_t>(n) * np);
    std::vector<double> tab_sig(static_cast<std::size_t>(n) * np);
    std::vector<double> tab_s2(static_cast<std::size_t>(n) * np);
    std::vector<double> tab_g0, tab_gz;
    if (gen_tabulated) {
        tab_g0.resize(static_cast<std::size_t>(n) * np);
        tab_gz.resize(static_cast<std::size_t>(n) * np, 0.0);
    }

    auto fill_tables = [&](double t) {
        for (int i = 0; i < n; ++i) {
            CoeffArgs a;
            a.t = t;
            a.x = grid.x(i);
            double* b_row = tab_b.data() + static_cast<std::size_t>(i) * np;
            double* sig_row = tab_sig.data() + static_cast<std::size_t>(i) * np;
            double* s2_row = tab_s2.data() + static_cast<std::size_t>(i) * np;
            for (int iu = 0; iu < nu; ++iu) {
                a.u = spec.control_u.point(iu);
                for (int iv = 0; iv < nv; ++iv) {
                    a.v = spec.control_v.point(iv);
                    const int j = iu * nv + iv;
                    b_row[j] = spec.drift(a);
                    sig_row[j] = spec.diffusion(a);
                    s2_row[j] = sig_row[j] * sig_row[j];
                }
            }
        }
    };
    auto fill_generator_tables = [&](double t) {
        const bool reads_z = spec.generator.depends_z();
        for (int i = 0; i < n; ++i) {
            CoeffArgs a;
            a.t = t;
            a.x = grid.x(i);
            double* g0_row = tab_g0.data() + static_cast<std::size_t>(i) * np;
            double* gz_row = tab_gz.data() + static_cast<std::size_t>(i) * np;
            for (int iu = 0; iu < nu; ++iu) {
                a.u = spec.control_u.point(iu);
                for (int iv = 0; iv < nv; ++iv) {
                    a.v = spec.control_v.point(iv);
                    const int j = iu * nv + iv;
                    a.z = 0.0;
                    g0_row[j] = spec.generator(a);
                    if (reads_z) {
                        a.z = 1.0;
                        gz_row[j] = spec.generator(a) - g0_row[j];
                    }
                }
            }
        }
    };

    if (dyn_tabulated) fill_tables(0.0);
    if (gen_tabulated) fill_generator_tables(0.0);

    const double band_lo = spec.y_band ? spec.y_band->lo : 0.0;
    const double band_hi = spec.y_band ? spec.y_band->hi : 0.0;
    const bool banded = spec.y_band.has_value();
    const bool lower = side == Side::lower;

    std::mutex abort_mutex;
    std::string abort_msg;
    auto record_abort = [&](const std::string& msg) {
        std::lock_guard<std::mutex> lock(abort_mutex);
        if (abort_msg.empty()) abort_msg = msg;
    };

    for (int k = grid.n_t - 1; k >= 0; --k) {
        const double t = k * dt;
        if (!dyn_tabulated) fill_tables(t);
        const std::span<const double> w = field.slice(k + 1);
        double* out = field.values.data() + static_cast<std::size_t>(k) * n;

        auto update_range = [&](int lo, int hi) {
            CoeffArgs ga;
            ga.t = t;
            for (int i = lo; i < hi; ++i) {
                const NodeDerivatives d = derivatives_at(w, i, n, dx);
                const double* b_row = tab_b.data() + static_cast<std::size_t>(i) * np;
                const double* sig_row = tab_sig.data() + static_cast<std::size_t>(i) * np;
                const double* s2_row = tab_s2.data() + static_cast<std::size_t>(i) * np;

                double h_opt = 0.0;
                if (gen_tabulated) {
                    const double* g0_row = tab_g0.data() + static_cast<std::size_t>(i) * np;
                    const double* gz_row = tab_gz.data() + static_cast<std::size_t>(i) * np;
                    double outer = lower ? -std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::infinity();
                    if (lower) {
                        for (int iu = 0; iu < nu; ++iu) {
                            double inner = std::numeric_limits<double>::infinity();
                            const int base = iu * nv;
                            for (int iv = 0; iv < nv; ++iv) {
                                const int j = base + iv;
                                const double b = b_row[j];
                                const double h = 0.5 * s2_row[j] * d.d2 +
                                                 b * (b >= 0.0 ? d.dp : d.dm) + g0_row[j] +
                                                 gz_row[j] * (d.dc * sig_row[j]);
                                inner = std::min(inner, h);
                            }
                            outer = std::max(outer, inner);
                        }
                    } else {
                        for (int iv = 0; iv < nv; ++iv) {
                            double inner = -std::numeric_limits<double>::infinity();
                            for (int iu = 0; iu < nu; ++iu) {
                                const int j = iu * nv + iv;
                                const double b = b_row[j];
                                const double h = 0.5 * s2_row[j] * d.d2 +
                                                 b * (b >= 0.0 ? d.dp : d.dm) + g0_row[j] +
                                                 gz_row[j] * (d.dc * sig_row[j]);
                                inner = std::max(inner, h);
                            }
                            outer = std::min(outer, inner);
                        }
                    }
                    h_opt = outer;
                } else {
                    ga.x = grid.x(i);
                    auto hamiltonian_at = [&](double y) {
                        ga.y = y;
                        double outer = lower ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
                        for (int a_outer = 0; a_outer < (lower ? nu : nv); ++a_outer) {
                            double inner = lower ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
                            for (int a_inner = 0; a_inner < (lower ? nv : nu); ++a_inner) {
                                const int iu = lower ? a_outer : a_inner;
                                const int iv = lower ? a_inner : a_outer;
                                const int j = iu * nv + iv;
                                ga.u = spec.control_u.point(iu);
                                ga.v = spec.control_v.point(iv);
                                ga.z = d.dc * sig_row[j];
                                const double g = spec.generator(ga);
                                const double b = b_row[j];
                                const double h =
                                    0.5 * s2_row[j] * d.d2 + b * (b >= 0.0 ? d.dp : d.dm) + g;
                                inner = lower ? std::min(inner, h) : std::max(inner, h);
                            }
                            outer = lower ? std::max(outer, inner) : std::min(outer, inner);
                        }
                        return outer;
                    };

                    double y = w[i];
                    if (banded && !(y >= band_lo && y <= band_hi)) {
                        std::ostringstream os;
                        os << "value left the declared y band at (t=" << t << ", x=" << ga.x
                           << "): y=" << y;
                        record_abort(os.str());
                        return;
                    }
                    if (!needs_y_iteration) {
                        h_opt = hamiltonian_at(y);
                    } else {
                        bool converged = false;
                        for (int it = 0; it < 50; ++it) {
                            const double y_next = w[i] + dt * hamiltonian_at(y);
                            if (!std::isfinite(y_next)) break;
                            if (std::fabs(y_next - y) <= 1e-12) {
                                y = y_next;
                                converged = true;
                                break;
                            }
                            y = y_next;
                        }
                        if (!converged) {
                            std::ostringstream os;
                            os << "semi-implicit fixed point failed to converge at (t=" << t
                               << ", x=" << ga.x << ")";
                            record_abort(os.str());
                            return;
                        }
                        h_opt = (y - w[i]) / dt;
                    }
                }

                const double w_new = w[i] + dt * h_opt;
                if (!std::isfinite(w_new)) {
                    std::ostringstream os;
                    os << "solver produced a non-finite value at (t=" << t << ", x=" << grid.x(i)
                       << ")";
                    record_abort(os.str());
                    return;
                }
                out[i] = w_new;
            }
        };

        parallel_for(n, opts.threads, update_range);
        if (!abort_msg.empty()) throw numeric_error(abort_msg);
    }
    return field;
}

double interior_linf_error(const ValueField& field,
                           const std::function<double(double, double)>& reference,
                           double margin) {
    const auto& g = field.grid;
    const double width = g.x_hi - g.x_lo;
    const double lo = g.x_lo + margin * width;
    const double hi = g.x_hi - margin * width;
    double worst = 0.0;
    for (int k = 0; k <= g.n_t; ++k) {
        const double t = field.t(k);
        for (int i = 0; i < g.n_x; ++i) {
            const double x = g.x(i);
            if (x < lo || x > hi) continue;
            worst = std::max(worst, std::fabs(field.at(k, i) - reference(t, x)));
        }
    }
    return worst;
}

std::string ConvergenceReport::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        os << "dx = " << dx[i] << ": error = " << error[i];
        if (i > 0 && i - 1 < orders.size()) os << ", order = " << orders[i - 1];
        os << "\n";
    }
    if (exact) os << "errors below 1e-12; order reported as exact\n";
    if (!monotone) os << "warning: error sequence is not monotone\n";
    return os.str();
}

ConvergenceReport convergence_study(const ProblemSpec& spec, const std::vector<GridSpec>& grids,
                                    Side side,
                                    const std::function<double(double, double)>* reference,
                                    const SolveOptions& opts) {
    if (grids.size() < 3) throw spec_error("convergence_study needs at least 3 grids");
    ConvergenceReport rep;
    std::vector<ValueField> fields;
    fields.reserve(grids.size());
    for (const auto& g : grids) fields.push_back(solve_hjbi(spec, g, side, opts));

    for (std::size_t l = 0; l < fields.size(); ++l) {
        const auto& f = fields[l];
        const auto& g = f.grid;
        const double width = g.x_hi - g.x_lo;
        const double lo = g.x_lo + 0.3 * width;
        const double hi = g.x_hi - 0.3 * width;
        double err = 0.0;
        for (int i = 0; i < g.n_x; ++i) {
            const double x = g.x(i);
            if (x < lo || x > hi) continue;
            double ref;
            if (reference)
                ref = (*reference)(0.0, x);
            else if (l + 1 < fields.size())
                ref = fields.back().interpolate(0.0, x);
            else
                continue; // finest grid is its own reference
            err = std::max(err, std::fabs(f.at(0, i) - ref));
        }
        rep.dx.push_back(g.dx());
        rep.error.push_back(err);
    }
    if (!reference) {
        rep.dx.pop_back();
        rep.error.pop_back();
    }

    rep.exact = true;
    for (double e : rep.error) rep.exact = rep.exact && e < 1e-12;
    for (std::size_t i = 0; i + 1 < rep.error.size(); ++i) {
        if (rep.error[i + 1] > rep.error[i]) rep.monotone = false;
        if (rep.exact || rep.error[i + 1] <= 0.0 || rep.error[i] <= 0.0) {
            rep.orders.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            rep.orders.push_back(std::log(rep.error[i] / rep.error[i + 1]) /
                                 std::log(rep.dx[i] / rep.dx[i + 1]));
        }
    }
    return rep;
}

} // namespace sdg
