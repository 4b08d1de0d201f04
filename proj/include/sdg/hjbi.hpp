#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdg/problem.hpp"

namespace sdg {

/// Stability bounds of the explicit scheme on a given grid.
struct CflReport {
    double max_sigma_sq = 0.0;  // over grid nodes and control pairs
    double max_abs_drift = 0.0;
    double zero_order = 0.0;    // |theta| + eta * max(1, |Y|_est^{p-1})
    double y_estimate = 0.0;
    double max_stable_dt = 0.0; // +inf when unconstrained
    bool unconstrained = false;

    std::string to_string() const;
};

/// Largest stable time step
///   dt_max = dx^2 / (max sigma^2 + dx * max|b| + dx^2 * zero_order).
CflReport cfl_check(const ProblemSpec& spec, const GridSpec& grid);

struct SolveOptions {
    int threads = 1;
    /// Safety factor applied when the grid requests the automatic (CFL)
    /// time-step count.
    double cfl_safety = 0.9;
    /// Step count used when the scheme is unconstrained (all bounds zero).
    int default_steps = 100;
};

/// Solves the lower or upper HJBI equation backward from W(T, .) = h by the
/// monotone explicit scheme: central second differences, drift-sign upwind
/// first differences, semi-implicit treatment of the y argument of g, and
/// sup-inf (lower) or inf-sup (upper) over the control meshes at every node.
/// Boundary nodes use one-sided differences with zero curvature (linear
/// extrapolation). grid.n_t = 0 requests the CFL-derived step count; a
/// positive n_t violating the CFL bound is rejected before marching.
ValueField solve_hjbi(const ProblemSpec& spec, GridSpec grid, Side side,
                      const SolveOptions& opts = {});

/// Max |field - reference| over every time slice, restricted to nodes at
/// least `margin` of the domain width away from each boundary.
double interior_linf_error(const ValueField& field,
                           const std::function<double(double, double)>& reference,
                           double margin = 0.3);

struct ConvergenceReport {
    std::vector<double> dx;
    std::vector<double> error;   // interior error at the initial-time slice
    std::vector<double> orders;  // observed order between successive grids
    bool exact = false;          // all errors below 1e-12
    bool monotone = true;        // error sequence decreasing
    std::string to_string() const;
};

/// Richardson-style observed orders across nested grids. Uses the analytic
/// reference when given, otherwise the finest grid's initial slice.
ConvergenceReport convergence_study(const ProblemSpec& spec, const std::vector<GridSpec>& grids,
                                    Side side,
                                    const std::function<double(double, double)>* reference = nullptr,
                                    const SolveOptions& opts = {});

} // namespace sdg
