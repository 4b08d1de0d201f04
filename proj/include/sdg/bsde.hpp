#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "sdg/config.hpp"
#include "sdg/problem.hpp"

namespace sdg {

/// A closed-loop control rule: (t, x) -> index into the owning control mesh.
using ControlPolicy = std::function<int(double, double)>;

ControlPolicy constant_policy(int mesh_index);

/// u_hat(t, x) of a lower-side pair (v_hat for upper side).
ControlPolicy feedback_own_policy(std::shared_ptr<const FeedbackPair> pair);

/// The strategy response beta_hat(t, x, opponent(t, x)).
ControlPolicy feedback_response_policy(std::shared_ptr<const FeedbackPair> pair,
                                       ControlPolicy opponent);

/// Euler-Maruyama simulation of the controlled state equation, reproducible
/// from the seed at any worker count. Throws numeric_error with the path and
/// step index when a state becomes non-finite.
PathBundle simulate_paths(const ProblemSpec& spec, const ControlPolicy& u_policy,
                          const ControlPolicy& v_policy, double t0, double x0, int m_paths,
                          int n_steps, std::uint64_t seed, int threads = 1);

/// Backward regression sweep along the bundle: Y_N = h(x_N) exactly, Z by
/// least-squares projection of Y_{k+1} dB_k / dt, Y_k from the per-sample
/// implicit equation Y_k = E[Y_{k+1}|x_k] + dt g(.., Y_k, Z_k, ..) iterated
/// to 1e-12. Rank-deficient regressions fall back to a lower degree with a
/// warning; sigma == 0 dynamics shortcut to pathwise backward integration.
BSDESolution solve_bsde(const PathBundle& bundle, const ProblemSpec& spec, int basis_degree);

struct CostEstimate {
    double j = 0.0;
    double std_error = 0.0; // bootstrap standard error of the mean
    int m_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    bool degenerate_dynamics = false;
    std::vector<double> path_y0; // per-path initial values, kept for pairing
};

/// The recursive cost J(t, x; u, v): simulate_paths composed with solve_bsde.
CostEstimate cost_j(const ProblemSpec& spec, const ControlPolicy& u_policy,
                    const ControlPolicy& v_policy, double t0, double x0, const McSection& mc,
                    int threads = 1);

struct ComparisonReport {
    double j1 = 0.0;
    double j2 = 0.0;
    double diff_mean = 0.0;      // J2 - J1 from paired samples
    double diff_std_error = 0.0; // paired standard error
    bool passed = false;         // J1 <= J2 + 3 * diff_std_error
    std::string detail;
};

/// Runs both generators/terminals on one set of paths (common random
/// numbers) and checks the comparison inequality J1 <= J2 + 3 stderr.
/// Premises g1 <= g2, h1 <= h2 and shared dynamics are verified by sampling
/// first; a violated premise rejects with spec_error.
ComparisonReport comparison_probe(const ProblemSpec& spec1, const ProblemSpec& spec2,
                                  const ControlPolicy& u_policy, const ControlPolicy& v_policy,
                                  double t0, double x0, const McSection& mc);

} // namespace sdg
