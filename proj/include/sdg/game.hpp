#pragma once

#include <string>
#include <vector>

#include "sdg/bsde.hpp"
#include "sdg/problem.hpp"

namespace sdg {

/// Reads the optimal feedback pair off a solved field: at each node the
/// strategy response argmin_v H^Z(.., u, v) per u and the control
/// argmax_u of the responded value (orders swapped for upper fields), with
/// derivatives from central differences and ties broken to the lowest mesh
/// index. Boundary nodes copy the nearest interior node and are flagged.
/// The pair's time axis is coarsened to at most max_time_slices.
FeedbackPair extract_feedback(const ProblemSpec& spec, const ValueField& field,
                              int max_time_slices = 100);

struct SaddleDeviation {
    int mesh_index = 0;
    double j = 0.0;
    double paired_std_error = 0.0;
    double violation = 0.0; // positive part beyond 3 stderr + tolerance
};

struct SaddleReport {
    double j_pair = 0.0;
    double pair_std_error = 0.0;
    std::vector<SaddleDeviation> own_deviations;      // controls of the optimizing player
    std::vector<SaddleDeviation> opponent_deviations; // controls of the adversary
    double max_own_violation = 0.0;
    double max_opponent_violation = 0.0;
    bool passed = false;
    std::string detail;
};

/// Checks the saddle inequalities at (t, x) by Monte Carlo with common
/// random numbers: constant deviations of the control player must not beat
/// the pair, constant deviations of the adversary must not improve on it,
/// each within 3 paired standard errors plus the scheme tolerance.
SaddleReport saddle_check(const ProblemSpec& spec, const FeedbackPair& pair, double t, double x,
                          const std::vector<int>& own_deviations,
                          const std::vector<int>& opponent_deviations, const McSection& mc,
                          double scheme_tolerance);

struct DppResult {
    double value = 0.0;
    bool extrapolated = false; // the transition left the field's domain
};

/// One-step dynamic-programming value at (t, x): optimizes over the control
/// meshes the backward recursion y = E[W(t + delta, x')] + delta g(..),
/// with the transition expectation by Gauss quadrature against the normal
/// increment and W(t + delta, .) read from the field by linear
/// interpolation. Exact pointwise best response replaces enumeration of
/// one-step strategy maps (the two coincide on finite meshes).
DppResult dpp_one_step(const ProblemSpec& spec, const ValueField& field, double t, double x,
                       double delta, int quad_points = 32);

} // namespace sdg
