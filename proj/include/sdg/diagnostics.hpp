#pragma once

#include <string>
#include <vector>

#include "sdg/problem.hpp"

namespace sdg {

/// The strict-supersolution weight exp((lambda (T - t) + Upsilon) kappa(x))
/// with kappa(x) = (0.5 log(x^2 + 1) + 1)^2, and its exact derivatives.
struct ReferenceFunctionSpec {
    double upsilon = 1.0;
    double lambda = 1.0;
    double horizon = 1.0;

    double t1() const { return horizon - upsilon / lambda; }

    static double kappa(double x);
    static double kappa_prime(double x);
    static double kappa_second(double x);

    double nu(double t, double x) const;
    double nu_t(double t, double x) const;
    double nu_x(double t, double x) const;
    double nu_xx(double t, double x) const;
};

struct LipschitzXReport {
    double global = 0.0;
    std::vector<double> per_slice;
};

/// max |W(t, x_{i+1}) - W(t, x_i)| / dx per time slice and globally.
LipschitzXReport lipschitz_x(const ValueField& field);

struct HolderTReport {
    double coefficient_half = 0.0; // c fitted against |dt|^{1/2}
    double fitted_exponent = 0.0;
    bool exact = false; // field constant in t within 1e-12
};

/// Fits |W(t, x) - W(t', x)| <= c |t - t'|^alpha over slice pairs with x in
/// the interior window [x_lo + window w, x_hi - window w].
HolderTReport holder_t(const ValueField& field, double x_window = 0.3);

/// max |W(t, x) - W(t', x)| / |t - t'| over slice pairs inside [0, T - delta]
/// (time-Lipschitz estimate away from the terminal layer).
double lipschitz_t_interior(const ValueField& field, double delta);

enum class Verdict { pass, fail, inconclusive };

struct GammaReport {
    Verdict verdict = Verdict::inconclusive;
    double worst_increase = 0.0;
    std::string detail;
};

/// Checks that max_t |W(t, x)| exp(-Upsilon (log (x^2+1)^{1/2})^2) decreases
/// in |x| over the outer half of the domain. Needs the domain to reach
/// |x| >= 4; narrower fields give an inconclusive verdict.
GammaReport gamma_membership(const ValueField& field, double upsilon);

/// Linear-growth constant: max |W| / (1 + |x|) over the field.
double growth_constant(const ValueField& field);

struct LambdaSearchResult {
    bool found = false;
    double lambda = 0.0;
    double margin = 0.0; // worst (closest to zero) value of the inequality
    std::string worst_node;
    std::vector<double> chain_t; // interval endpoints t1 > t2 > ... >= 0
};

/// Doubling search over lambda in {1, 2, 4, ..., 2^20} for the smallest
/// lambda making
///   d_t nu + sup_{u,v} { 0.5 sigma^2 nu_xx + b nu_x } < 0
/// hold strictly at every node of [t1, T] x [x_lo, x_hi] and every control
/// pair, with t1 = T - Upsilon / lambda. On success the report also carries
/// the interval chain [t2, t1], [t3, t2], ... down to 0, each re-verified.
LambdaSearchResult find_lambda(const ProblemSpec& spec, double upsilon, const GridSpec& grid,
                               int time_samples = 16);

} // namespace sdg
