#pragma once

#include <optional>
#include <string>

#include "sdg/problem.hpp"

namespace sdg {

/// Epstein-Zin recursive-utility parameters. Only the two regimes compatible
/// with polynomial growth are accepted: (i) vartheta > 1 and varsigma > 1,
/// (ii) vartheta < 1 and varsigma < 1; regime (ii) additionally needs a
/// strictly positive consumption floor.
struct EpsteinZinParams {
    double rho = 0.1;
    double vartheta = 2.0;
    double varsigma = 2.0;
    double consumption_lo = 0.1; // M
    double consumption_hi = 1.0; // N

    /// Throws spec_error naming the violated condition.
    void check() const;
    bool regime_high() const { return vartheta > 1.0; } // regime (i)
};

/// Market data for the portfolio example (constant rates).
struct MarketParams {
    double rate = 0.05;       // bond interest rate r
    double appreciation = 0.1; // stock appreciation rate b
    double volatility = 0.2;  // stock volatility sigma
};

struct CorpusOptions {
    double horizon = 1.0;
    int control_points = 21;    // mesh points per control dimension (ex51/ex52)
    int control_points_53 = 5;  // per dimension for the two-dimensional sets of ex53
    EpsteinZinParams ez{};
    MarketParams market{};
    double terminal_shift_53 = 0.0; // shifts h of ex53 deeper into the y band
};

/// Builds one of the corpus games by id ("ex51", "ex52", "ex53").
ProblemSpec build_example(const std::string& id, const CorpusOptions& opts = {});

/// Closed-form value function where one exists (ex51, ex52); absent for ex53.
std::optional<double> analytic_solution(const std::string& id, double t, double x, double T);

/// The Epstein-Zin aggregator with the spec'd preconditions: throws
/// spec_error when (1 - vartheta) * Y <= 0 or consumption leaves [M, N].
double epstein_zin_g(const EpsteinZinParams& params, double consumption, double y);

} // namespace sdg
