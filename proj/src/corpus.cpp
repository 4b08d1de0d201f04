#include "sdg/corpus.hpp"

#include <cmath>

#include "sdg/errors.hpp"

namespace sdg {

void EpsteinZinParams::check() const {
    if (!(rho > 0.0)) throw spec_error("epstein-zin: rho must be positive");
    if (!(vartheta > 0.0) || vartheta == 1.0)
        throw spec_error("epstein-zin: vartheta must be positive and != 1");
    if (!(varsigma > 0.0) || varsigma == 1.0)
        throw spec_error("epstein-zin: varsigma must be positive and != 1");
    if (!(consumption_hi > consumption_lo) || consumption_lo < 0.0)
        throw spec_error("epstein-zin: consumption bounds need N > M >= 0");
    const bool regime_i = vartheta > 1.0 && varsigma > 1.0;
    const bool regime_ii = vartheta < 1.0 && varsigma < 1.0;
    if (!regime_i && !regime_ii)
        throw spec_error("epstein-zin: admissible regimes are (vartheta>1 and varsigma>1) "
                         "or (vartheta<1 and varsigma<1); got vartheta=" +
                         std::to_string(vartheta) + ", varsigma=" + std::to_string(varsigma));
    if (regime_ii && consumption_lo == 0.0)
        throw spec_error("epstein-zin: regime vartheta<1, varsigma<1 requires a positive "
                         "consumption floor M > 0");
}

double epstein_zin_g(const EpsteinZinParams& params, double consumption, double y) {
    params.check();
    if (consumption < params.consumption_lo || consumption > params.consumption_hi)
        throw spec_error("epstein-zin: consumption outside [M, N]");
    if (!((1.0 - params.vartheta) * y > 0.0))
        throw spec_error("epstein-zin: (1 - vartheta) * Y must be positive, got Y=" +
                         std::to_string(y));
    EpsteinZinTerm term;
    term.rho = params.rho;
    term.vartheta = params.vartheta;
    term.varsigma = params.varsigma;
    return epstein_zin_value(term, consumption, y);
}

namespace {

ProblemSpec make_ex51(const CorpusOptions& opts) {
    ProblemSpec s;
    s.name = "ex51";
    s.control_u = ControlSet::interval(0.0, 1.0, opts.control_points);
    s.control_v = ControlSet::interval(-1.0, 0.0, opts.control_points);
    s.horizon = opts.horizon;

    const auto u = e_u(0);
    const auto v = e_v(0);
    s.drift = Coefficient::from_expr(e_sum({u, v}));
    s.diffusion = Coefficient::from_expr(v);
    // g = -(u + v) x - u - v
    s.generator = Coefficient::from_expr(
        e_sum({e_neg(e_prod({e_sum({u, v}), e_x()})), e_neg(u), e_neg(v)}));
    s.terminal = Coefficient::from_expr(e_prod({e_const(0.5), e_pow(e_x(), 2)}));

    s.z_dependent = false;
    s.theta = 0.0;
    s.eta = 1.0;
    s.growth_p = 1.0;
    s.lip_c = 4.0; // h = x^2/2 is Lipschitz only on the truncated domain
    return s;
}

ProblemSpec make_ex52(const CorpusOptions& opts) {
    ProblemSpec s;
    s.name = "ex52";
    s.control_u = ControlSet::interval(0.0, 1.0, opts.control_points);
    s.control_v = ControlSet::interval(-1.0, 0.0, opts.control_points);
    s.horizon = opts.horizon;

    const auto u = e_u(0);
    const auto v = e_v(0);
    s.drift = Coefficient::from_expr(
        e_sum({e_x(), e_prod({e_x(), v}), e_prod({e_x(), u, v})}));
    s.diffusion = Coefficient::from_expr(e_prod({v, e_x()}));
    // g = -(u + v) z - u
    s.generator = Coefficient::from_expr(
        e_sum({e_neg(e_prod({e_sum({u, v}), e_z()})), e_neg(u)}));
    s.terminal = Coefficient::from_expr(e_neg(e_abs(e_x())));

    s.z_dependent = true;
    s.theta = 0.0;
    s.eta = 1.0;
    s.growth_p = 1.0;
    s.lip_c = 2.0;
    return s;
}

ProblemSpec make_ex53(const CorpusOptions& opts) {
    opts.ez.check();
    ProblemSpec s;
    s.name = "ex53";
    const auto& ez = opts.ez;
    const auto& mk = opts.market;

    // Investor: u = (u1, c) with u1 the stock fraction, c consumption.
    // Market friction: v = (v0, v1) damping the bond and stock allocations.
    s.control_u = ControlSet({{-1.0, 1.0, opts.control_points_53},
                              {ez.consumption_lo, ez.consumption_hi, opts.control_points_53}});
    s.control_v = ControlSet({{0.0, 1.0, opts.control_points_53},
                              {0.0, 1.0, opts.control_points_53}});
    s.horizon = opts.horizon;

    const auto u1 = e_u(0);
    const auto c = e_u(1);
    const auto v0 = e_v(0);
    const auto v1 = e_v(1);
    const auto wealth = e_x();

    // dV = (v0 (1 - u1) r V + v1 u1 b V - c) dt + sigma v1 u1 V dB
    s.drift = Coefficient::from_expr(e_sum({
        e_prod({v0, e_sum({e_const(1.0), e_neg(u1)}), e_const(mk.rate), wealth}),
        e_prod({v1, u1, e_const(mk.appreciation), wealth}),
        e_neg(c),
    }));
    s.diffusion = Coefficient::from_expr(
        e_prod({e_const(mk.volatility), v1, u1, wealth}));

    EpsteinZinTerm term;
    term.rho = ez.rho;
    term.vartheta = ez.vartheta;
    term.varsigma = ez.varsigma;
    term.c_index = 1;
    s.generator = Coefficient::from_expr(e_epstein_zin(term));

    // Terminal utility: the corpus default sign keeps (1 - vartheta) h(V) > 0;
    // the optional shift moves the band further from its singular edge.
    const double sign = ez.regime_high() ? -1.0 : 1.0;
    ExprPtr h = e_prod({e_const(sign), e_exp(e_neg(wealth))});
    if (opts.terminal_shift_53 != 0.0)
        h = e_sum({h, e_const(sign * opts.terminal_shift_53)});
    s.terminal = Coefficient::from_expr(h);

    s.z_dependent = false;
    const double a = 1.0 - 1.0 / ez.varsigma;
    s.theta = ez.rho * std::fabs(1.0 - ez.vartheta) / std::fabs(a);
    const double q = 1.0 + std::fabs(a) / std::fabs(1.0 - ez.vartheta);
    s.growth_p = q;
    const double cpow = ez.regime_high() ? std::pow(std::max(ez.consumption_hi, 1.0), a)
                                         : std::pow(ez.consumption_lo, a);
    s.eta = (ez.rho / std::fabs(a)) *
                (cpow * std::pow(std::fabs(1.0 - ez.vartheta), q) + std::fabs(1.0 - ez.vartheta)) +
            1.0;
    s.lip_c = 2.0 * (mk.rate + mk.appreciation + mk.volatility) + 2.0;

    // Valid y range: (1 - vartheta) y in (0, w_max].
    const double w_max = 16.0;
    if (ez.regime_high())
        s.y_band = YBand{-w_max / (ez.vartheta - 1.0), -1e-9};
    else
        s.y_band = YBand{1e-9, w_max / (1.0 - ez.vartheta)};
    return s;
}

} // namespace

ProblemSpec build_example(const std::string& id, const CorpusOptions& opts) {
    if (id == "ex51") return make_ex51(opts);
    if (id == "ex52") return make_ex52(opts);
    if (id == "ex53") return make_ex53(opts);
    throw spec_error("unknown example id \"" + id + "\" (expected ex51, ex52 or ex53)");
}

std::optional<double> analytic_solution(const std::string& id, double t, double x, double T) {
    if (id == "ex51") return 0.5 * x * x;
    if (id == "ex52") return x > 0.0 ? -std::exp(T - t) * x : std::exp(T - t) * x;
    if (id == "ex53") return std::nullopt;
    throw spec_error("unknown example id \"" + id + "\"");
}

} // namespace sdg
