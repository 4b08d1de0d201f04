#include "doctest.h"

#include <cmath>

#include "sdg/bsde.hpp"
#include "sdg/corpus.hpp"
#include "sdg/errors.hpp"
#include "sdg/rng.hpp"

using namespace sdg;

namespace {

ProblemSpec plain_spec() {
    ProblemSpec s;
    s.name = "plain";
    s.control_u = ControlSet::interval(0.0, 1.0, 3);
    s.control_v = ControlSet::interval(-1.0, 0.0, 3);
    auto zero = Coefficient::from_expr(e_const(0.0));
    s.drift = zero;
    s.diffusion = zero;
    s.generator = zero;
    s.terminal = zero;
    s.eta = 0.0;
    return s;
}

McSection mc_settings(int paths, int steps, std::uint64_t seed) {
    McSection mc;
    mc.paths = paths;
    mc.steps = steps;
    mc.seed = seed;
    return mc;
}

} // namespace

TEST_SUITE("bsde") {

TEST_CASE("degenerate dynamics leave the state constant") {
    const ProblemSpec spec = plain_spec();
    const auto b = simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.7, 16, 20,
                                  99);
    for (int p = 0; p < b.m_paths; ++p)
        for (int k = 0; k <= b.n_steps; ++k) CHECK(b.state(p, k) == 0.7);
}

TEST_CASE("deterministic unit drift integrates exactly") {
    ProblemSpec spec = plain_spec();
    spec.drift = Coefficient::from_expr(e_const(1.0));
    const auto b =
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.25, 4, 50, 1);
    for (int p = 0; p < 4; ++p)
        CHECK(b.state(p, 50) == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("brownian increments have the right moments at five sigma") {
    ProblemSpec spec = plain_spec();
    spec.diffusion = Coefficient::from_expr(e_const(1.0));
    const int m = 2000, n = 50;
    const auto b = simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.0, m, n, 5);
    const double dt = b.dt();
    double mean = 0.0, var = 0.0;
    const double count = static_cast<double>(m) * n;
    for (double inc : b.db) mean += inc;
    mean /= count;
    for (double inc : b.db) var += (inc - mean) * (inc - mean);
    var /= count;
    CHECK(std::fabs(mean) <= 5.0 * std::sqrt(dt / count));
    CHECK(std::fabs(var - dt) <= 5.0 * dt * std::sqrt(2.0 / count));
}

TEST_CASE("ex53 wealth dynamics reproduce the geometric-Brownian mean") {
    CorpusOptions opts;
    opts.control_points_53 = 3;
    opts.ez.consumption_lo = 0.0; // regime (i) admits a zero consumption floor
    const ProblemSpec spec = build_example("ex53", opts);

    // u = (u1 = 1, c = 0), v = (1, 1): dV = b V dt + sigma V dB.
    const double u_coords[] = {1.0, 0.0};
    const double v_coords[] = {1.0, 1.0};
    const int iu = spec.control_u.nearest_index({u_coords, 2});
    const int iv = spec.control_v.nearest_index({v_coords, 2});
    REQUIRE(spec.control_u.point(iu)[0] == doctest::Approx(1.0));
    REQUIRE(spec.control_u.point(iu)[1] == doctest::Approx(0.0));

    const int m = 4000, n = 100;
    const auto b =
        simulate_paths(spec, constant_policy(iu), constant_policy(iv), 0.0, 1.0, m, n, 11);
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < m; ++p) mean += b.state(p, n);
    mean /= m;
    for (int p = 0; p < m; ++p) var += (b.state(p, n) - mean) * (b.state(p, n) - mean);
    var /= m - 1;
    const double expected = std::exp(0.1); // appreciation rate over unit horizon
    CHECK(std::fabs(mean - expected) <= 3.0 * std::sqrt(var / m) + 2e-3); // + Euler bias margin
}

TEST_CASE("exploding states abort with the path and step") {
    ProblemSpec spec = plain_spec();
    spec.drift = Coefficient::from_fn(
        [](const CoeffArgs& a) { return a.x * a.x * a.x * 1e4; }, 0, 0, false);
    CHECK_THROWS_WITH_AS(
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 5.0, 2, 40, 3),
        doctest::Contains("path"), numeric_error);
}

TEST_CASE("zero generator with constant terminal is exact") {
    ProblemSpec spec = plain_spec();
    spec.terminal = Coefficient::from_expr(e_const(3.25));
    const auto bundle =
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 1.0, 8, 10, 2);
    const auto sol = solve_bsde(bundle, spec, 4);
    CHECK(sol.y0 == 3.25);
    CHECK(sol.degenerate_dynamics);
    for (double z : sol.z) CHECK(z == 0.0);
    // Terminal slice equals h exactly.
    for (int p = 0; p < 8; ++p) CHECK(sol.y_at(p, 10, 10) == 3.25);
}

TEST_CASE("y-only linear generator reproduces the exponential") {
    for (double theta : {-2.0, -0.5, 0.5}) {
        ProblemSpec spec = plain_spec();
        spec.generator = Coefficient::from_expr(e_prod({e_const(theta), e_y()}));
        spec.terminal = Coefficient::from_expr(e_const(1.0));
        spec.theta = theta;
        spec.eta = std::fabs(theta) + 0.5;
        const auto bundle =
            simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.0, 4, 800, 2);
        const auto sol = solve_bsde(bundle, spec, 4);
        CHECK(std::fabs(sol.y0 - std::exp(theta)) <= 1e-3);
    }
}

TEST_CASE("ex51 under the zero pair returns half x squared") {
    const ProblemSpec spec = build_example("ex51");
    const int iu0 = 0;  // u = 0 is the first U mesh point
    const int iv0 = 20; // v = 0 is the last V mesh point
    REQUIRE(spec.control_u.point(iu0)[0] == doctest::Approx(0.0));
    REQUIRE(spec.control_v.point(iv0)[0] == doctest::Approx(0.0));
    const auto est = cost_j(spec, constant_policy(iu0), constant_policy(iv0), 0.0, 1.0,
                            mc_settings(64, 100, 7));
    CHECK(std::fabs(est.j - 0.5) <= 2e-2);
    CHECK(est.degenerate_dynamics);
}

TEST_CASE("constant generator integrates the horizon exactly") {
    ProblemSpec spec = plain_spec();
    spec.generator = Coefficient::from_expr(e_const(1.0));
    spec.eta = 1.0;
    for (double t0 : {0.0, 0.25}) {
        const auto est = cost_j(spec, constant_policy(0), constant_policy(0), t0, 0.0,
                                mc_settings(8, 64, 3));
        CHECK(est.j == doctest::Approx(1.0 - t0).epsilon(1e-12));
        CHECK(est.std_error == 0.0);
    }
}

TEST_CASE("ex52 under the zero pair follows the deterministic flow") {
    const ProblemSpec spec = build_example("ex52");
    const auto est = cost_j(spec, constant_policy(0), constant_policy(20), 0.0, 1.0,
                            mc_settings(16, 100, 13));
    CHECK(std::fabs(est.j - (-std::exp(1.0))) <= 5e-2);
}

TEST_CASE("cost is reproducible from the seed at any worker count") {
    const ProblemSpec spec = build_example("ex51");
    const auto a = cost_j(spec, constant_policy(3), constant_policy(4), 0.0, 1.0,
                          mc_settings(500, 40, 17), 1);
    const auto b = cost_j(spec, constant_policy(3), constant_policy(4), 0.0, 1.0,
                          mc_settings(500, 40, 17), 3);
    CHECK(a.j == b.j);
    for (int p = 0; p < 500; ++p) CHECK(a.path_y0[p] == b.path_y0[p]);
}

TEST_CASE("a-priori growth of the cost in the initial state") {
    // Lipschitz data: |Y0| <= K (1 + |x0| + max |g(.,0,0,0,u,v)|) with a
    // stable measured K, and the x-Lipschitz quotient stays bounded.
    ProblemSpec spec = plain_spec();
    spec.drift = Coefficient::from_expr(e_prod({e_const(0.1), e_x()}));
    spec.diffusion = Coefficient::from_expr(e_prod({e_const(0.2), e_x()}));
    spec.generator = Coefficient::from_expr(
        e_sum({e_neg(e_y()), e_const(1.0)}));
    spec.terminal = Coefficient::from_expr(e_abs(e_x()));
    spec.theta = -1.0;
    spec.eta = 2.0;

    const double g0_max = 1.0;
    std::vector<double> ks;
    std::vector<double> js;
    for (double x0 : {1.0, 2.0, 4.0, 8.0}) {
        const auto est = cost_j(spec, constant_policy(0), constant_policy(0), 0.0, x0,
                                mc_settings(2000, 50, 23));
        js.push_back(est.j);
        ks.push_back(std::fabs(est.j) / (1.0 + std::fabs(x0) + g0_max));
    }
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
        CHECK(ks[i + 1] <= 1.5 * ks[i] + 1e-12);
        CHECK(ks[i] <= 1.5 * ks[i + 1] + 1e-12);
    }
    // x-Lipschitz quotient between successive starts (common seed).
    for (std::size_t i = 0; i + 1 < js.size(); ++i) {
        const double dx = std::pow(2.0, static_cast<double>(i)); // 1, 2, 4
        CHECK(std::fabs(js[i + 1] - js[i]) / dx <= 5.0);
    }
}

TEST_CASE("implicit step diverges loudly for an explosive generator") {
    ProblemSpec spec = plain_spec();
    spec.generator = Coefficient::from_expr(e_prod({e_const(30.0), e_y()}));
    spec.terminal = Coefficient::from_expr(e_const(1.0));
    spec.theta = 30.0;
    spec.eta = 31.0;
    const auto bundle =
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.0, 2, 4, 2);
    CHECK_THROWS_AS(solve_bsde(bundle, spec, 2), numeric_error);
}

TEST_CASE("comparison probe: identical inputs give bit-identical costs") {
    const ProblemSpec spec = build_example("ex51");
    const auto rep = comparison_probe(spec, spec, constant_policy(5), constant_policy(10), 0.0,
                                      1.0, mc_settings(400, 40, 29));
    CHECK(rep.j1 == rep.j2);
    CHECK(rep.diff_std_error == 0.0);
    CHECK(rep.passed);
}

TEST_CASE("comparison probe: shifted terminal under g = -y") {
    ProblemSpec s1 = plain_spec();
    s1.generator = Coefficient::from_expr(e_neg(e_y()));
    s1.terminal = Coefficient::from_expr(e_const(-1.0));
    s1.theta = -1.0;
    s1.eta = 2.0;
    ProblemSpec s2 = s1;
    s2.terminal = Coefficient::from_expr(e_const(0.0)); // h2 = h1 + 1
    const auto rep = comparison_probe(s1, s2, constant_policy(0), constant_policy(0), 0.0, 0.0,
                                      mc_settings(16, 400, 31));
    CHECK(rep.passed);
    // Linear-BSDE shift oracle: J2 - J1 = e^{-(T - t)}.
    CHECK(rep.diff_mean == doctest::Approx(std::exp(-1.0)).epsilon(5e-3));
}

TEST_CASE("comparison probe: ex51 generator against its lift") {
    const ProblemSpec s1 = build_example("ex51");
    ProblemSpec s2 = s1;
    s2.generator = Coefficient::from_fn(
        [g = s1.generator](const CoeffArgs& a) { return g(a) + 0.1; }, 0, 0, false);
    const auto rep = comparison_probe(s1, s2, constant_policy(10), constant_policy(5), 0.0, 1.0,
                                      mc_settings(2000, 50, 37));
    CHECK(rep.passed);
    CHECK(rep.j2 >= rep.j1);
}

TEST_CASE("comparison probe rejects violated premises") {
    const ProblemSpec s1 = build_example("ex51");
    ProblemSpec s2 = s1;
    s2.generator = Coefficient::from_fn(
        [g = s1.generator](const CoeffArgs& a) { return g(a) - 0.1; }, 0, 0, false);
    CHECK_THROWS_WITH_AS(comparison_probe(s1, s2, constant_policy(0), constant_policy(0), 0.0,
                                          1.0, mc_settings(100, 10, 1)),
                         doctest::Contains("premise"), spec_error);
}

TEST_CASE("preconditions are enforced") {
    const ProblemSpec spec = plain_spec();
    CHECK_THROWS_AS(
        simulate_paths(spec, constant_policy(0), constant_policy(0), 1.0, 0.0, 4, 4, 1),
        spec_error);
    CHECK_THROWS_AS(
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.0, 0, 4, 1),
        spec_error);
    const auto bundle =
        simulate_paths(spec, constant_policy(0), constant_policy(0), 0.0, 0.0, 2, 2, 1);
    CHECK_THROWS_AS(solve_bsde(bundle, spec, 0), spec_error);
}

} // TEST_SUITE
