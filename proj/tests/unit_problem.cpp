#include "doctest.h"

#include <cmath>

#include "sdg/config.hpp"
#include "sdg/corpus.hpp"
#include "sdg/errors.hpp"
#include "sdg/problem.hpp"
#include "sdg/rng.hpp"

using namespace sdg;

namespace {

ProblemSpec y_only_spec(std::function<double(double)> g_of_y, double theta, double eta,
                        double p) {
    ProblemSpec s;
    s.name = "y_only";
    s.control_u = ControlSet::interval(0.0, 1.0, 3);
    s.control_v = ControlSet::interval(0.0, 1.0, 3);
    s.drift = Coefficient::from_fn([](const CoeffArgs&) { return 0.0; }, 0, 0, false);
    s.diffusion = Coefficient::from_fn([](const CoeffArgs&) { return 0.0; }, 0, 0, false);
    s.generator = Coefficient::from_fn(
        [g_of_y](const CoeffArgs& a) { return g_of_y(a.y); }, kNonlinear, 0, false);
    s.terminal = Coefficient::from_fn([](const CoeffArgs&) { return 0.0; }, 0, 0, false);
    s.theta = theta;
    s.eta = eta;
    s.growth_p = p;
    s.lip_c = 1.0;
    return s;
}

} // namespace

TEST_SUITE("problem") {

TEST_CASE("control set enumerates the product mesh") {
    ControlSet cs({{0.0, 1.0, 3}, {-1.0, 1.0, 2}});
    CHECK(cs.dim() == 2);
    CHECK(cs.count() == 6);
    CHECK(cs.mesh_size() == doctest::Approx(2.0));
    // First dimension varies fastest.
    CHECK(cs.point(0)[0] == doctest::Approx(0.0));
    CHECK(cs.point(1)[0] == doctest::Approx(0.5));
    CHECK(cs.point(2)[0] == doctest::Approx(1.0));
    CHECK(cs.point(0)[1] == doctest::Approx(-1.0));
    CHECK(cs.point(3)[1] == doctest::Approx(1.0));

    const double probe[2] = {0.45, 0.8};
    const auto nearest = cs.point(cs.nearest_index(std::span<const double>(probe, 2)));
    CHECK(nearest[0] == doctest::Approx(0.5));
    CHECK(nearest[1] == doctest::Approx(1.0));
}

TEST_CASE("structural invariants are enforced") {
    CHECK_THROWS_AS(ControlSet::interval(0.0, 1.0, 0), spec_error);
    CHECK_THROWS_AS(ControlSet::interval(1.0, 1.0, 5), spec_error);
    CHECK_THROWS_AS((GridSpec{1.0, -1.0, 11, 0}).check(), spec_error);
    CHECK_THROWS_AS((GridSpec{-1.0, 1.0, 2, 0}).check(), spec_error);

    ProblemSpec s = build_example("ex51");
    s.horizon = 0.0;
    CHECK_THROWS_AS(s.check_structure(), spec_error);
    s = build_example("ex51");
    s.state_dim = 2;
    CHECK_THROWS_AS(s.check_structure(), spec_error);
}

TEST_CASE("validate_problem accepts ex51 with zero monotonicity slack") {
    const ProblemSpec spec = build_example("ex51");
    const auto rep = validate_problem(spec, 1000, 1e-9);
    CHECK(rep.passed);
    for (const auto& c : rep.checks) {
        INFO(c.name);
        if (c.name.find("monotone") != std::string::npos)
            CHECK(c.worst_violation <= 0.0); // g ignores y entirely
    }
}

TEST_CASE("validate_problem rejects an increasing cubic declared monotone") {
    ProblemSpec spec = y_only_spec([](double y) { return y * y * y; }, 0.0, 8.0, 3.0);
    const auto rep = validate_problem(spec, 1000, 1e-9);
    CHECK_FALSE(rep.passed);
    bool monotone_failed = false;
    for (const auto& c : rep.checks)
        if (c.name.find("monotone") != std::string::npos) monotone_failed = !c.passed;
    CHECK(monotone_failed);
}

TEST_CASE("validate_problem accepts a decreasing linear generator") {
    ProblemSpec spec = y_only_spec([](double y) { return -y; }, 0.0, 1.0, 1.0);
    const auto rep = validate_problem(spec, 1000, 1e-9);
    CHECK(rep.passed);
}

TEST_CASE("validate_problem rejects non-finite coefficients with the point") {
    ProblemSpec spec = y_only_spec([](double) { return 0.0; }, 0.0, 1.0, 1.0);
    spec.drift = Coefficient::from_fn(
        [](const CoeffArgs& a) { return a.x > 0.0 ? std::sqrt(-1.0) : 0.0; }, 0, 0, false);
    CHECK_THROWS_WITH_AS(validate_problem(spec, 1000, 1e-9),
                         doctest::Contains("non-finite"), spec_error);
}

TEST_CASE("corpus specs round-trip through the config format") {
    for (const std::string id : {"ex51", "ex52", "ex53"}) {
        const ProblemSpec original = build_example(id);
        const ProblemSpec reread = problem_from_json(problem_to_json(original));

        PathRng rng(17, 3);
        for (int n = 0; n < 1000; ++n) {
            CoeffArgs a;
            a.t = rng.uniform();
            a.x = 4.0 * rng.uniform() - 2.0;
            a.z = 4.0 * rng.uniform() - 2.0;
            a.y = original.y_band
                      ? original.y_band->lo +
                            (original.y_band->hi - original.y_band->lo) * rng.uniform()
                      : 4.0 * rng.uniform() - 2.0;
            const int iu = static_cast<int>(rng.uniform() * original.control_u.count());
            const int iv = static_cast<int>(rng.uniform() * original.control_v.count());
            a.u = original.control_u.point(iu);
            a.v = original.control_v.point(iv);
            CHECK(original.drift(a) == reread.drift(a));
            CHECK(original.diffusion(a) == reread.diffusion(a));
            CHECK(original.generator(a) == reread.generator(a));
            CHECK(original.terminal(a) == reread.terminal(a));
        }
        CHECK(original.z_dependent == reread.z_dependent);
        CHECK(original.theta == reread.theta);
    }
}

TEST_CASE("lambda-built coefficients refuse to serialize") {
    const ProblemSpec spec = y_only_spec([](double y) { return -y; }, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(problem_to_json(spec), spec_error);
}

TEST_CASE("config documents reject unknown and missing keys") {
    const Config cfg{build_example("ex51"), {-2.0, 2.0, 101, 0}, {}, {}, {}};
    nlohmann::json j = config_to_json(cfg);
    j["grid"]["typo_key"] = 1;
    CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("typo_key"), spec_error);

    nlohmann::json j2 = config_to_json(cfg);
    j2["problem"].erase("T");
    CHECK_THROWS_WITH_AS(config_from_json(j2), doctest::Contains("\"T\""), spec_error);
}

TEST_CASE("expression degrees drive the structure flags") {
    const auto g51 = build_example("ex51").generator;
    CHECK_FALSE(g51.depends_y());
    CHECK_FALSE(g51.depends_z());
    const auto g52 = build_example("ex52").generator;
    CHECK_FALSE(g52.depends_y());
    CHECK(g52.depends_z());
    CHECK(g52.affine_z());
    const auto g53 = build_example("ex53").generator;
    CHECK(g53.depends_y());
    CHECK_FALSE(g53.depends_z());
    CHECK(g53.degree_y() == kNonlinear);

    const auto quad_z = Coefficient::from_expr(e_pow(e_z(), 2));
    CHECK_FALSE(quad_z.affine_z());
    const auto timed = Coefficient::from_expr(e_prod({e_t(), e_x()}));
    CHECK(timed.time_varying());
}

} // TEST_SUITE

TEST_SUITE("corpus") {

TEST_CASE("ex52 is flagged z-dependent") {
    const ProblemSpec spec = build_example("ex52");
    CHECK(spec.z_dependent);
    CHECK(spec.generator.depends_z());
}

TEST_CASE("mixed Epstein-Zin regimes are rejected by name") {
    CorpusOptions opts;
    opts.ez.vartheta = 0.5;
    opts.ez.varsigma = 2.0;
    CHECK_THROWS_WITH_AS(build_example("ex53", opts), doctest::Contains("regime"), spec_error);

    CorpusOptions low;
    low.ez.vartheta = 0.5;
    low.ez.varsigma = 0.5;
    low.ez.consumption_lo = 0.0;
    CHECK_THROWS_WITH_AS(build_example("ex53", low), doctest::Contains("consumption"),
                         spec_error);
    low.ez.consumption_lo = 0.1;
    CHECK_NOTHROW(build_example("ex53", low)); // regime (ii) with M > 0 is fine
}

TEST_CASE("analytic solutions match the closed forms") {
    CHECK(*analytic_solution("ex51", 0.3, 2.0, 1.0) == doctest::Approx(2.0));
    CHECK(*analytic_solution("ex52", 0.0, -1.0, 1.0) ==
          doctest::Approx(-std::exp(1.0)).epsilon(1e-12));
    for (double x : {-1.0, 0.0, 1.0})
        CHECK(*analytic_solution("ex52", 1.0, x, 1.0) == doctest::Approx(-std::fabs(x)));
    CHECK_FALSE(analytic_solution("ex53", 0.0, 1.0, 1.0).has_value());
    CHECK_THROWS_AS(analytic_solution("ex99", 0.0, 0.0, 1.0), spec_error);
}

TEST_CASE("epstein_zin_g hand values") {
    EpsteinZinParams p;
    p.rho = 0.1;
    p.vartheta = 2.0;
    p.varsigma = 2.0;
    CHECK(epstein_zin_g(p, 1.0, -1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(epstein_zin_g(p, 1.0, -4.0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(epstein_zin_g(p, 1.0, 1.0), spec_error);  // (1-vartheta)Y < 0
    CHECK_THROWS_AS(epstein_zin_g(p, 2.0, -1.0), spec_error); // c outside [M, N]
}

TEST_CASE("epstein_zin generator is one-sided monotone with the declared theta") {
    for (bool high : {true, false}) {
        CorpusOptions opts;
        if (!high) {
            opts.ez.vartheta = 0.5;
            opts.ez.varsigma = 0.5;
        }
        const ProblemSpec spec = build_example("ex53", opts);
        REQUIRE(spec.y_band.has_value());
        PathRng rng(5, high ? 1 : 2);
        double worst = -1e30;
        double worst_growth = -1e30;
        CoeffArgs a;
        for (int n = 0; n < 4000; ++n) {
            const double lo = spec.y_band->lo, hi = spec.y_band->hi;
            const double y1 = lo + (hi - lo) * rng.uniform();
            const double y2 = lo + (hi - lo) * rng.uniform();
            const int iu = static_cast<int>(rng.uniform() * spec.control_u.count());
            a.u = spec.control_u.point(iu);
            a.v = spec.control_v.point(0);
            a.y = y1;
            const double g1 = spec.generator(a);
            a.y = y2;
            const double g2 = spec.generator(a);
            if (std::fabs(y1 - y2) > 1e-9)
                worst = std::max(worst, (y1 - y2) * (g1 - g2) / ((y1 - y2) * (y1 - y2)));
            a.y = std::copysign(1e-30, y1); // reference near the band edge, g -> 0
            worst_growth = std::max(worst_growth,
                                    std::fabs(g1) -
                                        spec.eta * (1.0 + std::pow(std::fabs(y1), spec.growth_p)));
        }
        INFO("regime ", high ? "(i)" : "(ii)", " worst one-sided slope ", worst);
        CHECK(worst <= spec.theta + 1e-9);
        CHECK(worst_growth <= 1e-9);
    }
}

TEST_CASE("analytic solutions satisfy the discrete HJBI residual") {
    // Plug the closed forms into the solver's spatial operator (upwind first
    // differences per control pair, central second difference, z from the
    // central gradient) and check | d_t W + H^- | <= C dx at interior nodes.
    for (const std::string id : {"ex51", "ex52"}) {
        const ProblemSpec spec = build_example(id);
        const GridSpec grid{-2.0, 2.0, 201, 0};
        const double dx = grid.dx();
        const double T = spec.horizon;
        for (double t : {0.0, 0.5, 0.9}) {
            std::vector<double> w(grid.n_x);
            for (int i = 0; i < grid.n_x; ++i) w[i] = *analytic_solution(id, t, grid.x(i), T);
            for (int i = 1; i + 1 < grid.n_x; ++i) {
                const double dp = (w[i + 1] - w[i]) / dx;
                const double dm = (w[i] - w[i - 1]) / dx;
                const double dc = (w[i + 1] - w[i - 1]) / (2.0 * dx);
                const double d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
                double h_lower = -1e300;
                CoeffArgs a;
                a.t = t;
                a.x = grid.x(i);
                a.y = w[i];
                for (int iu = 0; iu < spec.control_u.count(); ++iu) {
                    double inner = 1e300;
                    a.u = spec.control_u.point(iu);
                    for (int iv = 0; iv < spec.control_v.count(); ++iv) {
                        a.v = spec.control_v.point(iv);
                        const double b = spec.drift(a);
                        const double sig = spec.diffusion(a);
                        a.z = dc * sig;
                        const double h = 0.5 * sig * sig * d2 + b * (b >= 0.0 ? dp : dm) +
                                         spec.generator(a);
                        inner = std::min(inner, h);
                    }
                    h_lower = std::max(h_lower, inner);
                }
                const double dt_w =
                    id == "ex51" ? 0.0 : std::exp(T - t) * std::fabs(grid.x(i));
                CHECK(std::fabs(dt_w + h_lower) <= 1.0 * dx);
            }
        }
    }
}

TEST_CASE("ex53 passes validate_problem on its wealth domain and band") {
    const ProblemSpec spec = build_example("ex53");
    ValidationOptions opts;
    opts.x_lo = 0.25;
    opts.x_hi = 8.0;
    const auto rep = validate_problem(spec, 2000, 1e-8, opts);
    INFO(rep.summary());
    CHECK(rep.passed);
}

} // TEST_SUITE
