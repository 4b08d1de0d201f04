// sdglab: command-line front end for the stochastic differential game lab.
//
// Subcommands: solve, bsde, saddle, dpp-residual, diagnose, transform-study,
// hamiltonian, validate. Each run writes its outputs (field.csv,
// summary.json) plus a manifest.json echoing the resolved configuration.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdg/bsde.hpp"
#include "sdg/config.hpp"
#include "sdg/corpus.hpp"
#include "sdg/diagnostics.hpp"
#include "sdg/errors.hpp"
#include "sdg/game.hpp"
#include "sdg/hamiltonian.hpp"
#include "sdg/hjbi.hpp"
#include "sdg/transforms.hpp"

namespace {

constexpr const char* kVersion = "sdglab 0.1.0";

struct CommonArgs {
    std::string example;
    std::string config_path;
    std::string grid_preset = "default";
    std::string side;
    std::string out_dir;
    std::uint64_t seed = 42;
    int paths = 10000;
    int steps = 0;
    int threads = 1;
    // Epstein-Zin overrides for ex53 / validate.
    double rho = 0.1;
    double vartheta = 2.0;
    double varsigma = 2.0;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--example", args.example, "corpus example id (ex51, ex52, ex53)");
    cmd->add_option("--config", args.config_path, "config file (JSON)");
    cmd->add_option("--grid", args.grid_preset, "grid preset: default, coarse, fine");
    cmd->add_option("--side", args.side, "lower or upper (defaults to the example's side)");
    cmd->add_option("--seed", args.seed, "Monte-Carlo seed");
    cmd->add_option("--paths", args.paths, "Monte-Carlo path count");
    cmd->add_option("--steps", args.steps, "time steps (solver n_t or MC steps)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker cap (does not affect results)");
    cmd->add_option("--rho", args.rho, "Epstein-Zin rho (ex53)");
    cmd->add_option("--vartheta", args.vartheta, "Epstein-Zin vartheta (ex53)");
    cmd->add_option("--varsigma", args.varsigma, "Epstein-Zin varsigma (ex53)");
}

sdg::Config resolve_config(const CommonArgs& args) {
    sdg::Config cfg;
    if (!args.config_path.empty()) {
        cfg = sdg::load_config_file(args.config_path);
    } else if (!args.example.empty()) {
        sdg::CorpusOptions opts;
        opts.ez.rho = args.rho;
        opts.ez.vartheta = args.vartheta;
        opts.ez.varsigma = args.varsigma;
        cfg.problem = sdg::build_example(args.example, opts);
        if (args.example == "ex53") {
            cfg.grid = {0.25, 8.0, 201, 0};
            cfg.solver.side = sdg::Side::upper;
        } else {
            cfg.grid = {-2.0, 2.0, 401, 0};
            cfg.solver.side = sdg::Side::lower;
        }
        if (args.grid_preset == "coarse")
            cfg.grid.n_x = 101;
        else if (args.grid_preset == "fine")
            cfg.grid.n_x = args.example == "ex53" ? 401 : 801;
        else if (args.grid_preset != "default")
            throw sdg::spec_error("unknown grid preset \"" + args.grid_preset + "\"");
    } else {
        throw sdg::spec_error("either --example or --config is required");
    }
    if (!args.side.empty()) {
        if (args.side == "lower")
            cfg.solver.side = sdg::Side::lower;
        else if (args.side == "upper")
            cfg.solver.side = sdg::Side::upper;
        else
            throw sdg::spec_error("--side must be lower or upper");
    }
    cfg.solver.threads = args.threads;
    cfg.mc.seed = args.seed;
    cfg.mc.paths = args.paths;
    if (args.steps > 0) cfg.mc.steps = args.steps;
    return cfg;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw sdg::spec_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_manifest(const sdg::Config& cfg, const CommonArgs& args, const std::string& command) {
    if (args.out_dir.empty()) return;
    std::filesystem::create_directories(args.out_dir);
    nlohmann::json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = cfg.mc.seed;
    j["config"] = sdg::config_to_json(cfg);
    write_json(j, std::filesystem::path(args.out_dir) / "manifest.json");
}

void write_field_csv(const sdg::ValueField& field, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw sdg::spec_error("cannot write " + path.string());
    out << "t,x,W\n";
    out.precision(17);
    for (int k = 0; k <= field.grid.n_t; ++k)
        for (int i = 0; i < field.grid.n_x; ++i)
            out << field.t(k) << "," << field.grid.x(i) << "," << field.at(k, i) << "\n";
}

void emit(const nlohmann::json& summary, const CommonArgs& args) {
    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        write_json(summary, std::filesystem::path(args.out_dir) / "summary.json");
    }
    std::cout << summary.dump(2) << "\n";
}

int cmd_validate(const CommonArgs& args) {
    const sdg::Config cfg = resolve_config(args);
    write_manifest(cfg, args, "validate");
    // Hypotheses are probed on the example's state domain.
    sdg::ValidationOptions box;
    box.x_lo = cfg.grid.x_lo;
    box.x_hi = cfg.grid.x_hi;
    const sdg::ValidationReport rep = sdg::validate_problem(cfg.problem, 2000, 1e-9, box);
    nlohmann::json j;
    j["passed"] = rep.passed;
    for (const auto& c : rep.checks)
        j["checks"].push_back({{"name", c.name},
                               {"worst_violation", c.worst_violation},
                               {"tolerance", c.tolerance},
                               {"passed", c.passed},
                               {"worst_point", c.worst_point}});
    emit(j, args);
    return rep.passed ? 0 : 1;
}

int cmd_solve(const CommonArgs& args) {
    sdg::Config cfg = resolve_config(args);
    if (args.steps > 0) cfg.grid.n_t = args.steps;
    write_manifest(cfg, args, "solve");

    const sdg::CflReport cfl = sdg::cfl_check(cfg.problem, cfg.grid);
    sdg::SolveOptions opts;
    opts.threads = cfg.solver.threads;
    const sdg::ValueField field = sdg::solve_hjbi(cfg.problem, cfg.grid, cfg.solver.side, opts);

    nlohmann::json j;
    j["example"] = cfg.problem.name;
    j["side"] = sdg::side_name(field.side);
    j["n_x"] = field.grid.n_x;
    j["n_t"] = field.grid.n_t;
    j["dx"] = field.grid.dx();
    j["dt"] = field.dt();
    j["cfl"] = {{"max_sigma_sq", cfl.max_sigma_sq},
                {"max_abs_drift", cfl.max_abs_drift},
                {"zero_order", cfl.zero_order},
                {"max_stable_dt", cfl.unconstrained ? -1.0 : cfl.max_stable_dt},
                {"unconstrained", cfl.unconstrained}};
    j["growth_constant"] = sdg::growth_constant(field);
    if (!cfg.problem.name.empty()) {
        const auto probe = sdg::analytic_solution(cfg.problem.name, 0.0, 0.0, cfg.problem.horizon);
        if (probe.has_value()) {
            auto ref = [&](double t, double x) {
                return *sdg::analytic_solution(cfg.problem.name, t, x, cfg.problem.horizon);
            };
            j["interior_max_error"] = sdg::interior_linf_error(field, ref);
        }
    }
    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        write_field_csv(field, std::filesystem::path(args.out_dir) / "field.csv");
    }
    emit(j, args);
    return 0;
}

int cmd_bsde(const CommonArgs& args, double t0, double x0, int u_index, int v_index) {
    sdg::Config cfg = resolve_config(args);
    if (cfg.mc.steps <= 0) cfg.mc.steps = 100;
    write_manifest(cfg, args, "bsde");
    const sdg::CostEstimate est =
        sdg::cost_j(cfg.problem, sdg::constant_policy(u_index), sdg::constant_policy(v_index),
                    t0, x0, cfg.mc, cfg.solver.threads);
    nlohmann::json j;
    j["J"] = est.j;
    j["stderr"] = est.std_error;
    j["M"] = est.m_paths;
    j["N"] = est.n_steps;
    j["seed"] = est.seed;
    j["diagnostics"] = {{"degenerate_dynamics", est.degenerate_dynamics},
                        {"t0", t0},
                        {"x0", x0},
                        {"u_index", u_index},
                        {"v_index", v_index}};
    emit(j, args);
    return 0;
}

int cmd_saddle(const CommonArgs& args, double t0, double x0, int deviation_count) {
    sdg::Config cfg = resolve_config(args);
    if (cfg.mc.steps <= 0) cfg.mc.steps = 100;
    write_manifest(cfg, args, "saddle");
    const sdg::ValueField field =
        sdg::solve_hjbi(cfg.problem, cfg.grid, cfg.solver.side,
                        sdg::SolveOptions{cfg.solver.threads});
    const sdg::FeedbackPair pair = sdg::extract_feedback(cfg.problem, field);

    const bool lower = pair.side == sdg::Side::lower;
    const int own_count =
        lower ? cfg.problem.control_u.count() : cfg.problem.control_v.count();
    const int opp_count =
        lower ? cfg.problem.control_v.count() : cfg.problem.control_u.count();
    auto spread = [&](int count) {
        std::vector<int> idx;
        const int n = std::min(count, deviation_count);
        for (int i = 0; i < n; ++i)
            idx.push_back(n > 1 ? i * (count - 1) / (n - 1) : 0);
        return idx;
    };
    const sdg::SaddleReport rep = sdg::saddle_check(
        cfg.problem, pair, t0, x0, spread(own_count), spread(opp_count), cfg.mc, 2e-2);

    nlohmann::json j;
    j["J_pair"] = rep.j_pair;
    j["max_own_violation"] = rep.max_own_violation;
    j["max_opponent_violation"] = rep.max_opponent_violation;
    j["passed"] = rep.passed;
    for (const auto& d : rep.own_deviations)
        j["own_deviations"].push_back({{"index", d.mesh_index},
                                       {"J", d.j},
                                       {"stderr", d.paired_std_error},
                                       {"violation", d.violation}});
    for (const auto& d : rep.opponent_deviations)
        j["opponent_deviations"].push_back({{"index", d.mesh_index},
                                            {"J", d.j},
                                            {"stderr", d.paired_std_error},
                                            {"violation", d.violation}});
    emit(j, args);
    return 0;
}

int cmd_dpp_residual(const CommonArgs& args) {
    sdg::Config cfg = resolve_config(args);
    write_manifest(cfg, args, "dpp-residual");
    const sdg::ValueField field =
        sdg::solve_hjbi(cfg.problem, cfg.grid, cfg.solver.side,
                        sdg::SolveOptions{cfg.solver.threads});
    const int k = field.grid.n_t / 2;
    const double t = field.t(k);
    const double width = field.grid.x_hi - field.grid.x_lo;
    double residual = 0.0;
    bool extrapolated = false;
    for (int i = 0; i < field.grid.n_x; ++i) {
        const double x = field.grid.x(i);
        if (x < field.grid.x_lo + 0.3 * width || x > field.grid.x_hi - 0.3 * width) continue;
        const auto r = sdg::dpp_one_step(cfg.problem, field, t, x, field.dt());
        residual = std::max(residual, std::fabs(r.value - field.at(k, i)));
        extrapolated = extrapolated || r.extrapolated;
    }
    nlohmann::json j;
    j["t"] = t;
    j["dt"] = field.dt();
    j["max_interior_residual"] = residual;
    j["extrapolated"] = extrapolated;
    emit(j, args);
    return 0;
}

int cmd_diagnose(const CommonArgs& args) {
    sdg::Config cfg = resolve_config(args);
    write_manifest(cfg, args, "diagnose");
    const sdg::ValueField field =
        sdg::solve_hjbi(cfg.problem, cfg.grid, cfg.solver.side,
                        sdg::SolveOptions{cfg.solver.threads});

    nlohmann::json j;
    const auto lips = sdg::lipschitz_x(field);
    j["lipschitz_x"] = lips.global;
    const auto ht = sdg::holder_t(field);
    j["holder_t"] = {{"coefficient_half", ht.coefficient_half},
                     {"fitted_exponent", ht.fitted_exponent},
                     {"exact", ht.exact}};
    j["lipschitz_t_interior"] = sdg::lipschitz_t_interior(field, 0.2 * cfg.problem.horizon);
    const auto gamma = sdg::gamma_membership(field, 1.0);
    j["gamma_membership"] = {{"verdict", gamma.verdict == sdg::Verdict::pass          ? "pass"
                                         : gamma.verdict == sdg::Verdict::inconclusive ? "inconclusive"
                                                                                       : "fail"},
                             {"detail", gamma.detail}};
    j["growth_constant"] = sdg::growth_constant(field);
    const auto lam = sdg::find_lambda(cfg.problem, 1.0, sdg::GridSpec{-4.0, 4.0, 81, 0});
    j["reference_lambda"] = {{"found", lam.found},
                             {"lambda", lam.lambda},
                             {"margin", lam.margin},
                             {"worst_node", lam.worst_node}};
    emit(j, args);
    return 0;
}

int cmd_transform_study(const CommonArgs& args, bool with_fields) {
    sdg::Config cfg = resolve_config(args);
    write_manifest(cfg, args, "transform-study");
    const sdg::ProblemSpec& spec = cfg.problem;

    // Probe compact kept one support-width inside the declared y band.
    sdg::CompactBox box;
    box.t_hi = spec.horizon;
    if (spec.y_band) {
        const double margin = 0.55;
        box.y_lo = spec.y_band->lo;
        box.y_hi = spec.y_band->hi - margin;
        if (box.y_hi <= box.y_lo)
            throw sdg::spec_error("y band too narrow for the mollification probe");
    }

    // Hamiltonian distance at a few fixed queries.
    auto hamiltonian_distance = [&](const sdg::Coefficient& gm) {
        sdg::ProblemSpec alt = spec;
        alt.generator = gm;
        double worst = 0.0;
        for (double x : {box.x_lo, 0.5 * (box.x_lo + box.x_hi), box.x_hi}) {
            for (double p : {-1.0, 0.0, 1.0}) {
                sdg::HamiltonianQuery q;
                q.t = 0.0;
                q.x = x;
                q.y = 0.5 * (box.y_lo + box.y_hi);
                q.p = p;
                q.a = 1.0;
                worst = std::max(worst, std::fabs(sdg::lower_hamiltonian(q, alt).value -
                                                  sdg::lower_hamiltonian(q, spec).value));
            }
        }
        return worst;
    };

    std::ostringstream csv;
    csv << "transform,index,sup_distance,hamiltonian_distance,field_distance\n";
    nlohmann::json rows = nlohmann::json::array();
    for (int m : {2, 4, 8, 16, 32}) {
        const sdg::Coefficient gm = sdg::mollify(spec, m, cfg.transform.quad_points);
        const double sup = sdg::sup_distance_on_compact(gm, spec.generator, box, spec, 4096);
        const double ham = hamiltonian_distance(gm);
        double field_dist = std::numeric_limits<double>::quiet_NaN();
        if (with_fields) {
            sdg::ProblemSpec alt = spec;
            alt.generator = gm;
            const auto f0 = sdg::solve_hjbi(spec, cfg.grid, cfg.solver.side);
            const auto fm = sdg::solve_hjbi(alt, cfg.grid, cfg.solver.side);
            field_dist = 0.0;
            for (std::size_t i = 0; i < f0.values.size(); ++i)
                field_dist = std::max(field_dist, std::fabs(f0.values[i] - fm.values[i]));
        }
        csv << "mollify," << m << "," << sup << "," << ham << ","
            << (with_fields ? std::to_string(field_dist) : "") << "\n";
        rows.push_back({{"transform", "mollify"}, {"index", m}, {"sup_distance", sup},
                        {"hamiltonian_distance", ham}});
    }
    for (int k : {1, 2, 4, 8, 16}) {
        const sdg::Coefficient gk = sdg::truncate(spec, k);
        const double sup = sdg::sup_distance_on_compact(gk, spec.generator, box, spec, 4096);
        csv << "truncate," << k << "," << sup << "," << hamiltonian_distance(gk) << ",\n";
        rows.push_back({{"transform", "truncate"}, {"index", k}, {"sup_distance", sup}});
    }

    if (!args.out_dir.empty()) {
        std::filesystem::create_directories(args.out_dir);
        std::ofstream out(std::filesystem::path(args.out_dir) / "transform_study.csv");
        out << csv.str();
    }
    nlohmann::json j;
    j["rows"] = rows;
    emit(j, args);
    return 0;
}

int cmd_hamiltonian(const CommonArgs& args, const sdg::HamiltonianQuery& q) {
    const sdg::Config cfg = resolve_config(args);
    write_manifest(cfg, args, "hamiltonian");
    const auto lower = sdg::lower_hamiltonian(q, cfg.problem);
    const auto upper = sdg::upper_hamiltonian(q, cfg.problem);

    nlohmann::json j;
    j["query"] = {{"t", q.t}, {"x", q.x}, {"y", q.y}, {"p", q.p}, {"A", q.a}};
    const auto u_star = cfg.problem.control_u.point(lower.u_star);
    j["lower"] = {{"value", lower.value},
                  {"u_star", std::vector<double>(u_star.begin(), u_star.end())}};
    nlohmann::json responses = nlohmann::json::array();
    for (std::size_t iu = 0; iu < lower.v_response.size(); ++iu) {
        const auto vp = cfg.problem.control_v.point(lower.v_response[iu]);
        responses.push_back(std::vector<double>(vp.begin(), vp.end()));
    }
    j["lower"]["v_response"] = responses;
    j["upper"] = {{"value", upper.value}};
    j["isaacs_gap"] = upper.value - lower.value;
    emit(j, args);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdglab: numerical laboratory for zero-sum recursive stochastic "
                 "differential games"};
    app.require_subcommand(1);

    CommonArgs args;
    double t0 = 0.0, x0 = 1.0;
    int u_index = 0, v_index = 0, deviation_count = 5;
    bool with_fields = false;
    sdg::HamiltonianQuery query;

    auto* validate = app.add_subcommand("validate", "check the standing hypotheses by sampling");
    add_common_flags(validate, args);

    auto* solve = app.add_subcommand("solve", "solve the HJBI equation backward in time");
    add_common_flags(solve, args);

    auto* bsde = app.add_subcommand("bsde", "Monte-Carlo recursive cost under constant controls");
    add_common_flags(bsde, args);
    bsde->add_option("--t0", t0, "initial time");
    bsde->add_option("--x0", x0, "initial state");
    bsde->add_option("--u-index", u_index, "U mesh index of the constant control");
    bsde->add_option("--v-index", v_index, "V mesh index of the constant control");

    auto* saddle = app.add_subcommand("saddle", "check the saddle-point inequalities");
    add_common_flags(saddle, args);
    saddle->add_option("--t0", t0, "initial time");
    saddle->add_option("--x0", x0, "initial state");
    saddle->add_option("--deviations", deviation_count, "constant deviations per player");

    auto* dpp = app.add_subcommand("dpp-residual", "one-step dynamic-programming residual");
    add_common_flags(dpp, args);

    auto* diagnose = app.add_subcommand("diagnose", "regularity and growth diagnostics");
    add_common_flags(diagnose, args);

    auto* transform = app.add_subcommand("transform-study", "mollification / truncation study");
    add_common_flags(transform, args);
    transform->add_flag("--with-fields", with_fields, "also solve with transformed generators");

    auto* hamiltonian = app.add_subcommand("hamiltonian", "probe the Isaacs Hamiltonians");
    add_common_flags(hamiltonian, args);
    hamiltonian->add_option("--t", query.t, "time");
    hamiltonian->add_option("--x", query.x, "state");
    hamiltonian->add_option("--y", query.y, "value argument");
    hamiltonian->add_option("--p", query.p, "gradient surrogate");
    hamiltonian->add_option("--A", query.a, "Hessian surrogate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(args);
        if (solve->parsed()) return cmd_solve(args);
        if (bsde->parsed()) return cmd_bsde(args, t0, x0, u_index, v_index);
        if (saddle->parsed()) return cmd_saddle(args, t0, x0, deviation_count);
        if (dpp->parsed()) return cmd_dpp_residual(args);
        if (diagnose->parsed()) return cmd_diagnose(args);
        if (transform->parsed()) return cmd_transform_study(args, with_fields);
        if (hamiltonian->parsed()) return cmd_hamiltonian(args, query);
    } catch (const sdg::spec_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const sdg::numeric_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
