#include "sdg/config.hpp"

#include <fstream>
#include <set>

#include "sdg/errors.hpp"

namespace sdg {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw spec_error("config section \"" + where + "\" must be an object");
    std::string unknown;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) unknown += (unknown.empty() ? "" : ", ") + it.key();
    }
    if (!unknown.empty())
        throw spec_error("unknown keys in " + where + ": " + unknown);
}

const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                              const std::string& where) {
    if (!j.contains(key)) throw spec_error("missing required key \"" + key + "\" in " + where);
    return j.at(key);
}

nlohmann::json control_set_to_json(const ControlSet& cs) {
    nlohmann::json dims = nlohmann::json::array();
    for (const auto& d : cs.dims())
        dims.push_back({{"lo", d.lo}, {"hi", d.hi}, {"points", d.points}});
    return dims;
}

ControlSet control_set_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw spec_error(where + " must be a non-empty array of {lo, hi, points}");
    std::vector<ControlSet::Dim> dims;
    for (const auto& dj : j) {
        check_keys(dj, {"lo", "hi", "points"}, where);
        ControlSet::Dim d;
        d.lo = require(dj, "lo", where).get<double>();
        d.hi = require(dj, "hi", where).get<double>();
        d.points = dj.value("points", 21);
        dims.push_back(d);
    }
    return ControlSet(std::move(dims));
}

Coefficient coeff_from_json(const nlohmann::json& j) {
    return Coefficient::from_expr(Expr::from_json(j));
}

} // namespace

nlohmann::json problem_to_json(const ProblemSpec& spec) {
    auto expr_json = [&](const Coefficient& c, const char* name) {
        if (!c.expr())
            throw spec_error(std::string("coefficient ") + name +
                             " was not built from the coefficient library and cannot be "
                             "written to the config format");
        return c.expr()->to_json();
    };
    nlohmann::json j;
    j["name"] = spec.name;
    j["T"] = spec.horizon;
    j["b"] = expr_json(spec.drift, "b");
    j["sigma"] = expr_json(spec.diffusion, "sigma");
    j["g"] = expr_json(spec.generator, "g");
    j["h"] = expr_json(spec.terminal, "h");
    j["U"] = control_set_to_json(spec.control_u);
    j["V"] = control_set_to_json(spec.control_v);
    j["z_dependent"] = spec.z_dependent;
    j["theta"] = spec.theta;
    j["eta"] = spec.eta;
    j["p"] = spec.growth_p;
    j["lip_C"] = spec.lip_c;
    j["state_dim"] = spec.state_dim;
    j["noise_dim"] = spec.noise_dim;
    if (spec.y_band) j["y_band"] = {{"lo", spec.y_band->lo}, {"hi", spec.y_band->hi}};
    return j;
}

ProblemSpec problem_from_json(const nlohmann::json& j) {
    check_keys(j, {"name", "T", "b", "sigma", "g", "h", "U", "V", "z_dependent", "theta",
                   "eta", "p", "lip_C", "state_dim", "noise_dim", "y_band"},
               "problem");
    ProblemSpec s;
    s.name = j.value("name", "");
    s.horizon = require(j, "T", "problem").get<double>();
    s.drift = coeff_from_json(require(j, "b", "problem"));
    s.diffusion = coeff_from_json(require(j, "sigma", "problem"));
    s.generator = coeff_from_json(require(j, "g", "problem"));
    s.terminal = coeff_from_json(require(j, "h", "problem"));
    s.control_u = control_set_from_json(require(j, "U", "problem"), "problem.U");
    s.control_v = control_set_from_json(require(j, "V", "problem"), "problem.V");
    s.z_dependent = j.value("z_dependent", s.generator.depends_z());
    s.theta = j.value("theta", 0.0);
    s.eta = j.value("eta", 1.0);
    s.growth_p = j.value("p", 1.0);
    s.lip_c = j.value("lip_C", 1.0);
    s.state_dim = j.value("state_dim", 1);
    s.noise_dim = j.value("noise_dim", 1);
    if (j.contains("y_band")) {
        check_keys(j.at("y_band"), {"lo", "hi"}, "problem.y_band");
        s.y_band = YBand{require(j.at("y_band"), "lo", "problem.y_band").get<double>(),
                         require(j.at("y_band"), "hi", "problem.y_band").get<double>()};
    }
    s.check_structure();
    return s;
}

nlohmann::json config_to_json(const Config& cfg) {
    nlohmann::json j;
    j["problem"] = problem_to_json(cfg.problem);
    j["grid"] = {{"x_lo", cfg.grid.x_lo},
                 {"x_hi", cfg.grid.x_hi},
                 {"n_x", cfg.grid.n_x},
                 {"n_t", cfg.grid.n_t}};
    j["solver"] = {{"side", side_name(cfg.solver.side)}, {"threads", cfg.solver.threads}};
    j["mc"] = {{"paths", cfg.mc.paths},
               {"steps", cfg.mc.steps},
               {"seed", cfg.mc.seed},
               {"basis_degree", cfg.mc.basis_degree}};
    j["transform"] = {{"m", cfg.transform.mollify_m},
                      {"k", cfg.transform.truncate_k},
                      {"quad_points", cfg.transform.quad_points}};
    return j;
}

Config config_from_json(const nlohmann::json& j) {
    check_keys(j, {"problem", "grid", "solver", "mc", "transform"}, "config");
    Config cfg;
    cfg.problem = problem_from_json(require(j, "problem", "config"));

    if (j.contains("grid")) {
        const auto& gj = j.at("grid");
        check_keys(gj, {"x_lo", "x_hi", "n_x", "n_t"}, "grid");
        cfg.grid.x_lo = gj.value("x_lo", cfg.grid.x_lo);
        cfg.grid.x_hi = gj.value("x_hi", cfg.grid.x_hi);
        cfg.grid.n_x = gj.value("n_x", cfg.grid.n_x);
        cfg.grid.n_t = gj.value("n_t", cfg.grid.n_t);
        cfg.grid.check();
    }
    if (j.contains("solver")) {
        const auto& sj = j.at("solver");
        check_keys(sj, {"side", "threads"}, "solver");
        const std::string side = sj.value("side", "lower");
        if (side == "lower")
            cfg.solver.side = Side::lower;
        else if (side == "upper")
            cfg.solver.side = Side::upper;
        else
            throw spec_error("solver.side must be \"lower\" or \"upper\"");
        cfg.solver.threads = sj.value("threads", 1);
    }
    if (j.contains("mc")) {
        const auto& mj = j.at("mc");
        check_keys(mj, {"paths", "steps", "seed", "basis_degree"}, "mc");
        cfg.mc.paths = mj.value("paths", cfg.mc.paths);
        cfg.mc.steps = mj.value("steps", cfg.mc.steps);
        cfg.mc.seed = mj.value("seed", cfg.mc.seed);
        cfg.mc.basis_degree = mj.value("basis_degree", cfg.mc.basis_degree);
    }
    if (j.contains("transform")) {
        const auto& tj = j.at("transform");
        check_keys(tj, {"m", "k", "quad_points"}, "transform");
        cfg.transform.mollify_m = tj.value("m", cfg.transform.mollify_m);
        cfg.transform.truncate_k = tj.value("k", cfg.transform.truncate_k);
        cfg.transform.quad_points = tj.value("quad_points", cfg.transform.quad_points);
        if (cfg.transform.mollify_m < 1 || cfg.transform.truncate_k < 1)
            throw spec_error("transform.m and transform.k must be >= 1");
        if (cfg.transform.quad_points < 8)
            throw spec_error("transform.quad_points must be >= 8");
    }
    return cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw spec_error("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw spec_error("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config_file(const Config& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw spec_error("cannot write config file " + path);
    out << config_to_json(cfg).dump(2) << "\n";
}

} // namespace sdg
