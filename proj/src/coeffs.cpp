#include "sdg/coeffs.hpp"

#include <cmath>

#include "sdg/errors.hpp"

namespace sdg {

double epstein_zin_value(const EpsteinZinTerm& term, double consumption, double y) {
    const double w = (1.0 - term.vartheta) * y;
    if (w == 0.0) return 0.0; // continuity limit from inside the domain
    if (w < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double a = 1.0 - 1.0 / term.varsigma;
    // (rho/a) * w * [ (c / w^{1/(1-vartheta)})^a - 1 ]
    const double base = consumption / std::pow(w, 1.0 / (1.0 - term.vartheta));
    if (base < 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (term.rho / a) * w * (std::pow(base, a) - 1.0);
}

double Expr::eval(const CoeffArgs& a) const {
    switch (kind) {
    case Kind::Constant: return value;
    case Kind::TimeVar: return a.t;
    case Kind::StateVar: return a.x;
    case Kind::ValueVar: return a.y;
    case Kind::GradVar: return a.z;
    case Kind::ControlU:
        return index < static_cast<int>(a.u.size()) ? a.u[index]
                                                    : std::numeric_limits<double>::quiet_NaN();
    case Kind::ControlV:
        return index < static_cast<int>(a.v.size()) ? a.v[index]
                                                    : std::numeric_limits<double>::quiet_NaN();
    case Kind::Sum: {
        double s = 0.0;
        for (const auto& c : args) s += c->eval(a);
        return s;
    }
    case Kind::Product: {
        double p = 1.0;
        for (const auto& c : args) p *= c->eval(a);
        return p;
    }
    case Kind::Negate: return -args[0]->eval(a);
    case Kind::AbsVal: return std::fabs(args[0]->eval(a));
    case Kind::Power: {
        const double b = args[0]->eval(a);
        double r = 1.0;
        for (int i = 0; i < exponent; ++i) r *= b;
        return r;
    }
    case Kind::ExpOf: return std::exp(args[0]->eval(a));
    case Kind::EpsteinZin: {
        const double c = ez.c_index < static_cast<int>(a.u.size())
                             ? a.u[ez.c_index]
                             : std::numeric_limits<double>::quiet_NaN();
        return epstein_zin_value(ez, c, a.y);
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

int saturate(int d) { return d >= kNonlinear ? kNonlinear : d; }

int degree_of(const Expr& e, bool in_y) {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::Constant: case K::TimeVar: case K::StateVar:
    case K::ControlU: case K::ControlV:
        return 0;
    case K::ValueVar: return in_y ? 1 : 0;
    case K::GradVar: return in_y ? 0 : 1;
    case K::Sum: {
        int d = 0;
        for (const auto& c : e.args) d = std::max(d, degree_of(*c, in_y));
        return d;
    }
    case K::Product: {
        int d = 0;
        for (const auto& c : e.args) d += degree_of(*c, in_y);
        return saturate(d);
    }
    case K::Negate: return degree_of(*e.args[0], in_y);
    case K::AbsVal: case K::ExpOf:
        return degree_of(*e.args[0], in_y) == 0 ? 0 : kNonlinear;
    case K::Power: {
        const int d = degree_of(*e.args[0], in_y);
        return d == 0 ? 0 : saturate(d * std::max(e.exponent, 0));
    }
    case K::EpsteinZin: return in_y ? kNonlinear : 0;
    }
    return kNonlinear;
}

bool reads_time_rec(const Expr& e) {
    if (e.kind == Expr::Kind::TimeVar) return true;
    for (const auto& c : e.args)
        if (reads_time_rec(*c)) return true;
    return false;
}

} // namespace

int Expr::degree_y() const { return degree_of(*this, true); }
int Expr::degree_z() const { return degree_of(*this, false); }
bool Expr::reads_time() const { return reads_time_rec(*this); }

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

} // namespace

ExprPtr e_const(double c) {
    Expr e;
    e.kind = Expr::Kind::Constant;
    e.value = c;
    return make(std::move(e));
}

ExprPtr e_t() { Expr e; e.kind = Expr::Kind::TimeVar; return make(std::move(e)); }
ExprPtr e_x() { Expr e; e.kind = Expr::Kind::StateVar; return make(std::move(e)); }
ExprPtr e_y() { Expr e; e.kind = Expr::Kind::ValueVar; return make(std::move(e)); }
ExprPtr e_z() { Expr e; e.kind = Expr::Kind::GradVar; return make(std::move(e)); }

ExprPtr e_u(int index) {
    Expr e;
    e.kind = Expr::Kind::ControlU;
    e.index = index;
    return make(std::move(e));
}

ExprPtr e_v(int index) {
    Expr e;
    e.kind = Expr::Kind::ControlV;
    e.index = index;
    return make(std::move(e));
}

ExprPtr e_sum(std::vector<ExprPtr> args) {
    Expr e;
    e.kind = Expr::Kind::Sum;
    e.args = std::move(args);
    return make(std::move(e));
}

ExprPtr e_prod(std::vector<ExprPtr> args) {
    Expr e;
    e.kind = Expr::Kind::Product;
    e.args = std::move(args);
    return make(std::move(e));
}

ExprPtr e_neg(ExprPtr a) {
    Expr e;
    e.kind = Expr::Kind::Negate;
    e.args = {std::move(a)};
    return make(std::move(e));
}

ExprPtr e_abs(ExprPtr a) {
    Expr e;
    e.kind = Expr::Kind::AbsVal;
    e.args = {std::move(a)};
    return make(std::move(e));
}

ExprPtr e_pow(ExprPtr a, int exponent) {
    Expr e;
    e.kind = Expr::Kind::Power;
    e.exponent = exponent;
    e.args = {std::move(a)};
    return make(std::move(e));
}

ExprPtr e_exp(ExprPtr a) {
    Expr e;
    e.kind = Expr::Kind::ExpOf;
    e.args = {std::move(a)};
    return make(std::move(e));
}

ExprPtr e_epstein_zin(const EpsteinZinTerm& term) {
    Expr e;
    e.kind = Expr::Kind::EpsteinZin;
    e.ez = term;
    return make(std::move(e));
}

nlohmann::json Expr::to_json() const {
    using K = Kind;
    nlohmann::json j;
    switch (kind) {
    case K::Constant: j["op"] = "const"; j["value"] = value; break;
    case K::TimeVar: j["op"] = "t"; break;
    case K::StateVar: j["op"] = "x"; break;
    case K::ValueVar: j["op"] = "y"; break;
    case K::GradVar: j["op"] = "z"; break;
    case K::ControlU: j["op"] = "u"; j["index"] = index; break;
    case K::ControlV: j["op"] = "v"; j["index"] = index; break;
    case K::Sum: j["op"] = "sum"; break;
    case K::Product: j["op"] = "prod"; break;
    case K::Negate: j["op"] = "neg"; break;
    case K::AbsVal: j["op"] = "abs"; break;
    case K::Power: j["op"] = "pow"; j["exponent"] = exponent; break;
    case K::ExpOf: j["op"] = "exp"; break;
    case K::EpsteinZin:
        j["op"] = "epstein_zin";
        j["rho"] = ez.rho;
        j["vartheta"] = ez.vartheta;
        j["varsigma"] = ez.varsigma;
        j["c_index"] = ez.c_index;
        break;
    }
    if (!args.empty()) {
        nlohmann::json ja = nlohmann::json::array();
        for (const auto& c : args) ja.push_back(c->to_json());
        j["args"] = ja;
    }
    return j;
}

ExprPtr Expr::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("op"))
        throw spec_error("coefficient expression must be an object with an \"op\" key");
    const std::string op = j.at("op").get<std::string>();
    auto children = [&]() {
        std::vector<ExprPtr> out;
        for (const auto& c : j.at("args")) out.push_back(from_json(c));
        return out;
    };
    if (op == "const") return e_const(j.at("value").get<double>());
    if (op == "t") return e_t();
    if (op == "x") return e_x();
    if (op == "y") return e_y();
    if (op == "z") return e_z();
    if (op == "u") return e_u(j.value("index", 0));
    if (op == "v") return e_v(j.value("index", 0));
    if (op == "sum") return e_sum(children());
    if (op == "prod") return e_prod(children());
    if (op == "neg") return e_neg(from_json(j.at("args").at(0)));
    if (op == "abs") return e_abs(from_json(j.at("args").at(0)));
    if (op == "pow") return e_pow(from_json(j.at("args").at(0)), j.at("exponent").get<int>());
    if (op == "exp") return e_exp(from_json(j.at("args").at(0)));
    if (op == "epstein_zin") {
        EpsteinZinTerm t;
        t.rho = j.at("rho").get<double>();
        t.vartheta = j.at("vartheta").get<double>();
        t.varsigma = j.at("varsigma").get<double>();
        t.c_index = j.value("c_index", 0);
        return e_epstein_zin(t);
    }
    throw spec_error("unknown coefficient op \"" + op + "\"");
}

Coefficient Coefficient::from_expr(ExprPtr e) {
    Coefficient c;
    c.expr_ = e;
    c.deg_y_ = e->degree_y();
    c.deg_z_ = e->degree_z();
    c.time_varying_ = e->reads_time();
    c.fn_ = [e](const CoeffArgs& a) { return e->eval(a); };
    return c;
}

Coefficient Coefficient::from_fn(std::function<double(const CoeffArgs&)> fn,
                                 int degree_y, int degree_z, bool time_varying) {
    Coefficient c;
    c.fn_ = std::move(fn);
    c.deg_y_ = degree_y;
    c.deg_z_ = degree_z;
    c.time_varying_ = time_varying;
    return c;
}

} // namespace sdg
