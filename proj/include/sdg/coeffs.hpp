#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdg {

/// Argument tuple a coefficient may read. Controls are points of the finite
/// control meshes and may have several components.
struct CoeffArgs {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::span<const double> u{};
    std::span<const double> v{};
};

/// Saturated polynomial degree used by structure analysis: 0 (absent),
/// 1 (affine) or kNonlinear.
inline constexpr int kNonlinear = 1000;

struct EpsteinZinTerm {
    double rho = 0.1;      // time-preference rate
    double vartheta = 2.0; // relative risk aversion
    double varsigma = 2.0; // elasticity of intertemporal substitution
    int c_index = 0;       // which component of u carries consumption
};

/// Declarative coefficient expression. Every coefficient that can be written
/// to the config format is a tree of these nodes; evaluation returns NaN on
/// domain violations (callers decide whether that is an error).
class Expr {
public:
    enum class Kind {
        Constant,
        TimeVar,   // t
        StateVar,  // x
        ValueVar,  // y
        GradVar,   // z
        ControlU,  // u[index]
        ControlV,  // v[index]
        Sum,
        Product,
        Negate,
        AbsVal,
        Power,     // child ^ integer exponent
        ExpOf,
        EpsteinZin // recursive-utility aggregator applied to y and u[c_index]
    };

    Kind kind = Kind::Constant;
    double value = 0.0;                         // Constant
    int index = 0;                              // ControlU / ControlV
    int exponent = 1;                           // Power
    EpsteinZinTerm ez{};                        // EpsteinZin
    std::vector<std::shared_ptr<const Expr>> args;

    double eval(const CoeffArgs& a) const;

    int degree_y() const;
    int degree_z() const;
    bool reads_time() const;

    nlohmann::json to_json() const;
    static std::shared_ptr<const Expr> from_json(const nlohmann::json& j);
};

using ExprPtr = std::shared_ptr<const Expr>;

// Builders for the expression library.
ExprPtr e_const(double c);
ExprPtr e_t();
ExprPtr e_x();
ExprPtr e_y();
ExprPtr e_z();
ExprPtr e_u(int index = 0);
ExprPtr e_v(int index = 0);
ExprPtr e_sum(std::vector<ExprPtr> args);
ExprPtr e_prod(std::vector<ExprPtr> args);
ExprPtr e_neg(ExprPtr a);
ExprPtr e_abs(ExprPtr a);
ExprPtr e_pow(ExprPtr a, int exponent);
ExprPtr e_exp(ExprPtr a);
ExprPtr e_epstein_zin(const EpsteinZinTerm& term);

/// Closed-form Epstein-Zin aggregator. Returns the continuity limit 0 when
/// (1-vartheta)*y == 0 and NaN when (1-vartheta)*y < 0 (outside the domain).
double epstein_zin_value(const EpsteinZinTerm& term, double consumption, double y);

/// A problem coefficient: an evaluator plus the structure flags the solver
/// uses to pick its fast paths. Config-built coefficients carry their
/// expression tree so they can be serialized; test coefficients may wrap
/// plain lambdas with hand-declared structure.
class Coefficient {
public:
    Coefficient() = default;

    static Coefficient from_expr(ExprPtr e);
    static Coefficient from_fn(std::function<double(const CoeffArgs&)> fn,
                               int degree_y, int degree_z, bool time_varying);

    double operator()(const CoeffArgs& a) const { return fn_(a); }
    bool valid() const { return static_cast<bool>(fn_); }

    int degree_y() const { return deg_y_; }
    int degree_z() const { return deg_z_; }
    bool depends_y() const { return deg_y_ > 0; }
    bool depends_z() const { return deg_z_ > 0; }
    bool affine_z() const { return deg_z_ <= 1; }
    bool time_varying() const { return time_varying_; }

    const ExprPtr& expr() const { return expr_; }

private:
    std::function<double(const CoeffArgs&)> fn_;
    ExprPtr expr_;
    int deg_y_ = 0;
    int deg_z_ = 0;
    bool time_varying_ = false;
};

} // namespace sdg
