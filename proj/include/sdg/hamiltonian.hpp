#pragma once

#include <vector>

#include "sdg/problem.hpp"

namespace sdg {

/// One evaluation point of the Hamiltonians: state, value and the gradient /
/// Hessian surrogates (scalars in the one-dimensional implementation).
struct HamiltonianQuery {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double p = 0.0; // gradient surrogate
    double a = 0.0; // Hessian surrogate

    void check() const;
};

/// The generalized Hamiltonian
///   0.5 tr(sigma sigma^T A) + <p, b> + g(t, x, y, p^T sigma, u, v)
/// at one control pair. For z-free generators the z argument is inert.
/// Throws numeric_error carrying (t, x, y) when g is non-finite.
double eval_hz(const HamiltonianQuery& q, std::span<const double> u, std::span<const double> v,
               const ProblemSpec& spec);

struct LowerHamiltonianResult {
    double value = 0.0;
    int u_star = 0;                // argmax index into the U mesh
    std::vector<int> v_response;   // argmin index into V per U point
};

struct UpperHamiltonianResult {
    double value = 0.0;
    int v_star = 0;
    std::vector<int> u_response; // argmax index into U per V point
};

/// sup_u inf_v of eval_hz by exhaustive mesh search; ties break to the
/// lowest mesh index.
LowerHamiltonianResult lower_hamiltonian(const HamiltonianQuery& q, const ProblemSpec& spec);

/// inf_v sup_u, mirror of lower_hamiltonian.
UpperHamiltonianResult upper_hamiltonian(const HamiltonianQuery& q, const ProblemSpec& spec);

/// upper - lower; never below -1e-12 on finite meshes.
double isaacs_gap(const HamiltonianQuery& q, const ProblemSpec& spec);

} // namespace sdg
