#include "sdg/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sdg/errors.hpp"

namespace sdg {

void HamiltonianQuery::check() const {
    if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(p) ||
        !std::isfinite(a))
        throw spec_error("Hamiltonian query has a non-finite entry");
}

double eval_hz(const HamiltonianQuery& q, std::span<const double> u, std::span<const double> v,
               const ProblemSpec& spec) {
    CoeffArgs args;
    args.t = q.t;
    args.x = q.x;
    args.y = q.y;
    args.u = u;
    args.v = v;
    const double sig = spec.diffusion(args);
    const double b = spec.drift(args);
    args.z = q.p * sig;
    const double g = spec.generator(args);
    const double hz = 0.5 * sig * sig * q.a + q.p * b + g;
    if (!std::isfinite(hz)) {
        std::ostringstream os;
        os << "Hamiltonian is non-finite at (t=" << q.t << ", x=" << q.x << ", y=" << q.y << ")";
        throw numeric_error(os.str());
    }
    return hz;
}

LowerHamiltonianResult lower_hamiltonian(const HamiltonianQuery& q, const ProblemSpec& spec) {
    q.check();
    const int nu = spec.control_u.count();
    const int nv = spec.control_v.count();
    LowerHamiltonianResult r;
    r.v_response.resize(nu);
    r.value = -std::numeric_limits<double>::infinity();
    for (int iu = 0; iu < nu; ++iu) {
        double inner = std::numeric_limits<double>::infinity();
        int best_v = 0;
        for (int iv = 0; iv < nv; ++iv) {
            const double h = eval_hz(q, spec.control_u.point(iu), spec.control_v.point(iv), spec);
            if (h < inner) {
                inner = h;
                best_v = iv;
            }
        }
        r.v_response[iu] = best_v;
        if (inner > r.value) {
            r.value = inner;
            r.u_star = iu;
        }
    }
    return r;
}

UpperHamiltonianResult upper_hamiltonian(const HamiltonianQuery& q, const ProblemSpec& spec) {
    q.check();
    const int nu = spec.control_u.count();
    const int nv = spec.control_v.count();
    UpperHamiltonianResult r;
    r.u_response.resize(nv);
    r.value = std::numeric_limits<double>::infinity();
    for (int iv = 0; iv < nv; ++iv) {
        double inner = -std::numeric_limits<double>::infinity();
        int best_u = 0;
        for (int iu = 0; iu < nu; ++iu) {
            const double h = eval_hz(q, spec.control_u.point(iu), spec.control_v.point(iv), spec);
            if (h > inner) {
                inner = h;
                best_u = iu;
            }
        }
        r.u_response[iv] = best_u;
        if (inner < r.value) {
            r.value = inner;
            r.v_star = iv;
        }
    }
    return r;
}

double isaacs_gap(const HamiltonianQuery& q, const ProblemSpec& spec) {
    return upper_hamiltonian(q, spec).value - lower_hamiltonian(q, spec).value;
}

} // namespace sdg
