#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdg/coeffs.hpp"

namespace sdg {

/// Finite discretization of a compact control set: a product of intervals
/// with a uniform mesh per dimension. Single points (lo == hi, points == 1)
/// are allowed.
class ControlSet {
public:
    struct Dim {
        double lo = 0.0;
        double hi = 0.0;
        int points = 1;
    };

    ControlSet() = default;
    explicit ControlSet(std::vector<Dim> dims);

    static ControlSet interval(double lo, double hi, int points = 21);

    int dim() const { return static_cast<int>(dims_.size()); }
    int count() const { return count_; }
    const std::vector<Dim>& dims() const { return dims_; }

    /// Largest mesh spacing over all dimensions (0 for single points).
    double mesh_size() const;

    /// The k-th mesh point as a span of dim() components.
    std::span<const double> point(int k) const {
        return {flat_.data() + static_cast<std::size_t>(k) * dims_.size(), dims_.size()};
    }

    /// Index of the mesh point closest to the given coordinates.
    int nearest_index(std::span<const double> coords) const;

private:
    std::vector<Dim> dims_;
    std::vector<double> flat_; // count * dim, point-major
    int count_ = 0;
};

enum class Side { lower, upper };

inline const char* side_name(Side s) { return s == Side::lower ? "lower" : "upper"; }

/// Valid range for the y argument of the generator. Outside it the generator
/// is undefined (Epstein-Zin); the solver aborts on excursions instead of
/// clamping.
struct YBand {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double y) const { return y >= lo && y <= hi; }
};

/// Full data of one game: dynamics, generator, terminal cost, horizon,
/// control meshes and the structural constants of the standing hypotheses.
struct ProblemSpec {
    std::string name;

    Coefficient drift;     // b(t, x, u, v)
    Coefficient diffusion; // sigma(t, x, u, v)
    Coefficient generator; // g(t, x, y, z, u, v)
    Coefficient terminal;  // h(x)

    double horizon = 1.0;
    ControlSet control_u;
    ControlSet control_v;

    bool z_dependent = false; // whether g reads z
    double theta = 0.0;       // one-sided monotonicity constant in y
    double eta = 1.0;         // polynomial growth scale in y
    double growth_p = 1.0;    // polynomial growth exponent in y
    double lip_c = 1.0;       // Lipschitz constant of b, sigma, h, g in (x, z)

    int state_dim = 1;
    int noise_dim = 1;

    std::optional<YBand> y_band;

    /// Throws spec_error when a structural invariant fails (T > 0, non-empty
    /// control sets, positive mesh counts, n = d = 1 for the solver).
    void check_structure() const;
};

/// Uniform space-time lattice. n_x nodes span [x_lo, x_hi] inclusive; the
/// first and last node are boundary nodes. n_t = 0 requests the CFL-derived
/// step count at solve time.
struct GridSpec {
    double x_lo = -2.0;
    double x_hi = 2.0;
    int n_x = 201;
    int n_t = 0;

    double dx() const { return (x_hi - x_lo) / (n_x - 1); }
    double x(int i) const { return x_lo + i * dx(); }
    void check() const;
};

/// Tabulated value function on a GridSpec: rows are time slices, row n_t is
/// the terminal slice.
struct ValueField {
    GridSpec grid;
    Side side = Side::lower;
    double horizon = 1.0;

    std::vector<double> values; // (n_t + 1) * n_x, row-major in time

    double dt() const { return horizon / grid.n_t; }
    double t(int k) const { return k * dt(); }
    double& at(int k, int i) { return values[static_cast<std::size_t>(k) * grid.n_x + i]; }
    double at(int k, int i) const { return values[static_cast<std::size_t>(k) * grid.n_x + i]; }
    std::span<const double> slice(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * grid.n_x,
                static_cast<std::size_t>(grid.n_x)};
    }

    /// Value at arbitrary (t, x) by nearest time slice and linear
    /// interpolation in x (clamped to the boundary value outside the domain).
    double interpolate(double t_query, double x_query) const;
};

/// Tabulated feedback control u_hat(t, x) and feedback strategy
/// beta_hat(t, x, u) (v_hat / alpha_hat for upper games), stored as indices
/// into the problem's control meshes. The time axis may be coarser than the
/// solved field's.
struct FeedbackPair {
    GridSpec grid;
    Side side = Side::lower;
    double horizon = 1.0;
    int n_u = 0; // size of the control mesh indexed by the strategy argument

    std::vector<int> own_idx;      // (n_t + 1) * n_x: u_hat (lower) or v_hat (upper)
    std::vector<int> response_idx; // (n_t + 1) * n_x * n_u: beta_hat / alpha_hat
    std::vector<std::uint8_t> boundary_flag; // per (t, x) node

    double dt() const { return horizon / grid.n_t; }
    int time_index(double t) const;
    int space_index(double x) const;

    int own_at(double t, double x) const;
    int response_at(double t, double x, int opponent_index) const;
};

/// Monte-Carlo forward trajectories with the controls and Brownian
/// increments that produced them.
struct PathBundle {
    double t0 = 0.0;
    double x0 = 0.0;
    int m_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;

    std::vector<double> times;  // n_steps + 1
    std::vector<double> states; // m_paths * (n_steps + 1)
    std::vector<double> db;     // m_paths * n_steps
    std::vector<int> u_index;   // m_paths * n_steps, mesh index applied
    std::vector<int> v_index;   // m_paths * n_steps

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    double state(int p, int k) const {
        return states[static_cast<std::size_t>(p) * (n_steps + 1) + k];
    }
};

/// Backward solution along a PathBundle.
struct BSDESolution {
    std::vector<double> y; // m_paths * (n_steps + 1)
    std::vector<double> z; // m_paths * n_steps
    double y0 = 0.0;       // estimate of Y at (t0, x0)
    int basis_degree_used = 0;
    bool degenerate_dynamics = false; // sigma == 0 shortcut taken
    std::vector<std::string> warnings;

    double y_at(int p, int k, int n_steps) const {
        return y[static_cast<std::size_t>(p) * (n_steps + 1) + k];
    }
};

/// Result of sampling-based hypothesis checks on a ProblemSpec.
struct ValidationReport {
    struct Check {
        std::string name;
        double worst_violation = 0.0;
        double tolerance = 0.0;
        bool passed = true;
        std::string worst_point; // human-readable location of the worst case
    };

    std::vector<Check> checks;
    bool passed = true;

    std::string summary() const;
};

/// Sampling box for validate_problem. The y range defaults to the spec's
/// y_band when one is declared.
struct ValidationOptions {
    double x_lo = -2.0, x_hi = 2.0;
    double z_lo = -2.0, z_hi = 2.0;
    std::optional<double> y_lo, y_hi;
};

/// Checks the standing hypotheses by low-discrepancy sampling: Lipschitz in
/// x and z, one-sided monotonicity in y with constant theta, polynomial
/// growth in y with (eta, p). Throws spec_error when a coefficient returns a
/// non-finite value at a sampled point.
ValidationReport validate_problem(const ProblemSpec& spec, int sample_budget, double tol,
                                  const ValidationOptions& opts = {});

} // namespace sdg
