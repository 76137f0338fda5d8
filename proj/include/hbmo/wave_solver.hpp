#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>

#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/parallel.hpp"

namespace hbmo {

/// Parameters of one explicit solve of u_tt = c2 * Lap(u) on [0, duration].
struct WaveParams {
    double c2 = 1.0;
    double solver_dt = 0.0;
    double duration = 0.0;
    double cfl_safety = 0.9;

    double courant(const Grid2D& g) const {
        return std::sqrt(c2) * solver_dt * std::sqrt(1.0 / (g.hx * g.hx) + 1.0 / (g.hy * g.hy));
    }
    double max_stable_dt(const Grid2D& g) const {
        return cfl_safety / (std::sqrt(c2) * std::sqrt(1.0 / (g.hx * g.hx) + 1.0 / (g.hy * g.hy)));
    }

    /// Number of inner steps; throws when duration is not a whole multiple of solver_dt.
    std::size_t steps() const {
        if (duration == 0.0) return 0;
        const double ratio = duration / solver_dt;
        const double k = std::round(ratio);
        if (k < 1.0 || std::abs(ratio - k) > 1e-9 * k)
            throw ConfigError("wave duration must be a positive integer multiple of solver_dt");
        return static_cast<std::size_t>(k);
    }

    void validate(const Grid2D& g) const {
        if (!(c2 > 0.0)) throw ConfigError("wave speed c2 must be positive");
        if (!(cfl_safety > 0.0)) throw ConfigError("cfl_safety must be positive");
        if (duration < 0.0) throw ConfigError("wave duration must be non-negative");
        if (duration == 0.0) return;
        if (!(solver_dt > 0.0)) throw ConfigError("solver_dt must be positive");
        if (courant(g) > cfl_safety) {
            std::ostringstream msg;
            msg << "CFL condition violated: solver_dt=" << solver_dt << " exceeds the maximal admissible dt="
                << max_stable_dt(g);
            throw ConfigError(msg.str());
        }
        (void)steps();
    }
};

/// Default inner stepping: duration/substeps, refined to duration/k for the
/// smallest k >= substeps that satisfies the CFL bound.
inline WaveParams make_wave_params(const Grid2D& g, double c2, double duration, std::size_t substeps = 64,
                                   double cfl_safety = 0.9) {
    if (substeps == 0) throw ConfigError("solver substeps must be positive");
    WaveParams p{c2, 0.0, duration, cfl_safety};
    if (duration == 0.0) return p;
    const double dt_max = p.max_stable_dt(g);
    std::size_t k = substeps;
    if (duration / static_cast<double>(k) > dt_max) k = static_cast<std::size_t>(std::ceil(duration / dt_max));
    p.solver_dt = duration / static_cast<double>(k);
    while (p.courant(g) > cfl_safety) p.solver_dt = duration / static_cast<double>(++k);
    return p;
}

struct WaveState {
    ScalarField u_prev;
    ScalarField u_curr;
    double t = 0.0;
};

namespace detail {

// next = 2*curr - prev + k * Lap(curr), written in one pass. Shared by the
// public single step and the in-place loop so both are bit-identical.
inline void leapfrog_kernel(const ScalarField& prev, const ScalarField& curr, double k, ScalarField& next) {
    const Grid2D& g = curr.grid();
    const double ix2 = 1.0 / (g.hx * g.hx);
    const double iy2 = 1.0 / (g.hy * g.hy);
    const auto p = prev.values();
    const auto c = curr.values();
    auto out = next.values();
    const std::size_t nx = g.nx;
    const std::size_t ny = g.ny;
    parallel_for(ny, [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const std::size_t row = j * nx;
            const std::size_t down = (j == 0 ? 1 : j - 1) * nx;
            const std::size_t up = (j + 1 == ny ? ny - 2 : j + 1) * nx;
            for (std::size_t i = 0; i < nx; ++i) {
                const std::size_t il = i == 0 ? 1 : i - 1;
                const std::size_t ir = i + 1 == nx ? nx - 2 : i + 1;
                const double cc = c[row + i];
                const double lap = (c[row + il] + c[row + ir] - 2.0 * cc) * ix2 + (c[down + i] + c[up + i] - 2.0 * cc) * iy2;
                out[row + i] = 2.0 * cc - p[row + i] + k * lap;
            }
        }
    }, 16);
}

} // namespace detail

/// Second-order Taylor start of the leapfrog scheme:
///   u1 = u0 - dt*v0 + (c2*dt^2/2) * Lap(u0),
/// i.e. v0 is the normal velocity and u_t(0) = -v0.
inline WaveState first_leap(const ScalarField& u0, const ScalarField& v0, const WaveParams& params) {
    ScalarField::require_same_grid(u0, v0);
    params.validate(u0.grid());
    const double dt = params.solver_dt;
    const ScalarField lap = laplacian_neumann(u0);
    ScalarField u1(u0.grid());
    const double half = 0.5 * params.c2 * dt * dt;
    for (std::size_t k = 0; k < u1.size(); ++k) u1[k] = u0[k] - dt * v0[k] + half * lap[k];
    return WaveState{u0, std::move(u1), dt};
}

inline WaveState leapfrog_step(const WaveState& state, const WaveParams& params) {
    ScalarField::require_same_grid(state.u_prev, state.u_curr);
    params.validate(state.u_curr.grid());
    ScalarField next(state.u_curr.grid());
    detail::leapfrog_kernel(state.u_prev, state.u_curr, params.c2 * params.solver_dt * params.solver_dt, next);
    return WaveState{state.u_curr, std::move(next), state.t + params.solver_dt};
}

/// u(duration) from u(0) = u0, u_t(0) = -v0, using first_leap followed by
/// exactly duration/solver_dt - 1 leapfrog steps.
inline ScalarField solve(const ScalarField& u0, const ScalarField& v0, const WaveParams& params) {
    ScalarField::require_same_grid(u0, v0);
    params.validate(u0.grid());
    const std::size_t steps = params.steps();
    if (steps == 0) return u0;
    WaveState s = first_leap(u0, v0, params);
    ScalarField prev = std::move(s.u_prev);
    ScalarField curr = std::move(s.u_curr);
    ScalarField next(u0.grid());
    const double k = params.c2 * params.solver_dt * params.solver_dt;
    for (std::size_t n = 1; n < steps; ++n) {
        detail::leapfrog_kernel(prev, curr, k, next);
        std::swap(prev, curr);
        std::swap(curr, next);
    }
    return curr;
}

/// Zero initial velocity overload.
inline ScalarField solve(const ScalarField& u0, const WaveParams& params) {
    return solve(u0, ScalarField(u0.grid(), 0.0), params);
}

/// Leapfrog-invariant discrete energy of the pair (u_prev, u_curr):
///   sum_w ((u_curr - u_prev)/dt)^2 + c2 * a(u_curr, u_prev),
/// where a(f, g) = -<f, Lap g>_w is the edge form of the Neumann Laplacian
/// under trapezoid weights. The gradient term pairs consecutive levels,
/// which makes the quantity exactly conserved up to round-off.
inline double discrete_energy(const WaveState& s, const WaveParams& params) {
    const Grid2D& g = s.u_curr.grid();
    const double dt = params.solver_dt;
    double kinetic = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double v = (s.u_curr(i, j) - s.u_prev(i, j)) / dt;
            kinetic += quadrature_weight(g, i, j) * v * v;
        }
    double potential = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        const double wy = (j == 0 || j + 1 == g.ny) ? 0.5 : 1.0;
        for (std::size_t i = 0; i + 1 < g.nx; ++i) {
            const double a = s.u_curr(i + 1, j) - s.u_curr(i, j);
            const double b = s.u_prev(i + 1, j) - s.u_prev(i, j);
            potential += wy * g.hy / g.hx * a * b;
        }
    }
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double wx = (i == 0 || i + 1 == g.nx) ? 0.5 : 1.0;
        for (std::size_t j = 0; j + 1 < g.ny; ++j) {
            const double a = s.u_curr(i, j + 1) - s.u_curr(i, j);
            const double b = s.u_prev(i, j + 1) - s.u_prev(i, j);
            potential += wx * g.hx / g.hy * a * b;
        }
    }
    return kinetic + params.c2 * potential;
}

/// Local Taylor data of a signed distance function at an interface point,
/// in the frame where the point is the origin and the outer normal is +x2
/// (distance positive outside).
struct LocalExpansion {
    double kappa = 0.0;     // curvature
    double kappa_x1 = 0.0;  // tangential derivative of the curvature
    double v0 = 0.0;        // normal velocity at the origin
    double dv0_dx1 = 0.0;   // its tangential derivative
    double c2 = 1.0;
};

/// Closed-form wave solution with u(0) = d, u_t(0) = -v0 near the origin,
/// exact through cubic order in (t, x).
inline double poisson_reference(const LocalExpansion& e, double t, Point x) {
    const double ct2 = e.c2 * t * t;
    const double x1 = x.x;
    const double x2 = x.y;
    return x2 + 0.5 * e.kappa * (ct2 + x1 * x1) + e.kappa_x1 * x1 / 6.0 * (3.0 * ct2 + x1 * x1) -
           0.5 * e.kappa * e.kappa * x2 * (ct2 + x1 * x1) - e.v0 * t - e.dv0_dx1 * t * x1;
}

} // namespace hbmo
