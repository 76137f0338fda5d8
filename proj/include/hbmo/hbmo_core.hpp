#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/log.hpp"
#include "hbmo/signed_distance.hpp"
#include "hbmo/wave_solver.hpp"

namespace hbmo {

/// Wave-speed and inner-stepping choices for the threshold steps.
struct SolverParams {
    double c2_first = 1.0;  // first step, driven by the prescribed velocity
    double c2 = 2.0;        // two-history steps
    std::size_t substeps = 64;
    double cfl_safety = 0.9;
};

/// Everything the scheme remembers between threshold steps.
struct HbmoState {
    ScalarField d_curr;  // signed distance to gamma_n, positive inside
    ScalarField d_prev;  // signed distance to gamma_{n-1}
    Interface gamma;     // gamma_n
    double threshold_dt = 0.0;
    std::size_t step_index = 0;

    double time() const { return threshold_dt * static_cast<double>(step_index); }
};

/// Either the next state or the time at which the phase vanished.
struct StepOutcome {
    std::optional<HbmoState> next;
    double time = 0.0;

    bool extinct() const { return !next.has_value(); }
};

namespace detail {

inline void warn_if_near_walls(const Interface& iface, const Grid2D& g, double margin) {
    const double x0 = g.origin.x, y0 = g.origin.y;
    const double x1 = x0 + g.length_x(), y1 = y0 + g.length_y();
    for (const auto& s : iface.segments)
        for (Point p : {s.p, s.q})
            if (p.x - x0 < margin || x1 - p.x < margin || p.y - y0 < margin || y1 - p.y < margin) {
                std::ostringstream msg;
                msg << "interface within " << margin << " of the domain wall; reflections will alter the motion";
                warn(msg.str());
                return;
            }
}

inline StepOutcome finish_step(const ScalarField& u, ScalarField d_curr, double tau, std::size_t next_index) {
    Interface gamma = extract_interface(u);
    const double t = tau * static_cast<double>(next_index);
    if (gamma.empty()) return {std::nullopt, t};
    ScalarField d_next = signed_distance_field(gamma, u);
    return {HbmoState{std::move(d_next), std::move(d_curr), std::move(gamma), tau, next_index}, t};
}

} // namespace detail

/// Band width used for the initial velocity extension.
inline double default_velocity_band(double c2, double tau, const Grid2D& g) {
    return 2.0 * std::sqrt(c2) * tau + 4.0 * g.h();
}

/// First threshold step: u(0) = d_0, normal velocity v0 extended off gamma0,
/// wave speed c2_first. Distances are positive inside, so an outward normal
/// velocity v0 raises the field: the solver receives -v0 as its normal-
/// velocity argument.
inline StepOutcome first_step(const Interface& gamma0, const ScalarField& sign_source, std::span<const double> v0,
                              double tau, const SolverParams& params) {
    if (gamma0.empty()) throw ConfigError("first_step needs a non-empty initial interface");
    if (!(tau > 0.0)) throw ConfigError("threshold_dt must be positive");
    const Grid2D& g = sign_source.grid();
    const WaveParams wp = make_wave_params(g, params.c2_first, tau, params.substeps, params.cfl_safety);
    ScalarField d0 = signed_distance_field(gamma0, sign_source);
    detail::warn_if_near_walls(gamma0, g, 2.0 * std::sqrt(params.c2_first) * tau);
    ScalarField vext = velocity_extension(gamma0, v0, g, default_velocity_band(params.c2_first, tau, g));
    for (std::size_t k = 0; k < vext.size(); ++k) vext[k] = -vext[k];
    const ScalarField u = solve(d0, vext, wp);
    return detail::finish_step(u, std::move(d0), tau, 1);
}

/// Two-history step: u(0) = 2 d_n - d_{n-1}, u_t(0) = 0, wave speed c2.
inline StepOutcome step(const HbmoState& state, const SolverParams& params) {
    const Grid2D& g = state.d_curr.grid();
    const WaveParams wp = make_wave_params(g, params.c2, state.threshold_dt, params.substeps, params.cfl_safety);
    detail::warn_if_near_walls(state.gamma, g, 2.0 * std::sqrt(params.c2) * state.threshold_dt);
    const ScalarField u0 = ScalarField::combine(2.0, state.d_curr, -1.0, state.d_prev);
    const ScalarField u = solve(u0, wp);
    return detail::finish_step(u, state.d_curr, state.threshold_dt, state.step_index + 1);
}

/// Explicit heat flow of a phase indicator (forward Euler, dt <= h^2/4).
inline ScalarField heat_smooth(const ScalarField& field, double smoothing_time) {
    if (smoothing_time < 0.0) throw ConfigError("smoothing time must be non-negative");
    if (smoothing_time == 0.0) return field;
    const Grid2D& g = field.grid();
    const double dt_max = 0.25 * std::min(g.hx, g.hy) * std::min(g.hx, g.hy);
    const auto n = static_cast<std::size_t>(std::ceil(smoothing_time / dt_max));
    const double dt = smoothing_time / static_cast<double>(n);
    ScalarField u = field;
    for (std::size_t s = 0; s < n; ++s) {
        const ScalarField lap = laplacian_neumann(u);
        for (std::size_t k = 0; k < u.size(); ++k) u[k] += dt * lap[k];
    }
    return u;
}

/// One heat-flow (BMO) step on a +-1 phase indicator followed by interface
/// extraction. Rounds off staircase corners of rasterized initial data.
inline Interface smooth_initial(const ScalarField& phase_mask, double smoothing_time) {
    return extract_interface(heat_smooth(phase_mask, smoothing_time));
}

/// Closed polygon given by its vertices; the last vertex connects to the first.
struct Polygon {
    std::vector<Point> vertices;

    Interface to_interface() const {
        Interface out;
        const std::size_t n = vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Point a = vertices[k];
            const Point b = vertices[(k + 1) % n];
            if (norm(b - a) > 0.0) out.segments.push_back({a, b});
        }
        return out;
    }

    /// Even-odd rule.
    bool contains(Point x) const {
        bool inside = false;
        const std::size_t n = vertices.size();
        for (std::size_t k = 0, l = n - 1; k < n; l = k++) {
            const Point a = vertices[k];
            const Point b = vertices[l];
            if ((a.y > x.y) != (b.y > x.y) && x.x < (b.x - a.x) * (x.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
        }
        return inside;
    }
};

enum class ShapeKind { circle, polyline, mask };

struct InitialShape {
    ShapeKind kind = ShapeKind::circle;
    Point center{0.5, 0.5};
    double radius = 0.3;
    Polygon polygon;
    std::optional<ScalarField> mask;  // +1 inside, -1 outside
    double smoothing_time = 0.0;
};

struct InitialData {
    Interface gamma;
    ScalarField sign_source;
};

/// Initial interface plus a field whose sign marks the inside.
inline InitialData build_initial(const InitialShape& shape, const Grid2D& g) {
    switch (shape.kind) {
    case ShapeKind::circle: {
        ScalarField d = circle_distance(shape.center, shape.radius, g);
        Interface gamma = extract_interface(d);
        return {std::move(gamma), std::move(d)};
    }
    case ShapeKind::polyline: {
        if (shape.polygon.vertices.size() < 3) throw ConfigError("initial polygon needs at least 3 vertices");
        ScalarField sign = ScalarField::sample(g, [&](Point x) { return shape.polygon.contains(x) ? 1.0 : -1.0; });
        return {shape.polygon.to_interface(), std::move(sign)};
    }
    case ShapeKind::mask: {
        if (!shape.mask) throw ConfigError("mask shape needs a mask field");
        if (!(shape.mask->grid() == g)) throw ConfigError("mask grid does not match the run grid");
        ScalarField smooth = heat_smooth(*shape.mask, shape.smoothing_time);
        Interface gamma = extract_interface(smooth);
        return {std::move(gamma), std::move(smooth)};
    }
    }
    throw ConfigError("unknown initial shape");
}

struct Frame {
    double time = 0.0;
    Interface gamma;
};

struct Trajectory {
    Interface initial;
    std::vector<Frame> frames;                        // one per completed step, t = tau, 2 tau, ...
    std::vector<std::pair<double, double>> radii;     // (t, mean radius), zero-padded after extinction
    std::optional<double> extinct_time;
};

struct HbmoRunConfig {
    std::size_t grid_n = 128;
    double domain = 1.0;
    InitialShape shape;
    double velocity_constant = 0.0;
    std::vector<double> velocity_per_segment;  // overrides the constant when non-empty
    double threshold_dt = 0.0;
    std::size_t steps = 0;
    SolverParams solver;
    std::optional<Point> radius_center;  // record mean radii about this point
    RadiusAveraging averaging = RadiusAveraging::endpoints;
};

/// Full HBMO loop: first_step, then `step` until `steps` frames exist or
/// the phase vanishes.
inline Trajectory run(const HbmoRunConfig& cfg) {
    if (!(cfg.threshold_dt > 0.0)) throw ConfigError("hbmo.threshold_dt must be positive");
    if (cfg.steps < 1) throw ConfigError("hbmo.steps must be at least 1");
    const Grid2D g = make_grid(cfg.grid_n, cfg.domain);
    InitialData init = build_initial(cfg.shape, g);
    if (init.gamma.empty()) throw ConfigError("initial shape has no interface on this grid");

    std::vector<double> v0 = cfg.velocity_per_segment;
    if (v0.empty()) v0.assign(init.gamma.size(), cfg.velocity_constant);
    if (v0.size() != init.gamma.size()) {
        std::ostringstream msg;
        msg << "initial.velocity has " << v0.size() << " samples but the initial interface has " << init.gamma.size()
            << " segments";
        throw ConfigError(msg.str());
    }

    Trajectory traj;
    traj.initial = init.gamma;
    auto record = [&](double t, const Interface* gamma) {
        if (gamma) traj.frames.push_back({t, *gamma});
        if (cfg.radius_center) {
            const double r = gamma ? average_radius(*gamma, *cfg.radius_center, cfg.averaging).radius : 0.0;
            traj.radii.emplace_back(t, r);
        }
    };

    StepOutcome out = first_step(init.gamma, init.sign_source, v0, cfg.threshold_dt, cfg.solver);
    for (std::size_t n = 1; n <= cfg.steps; ++n) {
        if (out.extinct()) {
            traj.extinct_time = out.time;
            for (std::size_t k = n; k <= cfg.steps; ++k) record(cfg.threshold_dt * static_cast<double>(k), nullptr);
            break;
        }
        record(out.next->time(), &out.next->gamma);
        if (n == cfg.steps) break;
        out = step(*out.next, cfg.solver);
    }
    return traj;
}

} // namespace hbmo
