#pragma once

// Grid-discretized collapse of a circle under the two-history scheme,
// measured against the closed-form radius.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbmo/circle_oracle.hpp"
#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/signed_distance.hpp"
#include "hbmo/wave_solver.hpp"

namespace hbmo {

enum class DistanceMode { ideal, reconstructed };

inline const char* to_string(DistanceMode m) { return m == DistanceMode::ideal ? "ideal" : "reconstructed"; }

inline DistanceMode parse_distance_mode(const std::string& s) {
    if (s == "ideal") return DistanceMode::ideal;
    if (s == "reconstructed") return DistanceMode::reconstructed;
    throw ConfigError("unknown distance mode '" + s + "' (expected ideal|reconstructed)");
}

struct ExperimentSpec {
    std::size_t grid_n = 128;
    double r0 = 0.3;
    Point center{0.5, 0.5};
    std::size_t threshold_divisions = 512;  // threshold_dt = t_e / threshold_divisions
    std::size_t solver_substeps = 64;       // solver_dt = threshold_dt / solver_substeps
    double c2 = 2.0;
    DistanceMode mode = DistanceMode::ideal;
    RadiusAveraging averaging = RadiusAveraging::endpoints;

    double extinction() const { return extinction_time(CircleParams{r0, 0.0}); }
    double threshold_dt() const { return extinction() / static_cast<double>(threshold_divisions); }
};

struct ExperimentResult {
    std::vector<double> radii;  // rbar_1 = r0, rbar_2, ... ; entry n belongs to t = (n-1) dt
    double dt = 0.0;
    double l2_error = 0.0;
    std::optional<std::size_t> extinct_at;  // first missing entry (1-based), if the circle vanished
};

/// Number of terms in the error sum: the largest N_e with N_e*dt <= t_e.
inline std::size_t error_terms(double te, double dt) {
    return static_cast<std::size_t>(std::floor(te / dt * (1.0 + 1e-12)));
}

/// sqrt(dt * sum_{n=1}^{N_e} (r((n-1) dt) - rbar_n)^2); missing entries count as 0.
inline double l2_radius_error(std::span<const double> rbar, const CircleParams& params, double dt) {
    if (!(dt > 0.0)) throw ConfigError("l2_radius_error needs dt > 0");
    const double te = extinction_time(params);
    const std::size_t ne = error_terms(te, dt);
    double sum = 0.0;
    for (std::size_t n = 1; n <= ne; ++n) {
        const double exact = exact_radius(static_cast<double>(n - 1) * dt, params).radius;
        const double approx = n <= rbar.size() ? rbar[n - 1] : 0.0;
        sum += (exact - approx) * (exact - approx);
    }
    return std::sqrt(dt * sum);
}

/// Starts from d_1 = d_0 (zero initial velocity); every step solves the wave
/// equation from 2 d_n - d_{n-1}, records the mean radius of the zero level
/// set, and rebuilds d_{n+1} either as the exact circle distance of that
/// radius (ideal) or as the exact distance to the extracted polyline
/// (reconstructed).
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.threshold_divisions < 1) throw ConfigError("threshold_divisions must be positive");
    const Grid2D g = make_grid(spec.grid_n, 1.0);
    const CircleParams params{spec.r0, 0.0};
    ExperimentResult res;
    res.dt = spec.threshold_dt();
    const std::size_t ne = error_terms(extinction_time(params), res.dt);
    const WaveParams wp = make_wave_params(g, spec.c2, res.dt, spec.solver_substeps);

    ScalarField d_curr = circle_distance(spec.center, spec.r0, g);
    ScalarField d_prev = d_curr;
    res.radii.push_back(spec.r0);
    while (res.radii.size() < ne) {
        const ScalarField u = solve(ScalarField::combine(2.0, d_curr, -1.0, d_prev), wp);
        const Interface gamma = extract_interface(u);
        if (gamma.empty()) {
            res.extinct_at = res.radii.size() + 1;
            break;
        }
        const double rbar = average_radius(gamma, spec.center, spec.averaging).radius;
        res.radii.push_back(rbar);
        ScalarField d_next = spec.mode == DistanceMode::ideal ? circle_distance(spec.center, rbar, g)
                                                              : signed_distance_field(gamma, u);
        d_prev = std::move(d_curr);
        d_curr = std::move(d_next);
    }
    res.l2_error = l2_radius_error(res.radii, params, res.dt);
    return res;
}

inline ExperimentResult run_ideal(ExperimentSpec spec) {
    spec.mode = DistanceMode::ideal;
    return run_experiment(spec);
}

inline ExperimentResult run_reconstructed(ExperimentSpec spec) {
    spec.mode = DistanceMode::reconstructed;
    return run_experiment(spec);
}

/// Error/order rows over a resolution sweep; order = log(e_prev/e)/log(N/N_prev).
/// Failures are rethrown with the offending resolution attached.
inline std::vector<ConvergenceRow> grid_convergence(ExperimentSpec base, std::span<const std::size_t> grids) {
    std::vector<ConvergenceRow> rows;
    for (std::size_t k = 0; k < grids.size(); ++k) {
        if (k > 0 && grids[k] <= grids[k - 1]) throw ConfigError("resolutions must be strictly ascending");
        base.grid_n = grids[k];
        ExperimentResult r;
        try {
            r = run_experiment(base);
        } catch (const ConfigError& e) {
            throw ConfigError("N=" + std::to_string(grids[k]) + ": " + e.what());
        } catch (const std::exception& e) {
            throw NumericalError("N=" + std::to_string(grids[k]) + ": " + e.what());
        }
        ConvergenceRow row{grids[k], r.l2_error, std::nullopt};
        if (!rows.empty() && row.error > 0.0)
            row.order = std::log(rows.back().error / row.error) /
                        std::log(static_cast<double>(grids[k]) / static_cast<double>(grids[k - 1]));
        rows.push_back(row);
    }
    return rows;
}

} // namespace hbmo
