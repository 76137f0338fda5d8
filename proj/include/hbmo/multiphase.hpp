#pragma once

// N-phase stepping: phases are labelled by the vertices of a regular simplex,
// the unknown is a vector field with N-1 channels, and the partition is
// recovered nodewise by the largest projection onto the simplex vectors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/hbmo_core.hpp"
#include "hbmo/signed_distance.hpp"
#include "hbmo/wave_solver.hpp"

namespace hbmo {

/// N unit vectors in R^{N-1} with pairwise dot -1/(N-1).
struct SimplexBasis {
    std::size_t phases = 0;
    std::vector<std::vector<double>> p;  // p[i] has phases-1 entries

    std::size_t dim() const { return phases - 1; }
    std::span<const double> vec(std::size_t i) const { return p[i]; }
};

/// p_1 = e_1 and p_i = (-1/(N-1), sqrt(1 - 1/(N-1)^2) q_{i-1}) for i > 1,
/// where q are the N-1 vectors of the next smaller simplex.
inline SimplexBasis simplex_vectors(std::size_t n) {
    if (n < 2) throw ConfigError("simplex_vectors needs at least 2 phases");
    SimplexBasis b;
    b.phases = n;
    if (n == 2) {
        b.p = {{1.0}, {-1.0}};
        return b;
    }
    const SimplexBasis q = simplex_vectors(n - 1);
    const double off = -1.0 / static_cast<double>(n - 1);
    const double s = std::sqrt(1.0 - off * off);
    b.p.assign(n, std::vector<double>(n - 1, 0.0));
    b.p[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        b.p[i][0] = off;
        for (std::size_t c = 0; c < n - 2; ++c) b.p[i][c + 1] = s * q.p[i - 1][c];
    }
    return b;
}

/// A labelled partition of the nodes with, per phase, its boundary and the
/// signed distance to it (positive on the phase's own nodes).
struct PhaseSet {
    Grid2D grid{};
    std::vector<std::uint32_t> labels;  // one phase index per node
    std::vector<Interface> boundaries;
    std::vector<ScalarField> distances;

    std::size_t phases() const { return distances.size(); }

    std::size_t count(std::size_t phase) const {
        std::size_t c = 0;
        for (auto l : labels) c += l == phase;
        return c;
    }
    bool present(std::size_t phase) const {
        for (auto l : labels)
            if (l == phase) return true;
        return false;
    }
};

namespace detail {

/// Index of the largest score at `node`; the lowest index wins ties.
inline std::uint32_t argmax_phase(std::span<const ScalarField> scores, std::size_t node) {
    std::uint32_t best = 0;
    double top = scores[0][node];
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i][node] > top) {
            top = scores[i][node];
            best = static_cast<std::uint32_t>(i);
        }
    return best;
}

inline double domain_diagonal(const Grid2D& g) { return std::hypot(g.length_x(), g.length_y()); }

} // namespace detail

/// Nodewise argmax labels of the given per-phase scores.
inline std::vector<std::uint32_t> label_nodes(std::span<const ScalarField> scores) {
    if (scores.size() < 2) throw ConfigError("a partition needs at least 2 phases");
    for (const auto& s : scores) ScalarField::require_same_grid(s, scores[0]);
    std::vector<std::uint32_t> labels(scores[0].size());
    parallel_for(labels.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) labels[k] = detail::argmax_phase(scores, k);
    });
    return labels;
}

/// Partition from per-phase scores. Phase i's boundary is the zero set of
/// s_i - max_{k != i} s_k, so that two phases share the same curve; distances
/// are exact and signed by label. A phase with no boundary gets a constant
/// distance of +-(domain diagonal).
inline PhaseSet partition(std::span<const ScalarField> scores) {
    PhaseSet out;
    out.labels = label_nodes(scores);
    const Grid2D& g = scores[0].grid();
    out.grid = g;
    const std::size_t n = scores.size();
    const double diag = detail::domain_diagonal(g);
    ScalarField sign(g);
    ScalarField gap(g);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            double other = -std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < n; ++m)
                if (m != i) other = std::max(other, scores[m][k]);
            gap[k] = scores[i][k] - other;
            sign[k] = out.labels[k] == i ? 1.0 : -1.0;
        }
        Interface boundary = extract_interface(gap);
        if (boundary.empty()) {
            out.distances.emplace_back(g, out.labels[0] == i ? diag : -diag);
        } else {
            out.distances.push_back(signed_distance_field(boundary, sign));
        }
        out.boundaries.push_back(std::move(boundary));
    }
    return out;
}

/// Per-phase projections u . p_i.
inline std::vector<ScalarField> projections(const VectorField& u, const SimplexBasis& basis) {
    if (u.channels() != basis.dim()) throw ConfigError("field channel count does not match the simplex dimension");
    std::vector<ScalarField> s(basis.phases, ScalarField(u.grid()));
    for (std::size_t i = 0; i < basis.phases; ++i)
        for (std::size_t k = 0; k < u.grid().size(); ++k) s[i][k] = u.project(k, basis.vec(i));
    return s;
}

/// Argmax thresholding of a vector field.
inline PhaseSet threshold(const VectorField& u, const SimplexBasis& basis) {
    const auto s = projections(u, basis);
    return partition(s);
}

/// Simplex field with a linear profile of width eps across each boundary:
/// z = sum_i p_i w(d_i), w = 1 above eps/2, (eps/2 + d)/eps inside the band,
/// 0 below -eps/2. For two phases the channel equals clamp(2 d_1/eps, -1, 1).
inline VectorField build_z_field(const PhaseSet& phases, const SimplexBasis& basis, double eps) {
    const Grid2D& g = phases.grid;
    if (!(eps > 2.0 * g.h())) {
        throw ConfigError("interpolation width eps=" + std::to_string(eps) + " must exceed 2h=" + std::to_string(2.0 * g.h()));
    }
    if (phases.phases() != basis.phases) throw ConfigError("phase count does not match the simplex basis");
    VectorField z(g, basis.dim());
    const double half = 0.5 * eps;
    for (std::size_t i = 0; i < basis.phases; ++i) {
        const ScalarField& d = phases.distances[i];
        const auto p = basis.vec(i);
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double dk = d[k];
            const double w = dk > half ? 1.0 : (dk < -half ? 0.0 : (half + dk) / eps);
            if (w == 0.0) continue;
            for (std::size_t c = 0; c < basis.dim(); ++c) z.channel(c)[k] += w * p[c];
        }
    }
    return z;
}

/// Default interpolation width: six cells.
inline double default_eps(const Grid2D& g) { return 6.0 * g.h(); }

struct MultiphaseParams {
    double eps = 0.0;  // 0 selects default_eps
    SolverParams solver;

    double resolved_eps(const Grid2D& g) const { return eps > 0.0 ? eps : default_eps(g); }
};

struct MultiphaseState {
    SimplexBasis basis;
    PhaseSet phases;
    VectorField z_curr;
    VectorField z_prev;
    double threshold_dt = 0.0;
    std::size_t step_index = 0;

    double time() const { return threshold_dt * static_cast<double>(step_index); }
};

/// State at rest: z_{-dt} = z_0.
inline MultiphaseState init_multiphase(std::span<const ScalarField> scores, double tau, const MultiphaseParams& params) {
    if (!(tau > 0.0)) throw ConfigError("threshold_dt must be positive");
    MultiphaseState s;
    s.basis = simplex_vectors(scores.size());
    s.phases = partition(scores);
    s.z_curr = build_z_field(s.phases, s.basis, params.resolved_eps(s.phases.grid));
    s.z_prev = s.z_curr;
    s.threshold_dt = tau;
    return s;
}

/// Each channel evolves under its own scalar wave equation.
inline VectorField solve_channels(const VectorField& u0, const WaveParams& wp) {
    std::vector<ScalarField> out;
    out.reserve(u0.channels());
    for (std::size_t c = 0; c < u0.channels(); ++c) out.push_back(solve(u0.channel(c), wp));
    return VectorField(std::move(out));
}

/// Wave solve from 2 z_n - z_{n-1} at rest over one threshold step.
inline VectorField multiphase_wave(const MultiphaseState& state, const MultiphaseParams& params) {
    const Grid2D& g = state.z_curr.grid();
    const WaveParams wp = make_wave_params(g, params.solver.c2, state.threshold_dt, params.solver.substeps,
                                           params.solver.cfl_safety);
    return solve_channels(VectorField::combine(2.0, state.z_curr, -1.0, state.z_prev), wp);
}

/// Advances from a thresholded partition: rebuilds z and shifts the history.
inline MultiphaseState advance_with(const MultiphaseState& state, PhaseSet next, const MultiphaseParams& params) {
    MultiphaseState out;
    out.basis = state.basis;
    out.z_curr = build_z_field(next, state.basis, params.resolved_eps(next.grid));
    out.z_prev = state.z_curr;
    out.phases = std::move(next);
    out.threshold_dt = state.threshold_dt;
    out.step_index = state.step_index + 1;
    return out;
}

/// One N-phase threshold step. A phase may vanish; that shows up as an
/// absent label, not as an error.
inline MultiphaseState multiphase_step(const MultiphaseState& state, const MultiphaseParams& params) {
    const VectorField u = multiphase_wave(state, params);
    return advance_with(state, threshold(u, state.basis), params);
}

/// Nodal labels, one grid row per line, bottom row first.
inline void write_phase_csv(const PhaseSet& phases, double time, std::ostream& os) {
    const Grid2D& g = phases.grid;
    const auto old_prec = os.precision(17);
    os << "# schema: hbmo-phases/1\n";
    os << "# t=" << time << " nx=" << g.nx << " ny=" << g.ny << '\n';
    os.precision(old_prec);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (i) os << ',';
            os << phases.labels[g.index(i, j)];
        }
        os << '\n';
    }
}

} // namespace hbmo
