#pragma once

// Volume-constrained N-phase stepping. The production path shifts each
// phase's projected score until its measure hits the target; a literal
// gradient descent on the penalized wave functional is kept as a cross-check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hbmo/errors.hpp"
#include "hbmo/grid.hpp"
#include "hbmo/multiphase.hpp"

namespace hbmo {

struct VolumeTargets {
    std::vector<double> area;  // one per phase
    double penalty_eps = 1e-3; // weight 1/eps of the squared volume mismatch
    double tol = 1e-4;         // absolute, area units

    void validate(const Grid2D& g) const {
        std::ostringstream msg;
        const double domain = g.length_x() * g.length_y();
        double sum = 0.0;
        for (std::size_t i = 0; i < area.size(); ++i) {
            if (!(area[i] > 0.0)) msg << "volume target " << i << " must be positive; ";
            sum += area[i];
        }
        if (area.size() < 2) msg << "need at least 2 volume targets; ";
        if (!(tol > 0.0)) msg << "volume tolerance must be positive; ";
        if (!(penalty_eps > 0.0)) msg << "penalty eps must be positive; ";
        if (std::abs(sum - domain) > tol * static_cast<double>(area.size()))
            msg << "volume targets sum to " << sum << " but the domain area is " << domain << "; ";
        if (!msg.str().empty()) throw ConfigError(msg.str());
    }
};

/// Trapezoid-weighted measure of each phase; the measures sum to the domain area.
inline std::vector<double> phase_measures(std::span<const std::uint32_t> labels, const Grid2D& g, std::size_t phases) {
    std::vector<double> m(phases, 0.0);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) m[labels[g.index(i, j)]] += quadrature_weight(g, i, j);
    return m;
}

inline std::vector<double> phase_measures(const PhaseSet& ps) { return phase_measures(ps.labels, ps.grid, ps.phases()); }

/// Targets equal to the measures of an existing partition.
inline VolumeTargets targets_from(const PhaseSet& ps, double tol, double penalty_eps = 1e-3) {
    return VolumeTargets{phase_measures(ps), penalty_eps, tol};
}

namespace detail {

/// 1/2 sum over grid edges of the squared difference quotient, weighted so that
/// its gradient is -w * Lap_neumann (w = trapezoid weights).
inline double edge_energy(const ScalarField& f) {
    const Grid2D& g = f.grid();
    double e = 0.0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        const double wy = (j == 0 || j + 1 == g.ny) ? 0.5 : 1.0;
        for (std::size_t i = 0; i + 1 < g.nx; ++i) {
            const double d = f(i + 1, j) - f(i, j);
            e += wy * g.hy / g.hx * d * d;
        }
    }
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double wx = (i == 0 || i + 1 == g.nx) ? 0.5 : 1.0;
        for (std::size_t j = 0; j + 1 < g.ny; ++j) {
            const double d = f(i, j + 1) - f(i, j);
            e += wx * g.hx / g.hy * d * d;
        }
    }
    return 0.5 * e;
}

inline std::vector<double> shifted_measures(const std::vector<ScalarField>& scores, std::span<const double> shift,
                                            const Grid2D& g) {
    std::vector<ScalarField> s = scores;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (shift[i] != 0.0)
            for (auto& v : s[i].values()) v += shift[i];
    return phase_measures(label_nodes(s), g, s.size());
}

} // namespace detail

/// Discrete wave functional
///   sum_w |u - 2 u1 + u2|^2 / (2 h^2) + (1/2) |grad u|^2 + (1/eps) sum_i (A_i - meas_i(u))^2
/// with trapezoid weights and the edge form of the gradient term.
inline double functional_value(const VectorField& u, const VectorField& u_nm1, const VectorField& u_nm2, double h,
                               const VolumeTargets& targets, const SimplexBasis& basis) {
    if (!(h > 0.0)) throw ConfigError("functional step h must be positive");
    const Grid2D& g = u.grid();
    double kinetic = 0.0;
    double grad = 0.0;
    for (std::size_t c = 0; c < u.channels(); ++c) {
        const ScalarField& a = u.channel(c);
        const ScalarField& b = u_nm1.channel(c);
        const ScalarField& d = u_nm2.channel(c);
        ScalarField::require_same_grid(a, b);
        ScalarField::require_same_grid(a, d);
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t i = 0; i < g.nx; ++i) {
                const double acc = a(i, j) - 2.0 * b(i, j) + d(i, j);
                kinetic += quadrature_weight(g, i, j) * acc * acc;
            }
        grad += detail::edge_energy(a);
    }
    double penalty = 0.0;
    const auto m = phase_measures(label_nodes(projections(u, basis)), g, basis.phases);
    for (std::size_t i = 0; i < basis.phases; ++i) penalty += (targets.area[i] - m[i]) * (targets.area[i] - m[i]);
    return kinetic / (2.0 * h * h) + grad + penalty / targets.penalty_eps;
}

struct VolumeParams {
    std::size_t max_sweeps = 50;
    std::size_t bisection_iters = 60;
    double bracket = 0.0;  // initial |lambda| bound; 0 selects the interpolation width
};

struct ConstrainedOutcome {
    MultiphaseState state;
    std::vector<double> lambda;    // score shifts, one per phase
    std::vector<double> residual;  // meas_i - A_i after the step
    std::size_t sweeps = 0;
};

/// Score shifts lambda_i such that argmax_i (u.p_i + lambda_i) has the target
/// measures. Gauss-Seidel sweeps over phases, bisection per phase. Returns the
/// shifts and the number of sweeps used.
inline std::pair<std::vector<double>, std::size_t> volume_shifts(const std::vector<ScalarField>& scores,
                                                                 const VolumeTargets& targets, double bracket,
                                                                 const VolumeParams& vp) {
    const std::size_t n = scores.size();
    const Grid2D& g = scores[0].grid();
    std::vector<double> lambda(n, 0.0);
    auto residuals = [&] {
        const auto m = detail::shifted_measures(scores, lambda, g);
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = m[i] - targets.area[i];
        return r;
    };
    auto worst = [](const std::vector<double>& r) {
        std::size_t k = 0;
        for (std::size_t i = 1; i < r.size(); ++i)
            if (std::abs(r[i]) > std::abs(r[k])) k = i;
        return k;
    };
    std::vector<double> r = residuals();
    std::size_t sweep = 0;
    while (std::abs(r[worst(r)]) > targets.tol) {
        if (sweep == vp.max_sweeps) {
            const std::size_t k = worst(r);
            std::ostringstream msg;
            msg << "volume correction did not converge in " << vp.max_sweeps << " sweeps; phase " << k
                << " is off by " << r[k];
            throw NumericalError(msg.str());
        }
        ++sweep;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(r[i]) <= 0.5 * targets.tol) continue;
            // meas_i is nondecreasing in lambda_i
            auto measure_at = [&](double l) {
                const double keep = lambda[i];
                lambda[i] = l;
                const double m = detail::shifted_measures(scores, lambda, g)[i];
                lambda[i] = keep;
                return m - targets.area[i];
            };
            double lo = lambda[i] - bracket;
            double hi = lambda[i] + bracket;
            double flo = measure_at(lo);
            double fhi = measure_at(hi);
            for (int widen = 0; widen < 4 && (flo > 0.0 || fhi < 0.0); ++widen) {
                const double w = hi - lo;
                if (flo > 0.0) flo = measure_at(lo -= w);
                if (fhi < 0.0) fhi = measure_at(hi += w);
            }
            double best = lambda[i];
            double best_r = r[i];
            for (std::size_t it = 0; it < vp.bisection_iters; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = measure_at(mid);
                if (std::abs(fm) < std::abs(best_r)) {
                    best = mid;
                    best_r = fm;
                }
                if (std::abs(fm) <= 0.5 * targets.tol) break;
                (fm < 0.0 ? lo : hi) = mid;
            }
            lambda[i] = best;
        }
        r = residuals();
    }
    return {lambda, sweep};
}

/// Equivalent vector shift of the field: w = sum_i mu_i p_i with
/// mu = ((N-1)/N)(lambda - mean lambda) satisfies w.p_k = lambda_k - mean lambda.
inline std::vector<double> shift_coefficients(std::span<const double> lambda) {
    const auto n = static_cast<double>(lambda.size());
    double mean = 0.0;
    for (double l : lambda) mean += l;
    mean /= n;
    std::vector<double> mu(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) mu[i] = (n - 1.0) / n * (lambda[i] - mean);
    return mu;
}

/// One volume-preserving threshold step: unconstrained wave solve, then
/// per-phase score shifts chosen so that every phase keeps its target measure.
inline ConstrainedOutcome constrained_step(const MultiphaseState& state, const VolumeTargets& targets,
                                           const MultiphaseParams& params, const VolumeParams& vp = {}) {
    const Grid2D& g = state.z_curr.grid();
    if (targets.area.size() != state.basis.phases) throw ConfigError("one volume target per phase is required");
    targets.validate(g);
    const VectorField u = multiphase_wave(state, params);
    std::vector<ScalarField> scores = projections(u, state.basis);
    const double bracket = vp.bracket > 0.0 ? vp.bracket : params.resolved_eps(g);
    auto [lambda, sweeps] = volume_shifts(scores, targets, bracket, vp);
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (lambda[i] != 0.0)
            for (auto& v : scores[i].values()) v += lambda[i];
    PhaseSet next = partition(scores);
    const auto m = phase_measures(next);
    std::vector<double> res(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) res[i] = m[i] - targets.area[i];
    return {advance_with(state, std::move(next), params), std::move(lambda), std::move(res), sweeps};
}

struct DescentParams {
    std::size_t steps = 1000;
    double rate = 0.0;          // 0 selects 0.9 times the stability bound of the quadratic part
    double penalty_rate = 0.0;  // step along the penalty gradient; 0 disables it
    double fd_shift = 0.0;      // finite-difference score shift; 0 selects boundary_score_step(u_init)
    std::size_t backtracks = 8; // step halvings tried before the descent counts as stalled
};

namespace detail {

/// s_i - max_{k != i} s_k at every node for phase i.
inline ScalarField score_gap(const std::vector<ScalarField>& s, std::size_t i) {
    ScalarField gap(s[i].grid());
    for (std::size_t k = 0; k < gap.size(); ++k) {
        double other = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < s.size(); ++m)
            if (m != i) other = std::max(other, s[m][k]);
        gap[k] = s[i][k] - other;
    }
    return gap;
}

} // namespace detail

/// Typical score change across one cell at the phase boundaries: twice the
/// mean |own-score gap| over nodes that have a differently labelled neighbour.
inline double boundary_score_step(const VectorField& u, const SimplexBasis& basis) {
    const Grid2D& g = u.grid();
    const auto s = projections(u, basis);
    const auto labels = label_nodes(s);
    std::vector<ScalarField> gaps;
    for (std::size_t i = 0; i < basis.phases; ++i) gaps.push_back(detail::score_gap(s, i));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const std::size_t k = g.index(i, j);
            const bool edge = (i > 0 && labels[k - 1] != labels[k]) || (i + 1 < g.nx && labels[k + 1] != labels[k]) ||
                              (j > 0 && labels[k - g.nx] != labels[k]) || (j + 1 < g.ny && labels[k + g.nx] != labels[k]);
            if (!edge) continue;
            sum += std::abs(gaps[labels[k]][k]);
            ++count;
        }
    return count ? 2.0 * sum / static_cast<double>(count) : g.h();
}

/// Gradient descent on functional_value, started at u_init. The quadratic
/// part uses its exact (weight-preconditioned) gradient. The volume penalty
/// is piecewise constant in u; its gradient is replaced by central
/// differences of the measures under nodal score shifts of +-fd along each
/// p_i, which is nonzero only at nodes within fd of changing phase. A step
/// that raises the functional is halved up to `backtracks` times; if even the
/// shortest step raises it the descent has stalled and the current iterate is
/// returned. With backtracks = 0 every step is taken, and five consecutive
/// increases raise NumericalError.
inline VectorField functional_descent(const VectorField& u_init, const VectorField& u_nm1, const VectorField& u_nm2,
                                      double h, const VolumeTargets& targets, const SimplexBasis& basis,
                                      const DescentParams& dp) {
    if (!(h > 0.0)) throw ConfigError("functional step h must be positive");
    const Grid2D& g = u_init.grid();
    const double stiff = 1.0 / (h * h) + 4.0 / (g.hx * g.hx) + 4.0 / (g.hy * g.hy);
    const double rate = dp.rate > 0.0 ? dp.rate : 0.9 * 2.0 / stiff;
    if (rate * stiff > 2.0) throw ConfigError("descent rate exceeds the stability bound of the quadratic part");
    const double fd = dp.penalty_rate > 0.0 ? (dp.fd_shift > 0.0 ? dp.fd_shift : boundary_score_step(u_init, basis)) : 0.0;
    const auto nphase = static_cast<double>(basis.phases);
    // a shift of t along p_i raises s_i - s_m by t * N/(N-1)
    const double reach = fd * nphase / (nphase - 1.0);

    VectorField u = u_init;
    double f_prev = functional_value(u, u_nm1, u_nm2, h, targets, basis);
    std::size_t increases = 0;
    for (std::size_t it = 0; it < dp.steps; ++it) {
        std::vector<ScalarField> step;
        step.reserve(u.channels());
        for (std::size_t c = 0; c < u.channels(); ++c) {
            const ScalarField& a = u.channel(c);
            const ScalarField lap = laplacian_neumann(a);
            ScalarField d(g);
            for (std::size_t k = 0; k < g.size(); ++k)
                d[k] = rate * ((a[k] - 2.0 * u_nm1.channel(c)[k] + u_nm2.channel(c)[k]) / (h * h) - lap[k]);
            step.push_back(std::move(d));
        }
        if (dp.penalty_rate > 0.0) {
            const auto s = projections(u, basis);
            const auto m = phase_measures(label_nodes(s), g, basis.phases);
            for (std::size_t i = 0; i < basis.phases; ++i) {
                const double coef = -2.0 / targets.penalty_eps * (targets.area[i] - m[i]) / (2.0 * fd);
                if (coef == 0.0) continue;
                const ScalarField gap = detail::score_gap(s, i);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (std::abs(gap[k]) >= reach) continue;
                    for (std::size_t c = 0; c < u.channels(); ++c) step[c][k] += dp.penalty_rate * coef * basis.p[i][c];
                }
            }
        }
        auto trial = [&](double alpha) {
            std::vector<ScalarField> next;
            next.reserve(u.channels());
            for (std::size_t c = 0; c < u.channels(); ++c) next.push_back(ScalarField::combine(1.0, u.channel(c), -alpha, step[c]));
            return VectorField(std::move(next));
        };
        // round-off level changes near the minimum do not count as increases
        const double slack = 1e-12 * std::max(1.0, std::abs(f_prev));
        double alpha = 1.0;
        VectorField cand = trial(alpha);
        double f = functional_value(cand, u_nm1, u_nm2, h, targets, basis);
        for (std::size_t b = 0; b < dp.backtracks && f > f_prev + slack; ++b) {
            alpha *= 0.5;
            cand = trial(alpha);
            f = functional_value(cand, u_nm1, u_nm2, h, targets, basis);
        }
        if (dp.backtracks > 0 && f > f_prev + slack) break;  // stalled: no shorter step helps
        u = std::move(cand);
        increases = f > f_prev + slack ? increases + 1 : 0;
        if (increases >= 5) throw NumericalError("functional descent diverged: 5 consecutive increases");
        f_prev = f;
    }
    return u;
}

} // namespace hbmo
