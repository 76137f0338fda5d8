#pragma once

// Ground truth for a circle moving with normal acceleration equal to minus
// its curvature: r'' = -1/r, r(0) = r0, r'(0) = v0.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "hbmo/errors.hpp"

namespace hbmo {

/// Error function. Thin wrapper so every caller goes through one definition.
inline double special_erf(double x) { return std::erf(x); }

/// Inverse error function: rational first guess followed by Halley steps on
/// erf (erfc near the tails). Returns +-infinity at +-1 and NaN outside [-1, 1].
inline double special_erfinv(double y) {
    if (std::isnan(y) || y < -1.0 || y > 1.0) return std::numeric_limits<double>::quiet_NaN();
    if (y == 1.0) return std::numeric_limits<double>::infinity();
    if (y == -1.0) return -std::numeric_limits<double>::infinity();
    if (y == 0.0) return 0.0;
    const double sign = y < 0.0 ? -1.0 : 1.0;
    const double a = std::abs(y);
    // Giles' single-precision approximation as the starting point.
    double w = -std::log((1.0 - a) * (1.0 + a));
    double x;
    if (w < 5.0) {
        w -= 2.5;
        double p = 2.81022636e-08;
        p = 3.43273939e-07 + p * w;
        p = -3.5233877e-06 + p * w;
        p = -4.39150654e-06 + p * w;
        p = 0.00021858087 + p * w;
        p = -0.00125372503 + p * w;
        p = -0.00417768164 + p * w;
        p = 0.246640727 + p * w;
        p = 1.50140941 + p * w;
        x = p * a;
    } else {
        w = std::sqrt(w) - 3.0;
        double p = -0.000200214257;
        p = 0.000100950558 + p * w;
        p = 0.00134934322 + p * w;
        p = -0.00367342844 + p * w;
        p = 0.00573950773 + p * w;
        p = -0.0076224613 + p * w;
        p = 0.00943887047 + p * w;
        p = 1.00167406 + p * w;
        p = 2.83297682 + p * w;
        x = p * a;
    }
    const double tail = 1.0 - a;
    for (int it = 0; it < 8; ++it) {
        // residual of erf(x) = a, evaluated through erfc when a is close to 1
        const double r = a > 0.5 ? tail - std::erfc(x) : std::erf(x) - a;
        const double deriv = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        if (deriv == 0.0) break;
        const double step = r / deriv;
        const double dx = step / (1.0 + x * step);  // Halley: f''/f' = -2x
        x -= dx;
        if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return sign * x;
}

struct CircleParams {
    double r0 = 1.0;
    double v0 = 0.0;

    void validate() const {
        if (!(r0 > 0.0) || !std::isfinite(r0)) throw ConfigError("circle r0 must be positive");
        if (!std::isfinite(v0)) throw ConfigError("circle v0 must be finite");
    }
    /// First integral: r'^2 + 2 log r = C1.
    double c1() const { return 2.0 * std::log(r0) + v0 * v0; }
    /// Time shift of the closed form, chosen so that r(0) = r0 and r'(0) = v0.
    double c2() const {
        return -r0 * std::sqrt(std::numbers::pi / 2.0) * std::exp(0.5 * v0 * v0) * special_erf(v0 / std::numbers::sqrt2);
    }
};

inline double extinction_time(const CircleParams& p) {
    p.validate();
    return p.r0 * std::sqrt(std::numbers::pi / 2.0) * std::exp(0.5 * p.v0 * p.v0) *
           (1.0 + special_erf(p.v0 / std::numbers::sqrt2));
}

struct OracleRadius {
    double radius = 0.0;
    bool extinct = false;
};

/// Closed-form radius r(t) = exp(C1/2 - erfinv(sqrt(2/pi) e^{-C1/2} (t + C2))^2).
inline OracleRadius exact_radius(double t, const CircleParams& p) {
    p.validate();
    if (t < 0.0) throw ConfigError("exact_radius needs t >= 0");
    const double te = extinction_time(p);
    if (t >= te) return {0.0, true};
    const double c1 = p.c1();
    const double arg = std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * c1) * (t + p.c2());
    if (arg >= 1.0) return {0.0, true};
    const double e = special_erfinv(arg);
    return {std::exp(0.5 * c1 - e * e), false};
}

struct RecursionResult {
    double tau = 0.0;
    std::vector<double> radii;                 // r_0 .. r_N, zero after extinction
    std::optional<std::size_t> extinct_index;  // first zeroed entry
};

/// Idealized scheme on concentric circles, tau = t_e/N:
///   r_1 = r0 + v0*tau - tau^2/(2 r0),
///   r_n = R - tau^2/R with R = 2 r_{n-1} - r_{n-2}.
/// Once the virtual radius R drops to tau or below, the remaining entries are 0.
inline RecursionResult idealized_recursion(double r0, double v0, std::size_t n) {
    if (n < 2) throw ConfigError("idealized_recursion needs N >= 2");
    const CircleParams params{r0, v0};
    RecursionResult out;
    out.tau = extinction_time(params) / static_cast<double>(n);
    const double tau = out.tau;
    out.radii.assign(n + 1, 0.0);
    out.radii[0] = r0;
    const double r1 = r0 + v0 * tau - tau * tau / (2.0 * r0);
    if (!(r1 > 0.0)) {
        out.extinct_index = 1;
        return out;
    }
    out.radii[1] = r1;
    for (std::size_t k = 2; k <= n; ++k) {
        const double virtual_r = 2.0 * out.radii[k - 1] - out.radii[k - 2];
        if (!(virtual_r > tau)) {
            out.extinct_index = k;
            break;
        }
        out.radii[k] = virtual_r - tau * tau / virtual_r;
    }
    return out;
}

struct ConvergenceRow {
    std::size_t n = 0;
    double error = 0.0;
    std::optional<double> order;
};

/// Error of the idealized recursion at half the extinction time for
/// N = base_n * refinement^k, k < levels. The recursion is read the way a
/// one-based array r(1) = r_0 is read: the entry for "N/2" is r_{N/2 - 1},
/// the radius after N/2 - 1 steps. Orders are log(e_prev/e)/log(refinement).
inline std::vector<ConvergenceRow> convergence_table(double r0, double v0, std::size_t base_n, std::size_t levels,
                                                     std::size_t refinement = 4) {
    if (levels < 1) throw ConfigError("convergence_table needs at least one level");
    if (base_n < 4) throw ConfigError("convergence_table needs base N >= 4");
    if (refinement < 2) throw ConfigError("refinement factor must be at least 2");
    const CircleParams params{r0, v0};
    const double exact = exact_radius(0.5 * extinction_time(params), params).radius;
    std::vector<ConvergenceRow> rows;
    std::size_t n = base_n;
    for (std::size_t level = 0; level < levels; ++level) {
        const auto rec = idealized_recursion(r0, v0, n);
        ConvergenceRow row{n, std::abs(rec.radii[n / 2 - 1] - exact), std::nullopt};
        if (!rows.empty() && row.error > 0.0)
            row.order = std::log(rows.back().error / row.error) / std::log(static_cast<double>(refinement));
        rows.push_back(row);
        n *= refinement;
    }
    return rows;
}

inline void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& os, const char* error_name = "error") {
    const auto old_flags = os.flags();
    const auto old_prec = os.precision();
    os << "# schema: hbmo-convergence/1\n";
    os << "N," << error_name << ",order\n";
    os.setf(std::ios::fixed);
    for (const auto& r : rows) {
        os.precision(9);
        os << r.n << ',' << r.error << ',';
        if (r.order) {
            os.precision(6);
            os << *r.order;
        }
        os << '\n';
    }
    os.flags(old_flags);
    os.precision(old_prec);
}

namespace detail {

inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa, double b, double fb,
                                   double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double whole = detail::simpson(a, fa, b, fb, fm);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

struct PointMassResult {
    double approx = 0.0;
    double exact = 0.0;
};

/// Point mass with x'' = -kappa(t), x(0) = 0, x'(0) = v0. The approximation
/// accumulates the per-step displacements
///   delta_1 = v0*tau - kappa(0)*tau^2/2,   delta_k = delta_{k-1} - kappa((k-1)tau)*tau^2;
/// the exact value is v0*T - int_0^T int_0^s kappa, by iterated adaptive Simpson.
inline PointMassResult pointmass_check(const std::function<double(double)>& kappa, double v0, double horizon,
                                       std::size_t n) {
    if (n < 1) throw ConfigError("pointmass_check needs N >= 1");
    if (!(horizon > 0.0)) throw ConfigError("pointmass_check needs T > 0");
    const double tau = horizon / static_cast<double>(n);
    double delta = v0 * tau - 0.5 * kappa(0.0) * tau * tau;
    double x = delta;
    for (std::size_t k = 2; k <= n; ++k) {
        delta -= kappa(static_cast<double>(k - 1) * tau) * tau * tau;
        x += delta;
    }
    const auto inner = [&](double s) { return adaptive_simpson(kappa, 0.0, s, 1e-12); };
    const double exact = v0 * horizon - adaptive_simpson(inner, 0.0, horizon, 1e-10);
    return {x, exact};
}

} // namespace hbmo
