#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hbmo/signed_distance.hpp"
#include "hbmo/wave_solver.hpp"

using namespace hbmo;

namespace {

double max_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// Max error of the discrete cos(pi x)cos(pi y) standing wave against the
// continuum solution at t = 0.25, with dt tied to h.
double eigenmode_error(std::size_t n) {
    const Grid2D g = make_grid(n, 1.0);
    const double pi = std::numbers::pi;
    const ScalarField u0 = ScalarField::sample(g, [&](Point x) { return std::cos(pi * x.x) * std::cos(pi * x.y); });
    const double t = 0.25;
    const auto steps = static_cast<std::size_t>(4 * (n - 1));
    const WaveParams wp{1.0, t / static_cast<double>(steps), t, 0.9};
    const ScalarField u = solve(u0, wp);
    const double c = std::cos(pi * std::sqrt(2.0) * t);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) err = std::max(err, std::abs(u[k] - c * u0[k]));
    return err;
}

} // namespace

TEST(WaveParams, RejectsCflViolation) {
    const Grid2D g = make_grid(16, 1.0);
    const WaveParams bad{1.0, 0.1, 1.0, 0.9};
    EXPECT_THROW(bad.validate(g), ConfigError);
    try {
        bad.validate(g);
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("maximal admissible dt"), std::string::npos);
    }
}

TEST(WaveParams, RejectsNonIntegerDuration) {
    const Grid2D g = make_grid(16, 1.0);
    EXPECT_THROW((WaveParams{1.0, 0.003, 0.01, 0.9}.validate(g)), ConfigError);
    EXPECT_THROW((WaveParams{-1.0, 0.001, 0.01, 0.9}.validate(g)), ConfigError);
}

TEST(WaveParams, MakeRefinesSubstepsUntilStable) {
    const Grid2D g = make_grid(257, 1.0);
    const WaveParams wp = make_wave_params(g, 2.0, 0.05, 8);
    EXPECT_LE(wp.courant(g), 0.9);
    EXPECT_GT(wp.steps(), 8u);
    const WaveParams easy = make_wave_params(g, 2.0, 1e-4, 64);
    EXPECT_EQ(easy.steps(), 64u);
    EXPECT_THROW(make_wave_params(g, 2.0, 0.05, 0), ConfigError);
}

TEST(FirstLeap, TaylorStartOnLinearProfile) {
    // u0 = y, v0 = -1: interior nodes move to y + dt exactly.
    const Grid2D g = make_grid(9, 1.0);
    const ScalarField u0 = ScalarField::sample(g, [](Point x) { return x.y; });
    const ScalarField v0(g, -1.0);
    const WaveParams wp{1.0, 0.01, 0.01, 0.9};
    const WaveState s = first_leap(u0, v0, wp);
    EXPECT_DOUBLE_EQ(s.t, 0.01);
    for (std::size_t j = 1; j + 1 < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) EXPECT_NEAR(s.u_curr(i, j), g.node(i, j).y + 0.01, 1e-15);
}

TEST(Solve, ConstantsAreStationary) {
    const Grid2D g = make_grid(17, 1.0);
    const ScalarField u0(g, -0.25);
    const ScalarField u = solve(u0, make_wave_params(g, 2.0, 0.1, 64));
    EXPECT_EQ(max_diff(u, u0), 0.0);
}

TEST(Solve, PlaneUntouchedOutsideWallDependence) {
    // A plane is harmonic, so only nodes within reach of the walls can move.
    const Grid2D g = make_grid(65, 1.0);
    const ScalarField u0 = ScalarField::sample(g, [](Point x) { return 0.3 * x.x - 0.7 * x.y + 0.1; });
    const WaveParams wp = make_wave_params(g, 2.0, 0.05, 16);
    const ScalarField u = solve(u0, wp);
    const std::size_t reach = wp.steps() + 1;
    for (std::size_t j = reach; j + reach < g.ny; ++j)
        for (std::size_t i = reach; i + reach < g.nx; ++i) EXPECT_NEAR(u(i, j), u0(i, j), 1e-14);
}

TEST(Solve, EigenmodeConvergesSecondOrder) {
    const double e1 = eigenmode_error(17);
    const double e2 = eigenmode_error(33);
    const double e3 = eigenmode_error(65);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
    EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.1);
}

TEST(Solve, DiscreteEnergyIsConserved) {
    const Grid2D g = make_grid(33, 1.0);
    const ScalarField u0 = ScalarField::sample(g, [](Point x) { return std::exp(-40.0 * ((x.x - 0.4) * (x.x - 0.4) + (x.y - 0.6) * (x.y - 0.6))); });
    const ScalarField v0 = ScalarField::sample(g, [](Point x) { return std::sin(3.0 * x.x) * x.y; });
    const WaveParams wp = make_wave_params(g, 2.0, 0.5, 200);
    WaveState s = first_leap(u0, v0, wp);
    const double e0 = discrete_energy(s, wp);
    double drift = 0.0;
    for (int n = 0; n < 199; ++n) {
        s = leapfrog_step(s, wp);
        drift = std::max(drift, std::abs(discrete_energy(s, wp) - e0));
    }
    EXPECT_LE(drift, 1e-12 * e0);
}

TEST(Solve, TimeReversalRecoversInitialData) {
    const Grid2D g = make_grid(33, 1.0);
    const ScalarField u0 = ScalarField::sample(g, [](Point x) { return std::cos(5.0 * x.x) * std::sin(2.0 * x.y) + x.x * x.y; });
    const WaveParams wp = make_wave_params(g, 1.0, 0.3, 100);
    WaveState s = first_leap(u0, ScalarField(g, 0.5), wp);
    const std::size_t n = wp.steps();
    for (std::size_t k = 1; k < n; ++k) s = leapfrog_step(s, wp);
    WaveState back{s.u_curr, s.u_prev, 0.0};
    for (std::size_t k = 1; k < n; ++k) back = leapfrog_step(back, wp);
    EXPECT_LE(max_diff(back.u_curr, u0), 1e-12);
}

TEST(Solve, StepLoopMatchesSingleSteps) {
    const Grid2D g = make_grid(17, 1.0);
    const ScalarField u0 = ScalarField::sample(g, [](Point x) { return x.x * x.x - x.y; });
    const ScalarField v0(g, 0.2);
    const WaveParams wp = make_wave_params(g, 2.0, 0.02, 10);
    WaveState s = first_leap(u0, v0, wp);
    for (std::size_t k = 1; k < wp.steps(); ++k) s = leapfrog_step(s, wp);
    EXPECT_EQ(max_diff(s.u_curr, solve(u0, v0, wp)), 0.0);
}

TEST(PoissonReference, ReducesToInitialData) {
    const LocalExpansion e{2.0, 0.5, 0.3, -0.2, 2.0};
    const Point x{0.1, -0.05};
    const double d = x.y + 0.5 * e.kappa * x.x * x.x + e.kappa_x1 * x.x * x.x * x.x / 6.0 -
                     0.5 * e.kappa * e.kappa * x.y * x.x * x.x;
    EXPECT_DOUBLE_EQ(poisson_reference(e, 0.0, x), d);
    EXPECT_DOUBLE_EQ(poisson_reference(LocalExpansion{}, 0.7, {0.2, 0.3}), 0.3);
    EXPECT_DOUBLE_EQ(poisson_reference(LocalExpansion{0, 0, 1.0, 0, 1.0}, 0.5, {0.0, 0.0}), -0.5);
}

TEST(PoissonReference, SolvesTheWaveEquation) {
    // Cubic in (t, x), so centred second differences are exact up to round-off.
    const LocalExpansion e{3.0, -1.5, 0.4, 0.7, 2.0};
    const double s = 1e-3;
    for (double t : {0.0, 0.05, 0.1})
        for (Point x : {Point{0.0, 0.0}, Point{0.05, -0.02}, Point{-0.1, 0.03}}) {
            const auto u = [&](double tt, Point xx) { return poisson_reference(e, tt, xx); };
            const double utt = (u(t + s, x) - 2.0 * u(t, x) + u(t - s, x)) / (s * s);
            const double lap = (u(t, {x.x + s, x.y}) - 2.0 * u(t, x) + u(t, {x.x - s, x.y})) / (s * s) +
                               (u(t, {x.x, x.y + s}) - 2.0 * u(t, x) + u(t, {x.x, x.y - s})) / (s * s);
            EXPECT_NEAR(utt, e.c2 * lap, 1e-5);
            const double ut = (u(t + s, x) - u(t - s, x)) / (2.0 * s);
            if (t == 0.0) {
                EXPECT_NEAR(ut, -(e.v0 + e.dv0_dx1 * x.x), 1e-9);
            }
        }
}

TEST(Solve, CircleFrontRecedesByCurvatureTerm) {
    // Zero initial velocity on r - |x - c|: the zero set sits at r - c2 t^2 / (2r).
    const Grid2D g = make_grid(257, 1.0);
    const double r = 0.3, t = 0.02, c2 = 1.0;
    const ScalarField d = circle_distance({0.5, 0.5}, r, g);
    const ScalarField u = solve(d, make_wave_params(g, c2, t, 64));
    const double rbar = average_radius(extract_interface(u), {0.5, 0.5}).radius;
    EXPECT_NEAR(rbar, r - c2 * t * t / (2.0 * r), 2e-5);
}
