#include <cmath>
#include <numbers>
#include <utility>

#include <gtest/gtest.h>

#include "hbmo/circle_oracle.hpp"
#include "hbmo/hbmo_core.hpp"
#include "hbmo/log.hpp"

using namespace hbmo;

namespace {

const Point kCenter{0.5, 0.5};

// Mutes wall-proximity warnings for the lifetime of the object.
struct QuietWarnings {
    std::function<void(const std::string&)> saved = std::exchange(warning_sink(), nullptr);
    ~QuietWarnings() { warning_sink() = std::move(saved); }
};

double mean_radius(const Interface& iface) { return average_radius(iface, kCenter).radius; }

} // namespace

TEST(FirstStep, MatchesTaylorRadius) {
    const Grid2D g = make_grid(257, 1.0);
    const double r0 = 0.3;
    const double tau = extinction_time({r0, 0.0}) / 128.0;
    const ScalarField d = circle_distance(kCenter, r0, g);
    const Interface gamma = extract_interface(d);
    for (double v0 : {-0.5, 0.0, 0.5}) {
        const std::vector<double> v(gamma.size(), v0);
        const StepOutcome out = first_step(gamma, d, v, tau, SolverParams{});
        ASSERT_FALSE(out.extinct());
        EXPECT_EQ(out.next->step_index, 1u);
        EXPECT_DOUBLE_EQ(out.next->time(), tau);
        EXPECT_NEAR(mean_radius(out.next->gamma), r0 + v0 * tau - tau * tau / (2.0 * r0), 2e-5);
    }
}

TEST(FirstStep, RejectsBadInput) {
    const Grid2D g = make_grid(33, 1.0);
    const ScalarField d = circle_distance(kCenter, 0.3, g);
    EXPECT_THROW(first_step(Interface{}, d, {}, 0.01, SolverParams{}), ConfigError);
    const Interface gamma = extract_interface(d);
    const std::vector<double> v(gamma.size(), 0.0);
    EXPECT_THROW(first_step(gamma, d, v, 0.0, SolverParams{}), ConfigError);
}

TEST(Step, FlatFrontTranslatesAtConstantSpeed) {
    QuietWarnings quiet;
    HbmoRunConfig cfg;
    cfg.grid_n = 129;
    cfg.shape.kind = ShapeKind::polyline;
    cfg.shape.polygon.vertices = {{-1.0, -1.0}, {2.0, -1.0}, {2.0, 0.5}, {-1.0, 0.5}};
    cfg.velocity_constant = -0.1;
    cfg.threshold_dt = 0.01;
    cfg.steps = 8;
    const Trajectory tr = run(cfg);
    ASSERT_EQ(tr.frames.size(), 8u);
    for (const auto& f : tr.frames) {
        // Check the middle of the front, away from the walls' influence.
        for (const auto& s : f.gamma.segments) {
            if (s.p.x < 0.3 || s.p.x > 0.7) continue;
            EXPECT_NEAR(s.p.y, 0.5 - 0.1 * f.time, 1e-12);
        }
    }
}

TEST(Run, CircleShrinksMonotonicallyAndVanishesOnTime) {
    HbmoRunConfig cfg;
    cfg.grid_n = 129;
    cfg.shape.radius = 0.3;
    const double te = extinction_time({0.3, 0.0});
    cfg.threshold_dt = te / 64.0;
    cfg.steps = 80;
    cfg.radius_center = kCenter;
    const Trajectory tr = run(cfg);
    ASSERT_TRUE(tr.extinct_time.has_value());
    EXPECT_NEAR(*tr.extinct_time, te, 0.1 * te);
    ASSERT_EQ(tr.radii.size(), cfg.steps);
    double prev = 0.3;
    for (const auto& [t, r] : tr.radii) {
        if (r == 0.0) break;
        EXPECT_LT(r, prev);
        prev = r;
    }
    EXPECT_EQ(tr.radii.back().second, 0.0);
}

TEST(Run, OneStepGivesOneFrame) {
    HbmoRunConfig cfg;
    cfg.grid_n = 65;
    cfg.threshold_dt = 0.005;
    cfg.steps = 1;
    const Trajectory tr = run(cfg);
    ASSERT_EQ(tr.frames.size(), 1u);
    EXPECT_DOUBLE_EQ(tr.frames[0].time, 0.005);
    EXPECT_FALSE(tr.extinct_time);
}

TEST(Run, MirrorSymmetricDataStaysSymmetric) {
    HbmoRunConfig cfg;
    cfg.grid_n = 65;
    cfg.shape.kind = ShapeKind::polyline;
    cfg.shape.polygon.vertices = {{0.3, 0.3}, {0.7, 0.3}, {0.6, 0.55}, {0.7, 0.75}, {0.3, 0.75}, {0.4, 0.55}};
    cfg.threshold_dt = 0.004;
    cfg.steps = 6;
    const Trajectory tr = run(cfg);
    for (const auto& f : tr.frames) {
        Interface m;
        for (const auto& s : f.gamma.segments) m.segments.push_back({{1.0 - s.q.x, s.q.y}, {1.0 - s.p.x, s.p.y}});
        EXPECT_LE(interface_distance(f.gamma, m), 1e-12);
    }
}

TEST(Run, RejectsInvalidConfig) {
    HbmoRunConfig cfg;
    cfg.grid_n = 33;
    cfg.steps = 1;
    EXPECT_THROW(run(cfg), ConfigError);  // threshold_dt unset
    cfg.threshold_dt = 0.01;
    cfg.steps = 0;
    EXPECT_THROW(run(cfg), ConfigError);
    cfg.steps = 1;
    cfg.velocity_per_segment = {1.0, 2.0};
    EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Initial, PolygonContainmentAndInterface) {
    Polygon sq{{{0.2, 0.2}, {0.8, 0.2}, {0.8, 0.8}, {0.2, 0.8}}};
    EXPECT_TRUE(sq.contains({0.5, 0.5}));
    EXPECT_FALSE(sq.contains({0.1, 0.5}));
    const Interface iface = sq.to_interface();
    EXPECT_EQ(iface.size(), 4u);
    EXPECT_NEAR(iface.length(), 2.4, 1e-15);
}

TEST(Initial, HeatSmoothingShortensSquareMask) {
    const Grid2D g = make_grid(65, 1.0);
    const ScalarField mask = ScalarField::sample(g, [](Point x) {
        return std::abs(x.x - 0.5) < 0.2 && std::abs(x.y - 0.5) < 0.2 ? 1.0 : -1.0;
    });
    const double raw = extract_interface(mask).length();
    const double smooth = smooth_initial(mask, g.h() * g.h()).length();
    EXPECT_LT(smooth, raw);
    EXPECT_EQ(heat_smooth(mask, 0.0)[0], mask[0]);
    EXPECT_THROW(heat_smooth(mask, -1.0), ConfigError);
}

TEST(Initial, MaskShapeUsesSmoothedSign) {
    const Grid2D g = make_grid(33, 1.0);
    InitialShape shape;
    shape.kind = ShapeKind::mask;
    EXPECT_THROW(build_initial(shape, g), ConfigError);
    shape.mask = circle_distance(kCenter, 0.25, g);
    shape.smoothing_time = g.h() * g.h();
    const InitialData init = build_initial(shape, g);
    EXPECT_FALSE(init.gamma.empty());
    EXPECT_GT(init.sign_source(16, 16), 0.0);
    shape.mask = ScalarField(make_grid(17, 1.0), 1.0);
    EXPECT_THROW(build_initial(shape, g), ConfigError);
}

TEST(Warnings, WallProximityIsReported) {
    std::vector<std::string> seen;
    auto saved = std::exchange(warning_sink(), [&](const std::string& m) { seen.push_back(m); });
    HbmoRunConfig cfg;
    cfg.grid_n = 65;
    cfg.shape.center = {0.5, 0.5};
    cfg.shape.radius = 0.49;
    cfg.threshold_dt = 0.01;
    cfg.steps = 1;
    run(cfg);
    warning_sink() = std::move(saved);
    ASSERT_FALSE(seen.empty());
    EXPECT_NE(seen[0].find("domain wall"), std::string::npos);
}
