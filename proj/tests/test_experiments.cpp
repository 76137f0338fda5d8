#include <cmath>

#include <gtest/gtest.h>

#include "hbmo/experiments.hpp"

using namespace hbmo;

TEST(ErrorTerms, FloorWithRoundingGuard) {
    EXPECT_EQ(error_terms(1.0, 0.1), 10u);
    EXPECT_EQ(error_terms(1.0, 0.3), 3u);
    const double te = extinction_time({0.3, 0.0});
    EXPECT_EQ(error_terms(te, te / 512.0), 512u);
}

TEST(L2Error, ExactRadiiGiveZero) {
    const CircleParams p{0.3, 0.0};
    const double dt = extinction_time(p) / 64.0;
    std::vector<double> r;
    for (std::size_t n = 0; n < 64; ++n) r.push_back(exact_radius(static_cast<double>(n) * dt, p).radius);
    EXPECT_NEAR(l2_radius_error(r, p, dt), 0.0, 1e-15);
}

TEST(L2Error, ConstantOffsetAndMissingEntries) {
    const CircleParams p{0.3, 0.0};
    const double dt = extinction_time(p) / 16.0;
    std::vector<double> r;
    for (std::size_t n = 0; n < 16; ++n) r.push_back(exact_radius(static_cast<double>(n) * dt, p).radius + 0.01);
    EXPECT_NEAR(l2_radius_error(r, p, dt), std::sqrt(dt * 16.0 * 1e-4), 1e-14);
    // Dropping the tail counts those entries as zero radius.
    std::vector<double> head(r.begin(), r.begin() + 15);
    for (auto& x : head) x -= 0.01;
    const double last = exact_radius(15.0 * dt, p).radius;
    EXPECT_NEAR(l2_radius_error(head, p, dt), std::sqrt(dt) * last, 1e-14);
    EXPECT_THROW(l2_radius_error(r, p, 0.0), ConfigError);
}

TEST(RunExperiment, SmallGridBothModes) {
    ExperimentSpec spec;
    spec.grid_n = 64;
    spec.threshold_divisions = 64;
    for (auto mode : {DistanceMode::ideal, DistanceMode::reconstructed}) {
        spec.mode = mode;
        const ExperimentResult r = run_experiment(spec);
        EXPECT_EQ(r.radii.front(), 0.3);
        EXPECT_GE(r.radii.size(), 40u);
        EXPECT_LT(r.l2_error, 0.05);
        EXPECT_GT(r.l2_error, 0.0);
        for (std::size_t k = 1; k < r.radii.size(); ++k) EXPECT_LT(r.radii[k], r.radii[k - 1]);
    }
}

TEST(RunExperiment, DistanceModeNames) {
    EXPECT_EQ(parse_distance_mode("ideal"), DistanceMode::ideal);
    EXPECT_STREQ(to_string(DistanceMode::reconstructed), "reconstructed");
    EXPECT_THROW(parse_distance_mode("exact"), ConfigError);
}

TEST(GridConvergence, ErrorDecreasesWithResolution) {
    ExperimentSpec spec;
    spec.threshold_divisions = 128;
    const std::size_t grids[] = {16, 32, 64};
    const auto rows = grid_convergence(spec, grids);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_GT(rows[0].error, rows[1].error);
    EXPECT_GT(rows[1].error, rows[2].error);
    EXPECT_FALSE(rows[0].order);
    EXPECT_GT(*rows[2].order, 0.5);
}

TEST(GridConvergence, RejectsUnsortedGrids) {
    const std::size_t grids[] = {32, 16};
    EXPECT_THROW(grid_convergence(ExperimentSpec{}, grids), ConfigError);
}

TEST(GridConvergence, FailuresNameTheResolution) {
    ExperimentSpec spec;
    spec.threshold_divisions = 0;
    const std::size_t grids[] = {16};
    try {
        grid_convergence(spec, grids);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("N=16: ", 0), 0u);
    }
}
