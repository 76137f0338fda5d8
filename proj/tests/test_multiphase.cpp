#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "hbmo/circle_oracle.hpp"
#include "hbmo/hbmo_core.hpp"
#include "hbmo/multiphase.hpp"

using namespace hbmo;

namespace {

// Phase 0 is the background; phases 1.. are disks.
std::vector<ScalarField> disk_scores(const Grid2D& g, const std::vector<std::pair<Point, double>>& disks) {
    std::vector<ScalarField> s(disks.size() + 1, ScalarField(g));
    for (std::size_t k = 0; k < g.size(); ++k) {
        double top = -1e300;
        for (std::size_t i = 0; i < disks.size(); ++i) {
            s[i + 1][k] = disks[i].second - norm(g.node(k) - disks[i].first);
            top = std::max(top, s[i + 1][k]);
        }
        s[0][k] = -top;
    }
    return s;
}

std::vector<ScalarField> voronoi_scores(const Grid2D& g, const std::vector<Point>& seeds) {
    std::vector<ScalarField> s;
    for (Point c : seeds) s.push_back(ScalarField::sample(g, [&](Point x) { return -norm(x - c); }));
    return s;
}

} // namespace

TEST(Simplex, GramMatrix) {
    for (std::size_t n = 2; n <= 7; ++n) {
        const SimplexBasis b = simplex_vectors(n);
        ASSERT_EQ(b.p.size(), n);
        std::vector<double> sum(b.dim(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_EQ(b.p[i].size(), n - 1);
            for (std::size_t c = 0; c < b.dim(); ++c) sum[c] += b.p[i][c];
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < b.dim(); ++c) dot += b.p[i][c] * b.p[j][c];
                EXPECT_NEAR(dot, i == j ? 1.0 : -1.0 / static_cast<double>(n - 1), 1e-14);
            }
        }
        for (double v : sum) EXPECT_NEAR(v, 0.0, 1e-14);
    }
    EXPECT_THROW(simplex_vectors(1), ConfigError);
}

TEST(Simplex, TwoAndThreePhases) {
    const SimplexBasis b2 = simplex_vectors(2);
    EXPECT_EQ(b2.p[0][0], 1.0);
    EXPECT_EQ(b2.p[1][0], -1.0);
    const SimplexBasis b3 = simplex_vectors(3);
    EXPECT_DOUBLE_EQ(b3.p[1][0], -0.5);
    EXPECT_NEAR(b3.p[1][1], std::sqrt(3.0) / 2.0, 1e-15);
    EXPECT_NEAR(b3.p[2][1], -std::sqrt(3.0) / 2.0, 1e-15);
}

TEST(Partition, ArgmaxWithLowestIndexTies) {
    const Grid2D g = make_grid(3, 1.0);
    std::vector<ScalarField> s(3, ScalarField(g, 0.0));
    s[1][4] = 1.0;
    s[2][4] = 1.0;
    s[2][8] = 0.5;
    const auto labels = label_nodes(s);
    EXPECT_EQ(labels[0], 0u);
    EXPECT_EQ(labels[4], 1u);
    EXPECT_EQ(labels[8], 2u);
    EXPECT_THROW(label_nodes(std::vector<ScalarField>(1, ScalarField(g))), ConfigError);
}

TEST(Partition, EveryNodeHasExactlyOneLabel) {
    const Grid2D g = make_grid(65, 1.0);
    const PhaseSet ps = partition(voronoi_scores(g, {{0.2, 0.3}, {0.7, 0.2}, {0.5, 0.8}, {0.8, 0.7}}));
    std::size_t total = 0;
    for (std::size_t i = 0; i < ps.phases(); ++i) total += ps.count(i);
    EXPECT_EQ(total, g.size());
    for (std::size_t i = 0; i < ps.phases(); ++i) {
        EXPECT_TRUE(ps.present(i));
        // distance is positive exactly on the phase's own nodes
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(!std::signbit(ps.distances[i][k]), ps.labels[k] == i);
    }
}

TEST(Partition, NeighboursShareOneCurve) {
    const Grid2D g = make_grid(65, 1.0);
    const PhaseSet ps = partition(voronoi_scores(g, {{0.3, 0.5}, {0.7, 0.5}}));
    EXPECT_LE(interface_distance(ps.boundaries[0], ps.boundaries[1]), 1e-13);
    for (const auto& s : ps.boundaries[0].segments) EXPECT_NEAR(s.p.x, 0.5, 1e-12);
}

TEST(Partition, AbsentPhaseGetsConstantDistance) {
    const Grid2D g = make_grid(17, 1.0);
    std::vector<ScalarField> s{ScalarField(g, 1.0), ScalarField(g, 0.0), ScalarField(g, -1.0)};
    const PhaseSet ps = partition(s);
    EXPECT_FALSE(ps.present(1));
    EXPECT_TRUE(ps.boundaries[1].empty());
    EXPECT_DOUBLE_EQ(ps.distances[1][0], -std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(ps.distances[0][0], std::sqrt(2.0));
}

TEST(ZField, TwoPhaseChannelIsClampedDistance) {
    const Grid2D g = make_grid(65, 1.0);
    const ScalarField d = circle_distance({0.5, 0.5}, 0.3, g);
    const PhaseSet ps = partition(std::vector<ScalarField>{d, ScalarField::combine(-1.0, d, 0.0, d)});
    const double eps = 6.0 * g.h();
    const VectorField z = build_z_field(ps, simplex_vectors(2), eps);
    for (std::size_t k = 0; k < g.size(); ++k)
        EXPECT_NEAR(z.channel(0)[k], std::clamp(2.0 * ps.distances[0][k] / eps, -1.0, 1.0), 1e-14);
}

TEST(ZField, PureStatesFarFromBoundaries) {
    const Grid2D g = make_grid(65, 1.0);
    const SimplexBasis b = simplex_vectors(4);
    const PhaseSet ps = partition(voronoi_scores(g, {{0.2, 0.2}, {0.8, 0.2}, {0.2, 0.8}, {0.8, 0.8}}));
    const double eps = default_eps(g);
    const VectorField z = build_z_field(ps, b, eps);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::size_t l = ps.labels[k];
        if (ps.distances[l][k] <= eps) continue;
        for (std::size_t c = 0; c < b.dim(); ++c) EXPECT_NEAR(z.channel(c)[k], b.p[l][c], 1e-14);
    }
}

TEST(ZField, ThresholdRoundTrip) {
    const Grid2D g = make_grid(65, 1.0);
    const SimplexBasis b = simplex_vectors(5);
    const PhaseSet ps = partition(disk_scores(g, {{{0.3, 0.3}, 0.15}, {{0.7, 0.3}, 0.12}, {{0.3, 0.7}, 0.1}, {{0.68, 0.7}, 0.17}}));
    const PhaseSet back = threshold(build_z_field(ps, b, default_eps(g)), b);
    EXPECT_EQ(back.labels, ps.labels);
}

TEST(ZField, RejectsNarrowBand) {
    const Grid2D g = make_grid(33, 1.0);
    const PhaseSet ps = partition(voronoi_scores(g, {{0.3, 0.5}, {0.7, 0.5}}));
    EXPECT_THROW(build_z_field(ps, simplex_vectors(2), 2.0 * g.h()), ConfigError);
    EXPECT_THROW(build_z_field(ps, simplex_vectors(3), 6.0 * g.h()), ConfigError);
    EXPECT_THROW(init_multiphase(voronoi_scores(g, {{0.3, 0.5}, {0.7, 0.5}}), 0.01, MultiphaseParams{g.h(), {}}), ConfigError);
}

TEST(Multiphase, ChannelsEvolveIndependently) {
    const Grid2D g = make_grid(33, 1.0);
    const ScalarField a = ScalarField::sample(g, [](Point x) { return std::sin(4.0 * x.x) * x.y; });
    const ScalarField c = ScalarField::sample(g, [](Point x) { return x.x - x.y * x.y; });
    const WaveParams wp = make_wave_params(g, 2.0, 0.01, 16);
    const VectorField out = solve_channels(VectorField(std::vector<ScalarField>{a, c}), wp);
    const ScalarField sa = solve(a, wp);
    const ScalarField sc = solve(c, wp);
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_EQ(out.channel(0)[k], sa[k]);
        EXPECT_EQ(out.channel(1)[k], sc[k]);
    }
}

TEST(Multiphase, InitStartsAtRest) {
    const Grid2D g = make_grid(33, 1.0);
    const MultiphaseState s = init_multiphase(voronoi_scores(g, {{0.3, 0.5}, {0.7, 0.5}, {0.5, 0.9}}), 0.01, {});
    EXPECT_EQ(s.step_index, 0u);
    EXPECT_EQ(s.basis.phases, 3u);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(s.z_curr.channel(c)[k], s.z_prev.channel(c)[k]);
    EXPECT_THROW(init_multiphase(voronoi_scores(g, {{0.3, 0.5}, {0.7, 0.5}}), 0.0, {}), ConfigError);
}

TEST(Multiphase, PermutingPhasesPermutesLabels) {
    const Grid2D g = make_grid(65, 1.0);
    const auto s = disk_scores(g, {{{0.35, 0.4}, 0.15}, {{0.65, 0.6}, 0.2}});
    const std::vector<ScalarField> perm{s[2], s[0], s[1]};
    const double tau = 0.01;
    MultiphaseState a = init_multiphase(s, tau, {});
    MultiphaseState b = init_multiphase(perm, tau, {});
    for (int n = 0; n < 3; ++n) {
        a = multiphase_step(a, {});
        b = multiphase_step(b, {});
    }
    const std::uint32_t map[] = {1, 2, 0};  // label in a -> label in b
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < g.size(); ++k) mismatches += map[a.phases.labels[k]] != b.phases.labels[k];
    EXPECT_EQ(mismatches, 0u);
}

TEST(Multiphase, TwoPhasesReproduceScalarScheme) {
    const Grid2D g = make_grid(65, 1.0);
    const double tau = extinction_time({0.3, 0.0}) / 256.0;
    MultiphaseParams wide;
    wide.eps = 12.0 * g.h();
    const ScalarField d0 = circle_distance({0.5, 0.5}, 0.3, g);
    const ScalarField d = signed_distance_field(extract_interface(d0), d0);
    HbmoState s{d, d, extract_interface(d0), tau, 0};
    MultiphaseState m = init_multiphase(std::vector<ScalarField>{d0, ScalarField::combine(-1.0, d0, 0.0, d0)}, tau, wide);
    for (int n = 0; n < 4; ++n) {
        s = std::move(*step(s, wide.solver).next);
        m = multiphase_step(m, wide);
        EXPECT_LE(interface_distance(s.gamma, m.phases.boundaries[0]), 1e-12);
    }
}

TEST(Multiphase, SmallBubbleVanishesWithoutError) {
    const Grid2D g = make_grid(65, 1.0);
    MultiphaseState s = init_multiphase(disk_scores(g, {{{0.3, 0.5}, 0.2}, {{0.75, 0.5}, 0.04}}), 0.004, {});
    for (int n = 0; n < 15 && s.phases.present(2); ++n) s = multiphase_step(s, {});
    EXPECT_FALSE(s.phases.present(2));
    EXPECT_TRUE(s.phases.present(1));
    EXPECT_NO_THROW(multiphase_step(s, {}));
}

TEST(PhaseCsv, Layout) {
    const Grid2D g = make_grid(3, 1.0);
    std::vector<ScalarField> s{ScalarField::sample(g, [](Point x) { return 0.6 - x.x; }),
                               ScalarField::sample(g, [](Point x) { return x.x - 0.6; })};
    std::ostringstream os;
    write_phase_csv(partition(s), 0.5, os);
    EXPECT_EQ(os.str(), "# schema: hbmo-phases/1\n# t=0.5 nx=3 ny=3\n0,0,1\n0,0,1\n0,0,1\n");
}
