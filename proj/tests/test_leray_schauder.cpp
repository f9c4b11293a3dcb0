#include "projop/leray_schauder.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace projop;

namespace {

const PNorm kL2(2.0);

std::vector<SampledFunction> constants(const QuadraturePtr& q, std::initializer_list<double> values) {
    std::vector<SampledFunction> out;
    for (double v : values) out.push_back(SampledFunction::constant(q, v));
    return out;
}

double constant_value(const SampledFunction& f) { return f[0]; }

} // namespace

TEST(GreedyNet, SingletonIsItsOwnNet) {
    auto q = build_quadrature(1, 4);
    CompactSampleSet set(constants(q, {0.3}), kL2);
    for (double eps : {1e-3, 0.5, 10.0}) {
        auto net = greedy_net(set, eps);
        ASSERT_EQ(net.centers().size(), 1u);
        EXPECT_EQ(constant_value(net.centers()[0]), 0.3);
    }
}

// brute force: constants 0,1,2 are pairwise 1 apart in L^2, nothing is covered at eps 0.5
TEST(GreedyNet, WellSeparatedConstantsAllBecomeCenters) {
    auto q = build_quadrature(1, 4);
    auto net = greedy_net(CompactSampleSet(constants(q, {0.0, 1.0, 2.0}), kL2), 0.5);
    ASSERT_EQ(net.centers().size(), 3u);
    EXPECT_EQ(constant_value(net.centers()[0]), 0.0);
    EXPECT_EQ(constant_value(net.centers()[1]), 1.0);
    EXPECT_EQ(constant_value(net.centers()[2]), 2.0);
}

TEST(GreedyNet, CoveredMemberIsSkipped) {
    auto q = build_quadrature(1, 4);
    auto net = greedy_net(CompactSampleSet(constants(q, {0.0, 0.1, 1.0}), kL2), 0.5);
    ASSERT_EQ(net.centers().size(), 2u);
    EXPECT_EQ(constant_value(net.centers()[0]), 0.0);
    EXPECT_EQ(constant_value(net.centers()[1]), 1.0);
}

TEST(GreedyNet, RejectsNonPositiveEpsilon) {
    auto q = build_quadrature(1, 4);
    CompactSampleSet set(constants(q, {0.0}), kL2);
    EXPECT_THROW(greedy_net(set, 0.0), Error);
    EXPECT_THROW(greedy_net(set, -1.0), Error);
    EXPECT_THROW(CompactSampleSet({}, kL2), Error);
}

TEST(HatCoefficients, CenterActivatesOnlyItself) {
    auto q = build_quadrature(1, 4);
    auto net = greedy_net(CompactSampleSet(constants(q, {0.0, 1.0, 2.0}), kL2), 0.75);
    auto mu = hat_coefficients(net, net.centers()[1]);
    ASSERT_EQ(mu.size(), 3u);
    EXPECT_EQ(mu[0], 0.0);
    EXPECT_EQ(mu[1], 0.75);
    EXPECT_EQ(mu[2], 0.0);
}

TEST(HatCoefficients, FarPointGivesZeros) {
    auto q = build_quadrature(1, 4);
    auto net = greedy_net(CompactSampleSet(constants(q, {0.0, 1.0}), kL2), 0.5);
    for (double m : hat_coefficients(net, SampledFunction::constant(q, 5.0))) EXPECT_EQ(m, 0.0);
}

TEST(HatCoefficients, MidpointIsShared) {
    auto q = build_quadrature(1, 4);
    LerayProjector net(constants(q, {0.0, 1.0}), 1.0, kL2);
    auto mu = hat_coefficients(net, SampledFunction::constant(q, 0.5));
    EXPECT_NEAR(mu[0], 0.5, 1e-15);
    EXPECT_NEAR(mu[1], 0.5, 1e-15);
}

TEST(LsProject, FixesCentersOfSeparatedNet) {
    std::mt19937_64 rng(5);
    auto q = build_quadrature(1, 12);
    std::vector<SampledFunction> members;
    for (int i = 0; i < 30; ++i) members.push_back(test_support::random_band_limited(rng, q));
    auto net = greedy_net(CompactSampleSet(members, kL2), 0.8);
    for (const auto& c : net.centers()) {
        auto px = ls_project(net, c);
        for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(px[i], c[i], 1e-12);
        auto coords = ls_coordinates(net, c);
        EXPECT_EQ(std::count(coords.begin(), coords.end(), 1.0), 1);
    }
}

TEST(LsProject, SingleCenterMapsEverythingToIt) {
    auto q = build_quadrature(1, 6);
    auto center = sample(q, [](std::span<const double> x) { return std::sin(x[0]); });
    LerayProjector net({center}, 2.0, kL2);
    for (double shift : {-0.5, 0.0, 0.3, 1.2}) {
        auto px = ls_project(net, center + SampledFunction::constant(q, shift));
        for (std::size_t i = 0; i < px.size(); ++i) EXPECT_EQ(px[i], center[i]);
    }
}

TEST(LsProject, MidpointExample) {
    auto q = build_quadrature(1, 4);
    LerayProjector net(constants(q, {0.0, 1.0}), 1.0, kL2);
    auto px = ls_project(net, SampledFunction::constant(q, 0.5));
    for (double v : px.values()) EXPECT_NEAR(v, 0.5, 1e-15);
    auto coords = ls_coordinates(net, SampledFunction::constant(q, 0.5));
    EXPECT_NEAR(coords[0], 0.5, 1e-15);
    EXPECT_NEAR(coords[1], 0.5, 1e-15);
}

TEST(LsProject, UncoveredPointIsCoverageError) {
    auto q = build_quadrature(1, 4);
    LerayProjector net(constants(q, {0.0, 1.0}), 0.4, kL2);
    try {
        ls_project(net, SampledFunction::constant(q, 0.5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::coverage);
        EXPECT_NE(std::string(e.what()).find("not within epsilon"), std::string::npos);
    }
}

TEST(LerayProjector, SeparationEnforcedUnlessDisabled) {
    auto q = build_quadrature(1, 4);
    EXPECT_THROW(LerayProjector(constants(q, {0.0, 0.2}), 0.5, kL2), Error);
    LerayProjector loose(constants(q, {0.0, 0.2}), 0.5, kL2, false);
    EXPECT_FALSE(check_separation(loose, 0.5).separated);
    // arbitrary centers still satisfy the projection bound on covered points
    auto x = SampledFunction::constant(q, 0.1);
    EXPECT_LT(distance(x, ls_project(loose, x), kL2), 0.5);
}

// Randomized compacts: coverage, separation, the eps bound, and partition of unity.
TEST(LerayProperties, RandomizedCompacts) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> count(5, 40), dim(1, 2);
    std::uniform_real_distribution<double> eps_dist(0.3, 1.5), pdist(1.2, 6.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto q = build_quadrature(dim(rng), 8);
        const PNorm p(pdist(rng));
        std::vector<SampledFunction> members;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) members.push_back(test_support::random_band_limited(rng, q));
        const double eps = eps_dist(rng);
        auto net = greedy_net(CompactSampleSet(members, p), eps);
        EXPECT_LE(net.centers().size(), members.size());
        EXPECT_TRUE(check_separation(net, eps).separated);
        for (const auto& x : members) {
            double nearest = 1e300;
            for (const auto& c : net.centers()) nearest = std::min(nearest, distance(x, c, p));
            ASSERT_LT(nearest, eps);
            ASSERT_LT(distance(x, ls_project(net, x), p), eps);
            auto coords = ls_coordinates(net, x);
            double sum = 0.0;
            for (double c : coords) {
                EXPECT_GE(c, 0.0);
                sum += c;
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
            auto combined = combine_centers(net, coords);
            auto px = ls_project(net, x);
            for (std::size_t i = 0; i < px.size(); ++i) EXPECT_NEAR(combined[i], px[i], 1e-12);
        }
    }
}

// Continuity probe along a path x(s) = (1-s) a + s b inside the covered region.
// The Lipschitz ratio is recorded, not asserted; only convergence to zero is checked.
TEST(LerayProperties, ContinuityAlongPath) {
    auto q = build_quadrature(1, 8);
    auto a = sample(q, [](std::span<const double> x) { return std::cos(x[0]); });
    auto b = sample(q, [](std::span<const double> x) { return std::cos(x[0]) + 0.4 * x[0]; });
    LerayProjector net({a, b}, 0.5, kL2, false);
    auto path = [&](double s) { return (1.0 - s) * a + s * b; };
    double max_ratio = 0.0;
    for (double h : {1e-2, 1e-4, 1e-6}) {
        for (double s : {0.1, 0.4, 0.7}) {
            const double dx = distance(path(s), path(s + h), kL2);
            const double dp = distance(ls_project(net, path(s)), ls_project(net, path(s + h)), kL2);
            EXPECT_LT(dp, 100.0 * dx + 1e-12);
            max_ratio = std::max(max_ratio, dp / dx);
        }
    }
    RecordProperty("lipschitz_ratio", std::to_string(max_ratio));
}

TEST(ProjectorFile, RoundTripsBitwise) {
    std::mt19937_64 rng(9);
    auto q = build_quadrature(2, 4);
    std::vector<SampledFunction> members;
    for (int i = 0; i < 8; ++i) members.push_back(test_support::random_band_limited(rng, q));
    auto net = greedy_net(CompactSampleSet(members, PNorm(3.0)), 0.7);
    std::stringstream ss;
    write_projector(ss, net);
    auto back = read_projector(ss);
    ASSERT_EQ(back.centers().size(), net.centers().size());
    EXPECT_EQ(back.epsilon(), net.epsilon());
    EXPECT_EQ(back.norm().p(), 3.0);
    for (std::size_t c = 0; c < net.centers().size(); ++c)
        for (std::size_t i = 0; i < q->size(); ++i) EXPECT_EQ(back.centers()[c][i], net.centers()[c][i]);
    EXPECT_TRUE(check_separation(back, 0.7).separated);

    std::istringstream garbage("hello\n");
    EXPECT_THROW(read_projector(garbage), Error);
}
