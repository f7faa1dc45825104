#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "impactlab/approx.hpp"
#include "impactlab/metrics.hpp"
#include "test_support.hpp"

using namespace impactlab;

namespace {

CadlagPath unit_step(double at, double t1 = 2.0) { return CadlagPath::step(0.0, t1, 0.0, {0.0, at}, {0.0, 1.0}); }

/// Brute-force moving average by a fine midpoint rule.
double average_oracle(const CadlagPath& x, double t, double eps) {
    const int n = 20000;
    double acc = 0;
    for (int i = 0; i < n; ++i) {
        double s = t - eps + eps * (i + 0.5) / n;
        acc += (s < x.start() ? x.initial_left() : x.eval(s));
    }
    return acc / n;
}

}  // namespace

TEST(WongZakai, UnitStepBecomesRamp) {
    auto a = wz_average(unit_step(1.0), 0.25);
    EXPECT_DOUBLE_EQ(a.eval(1.0), 0.0);
    EXPECT_DOUBLE_EQ(a.eval(1.125), 0.5);
    EXPECT_DOUBLE_EQ(a.eval(1.25), 1.0);
    EXPECT_FALSE(a.has_jumps());
}

TEST(WongZakai, MatchesBruteForceAverage) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
        auto x = testsupport::random_path(rng);
        double eps = 0.05 + 0.2 * (i % 5) / 4.0;
        auto a = wz_average(x, eps);
        // quadratic stretches are resampled at eps/8, so between knots the chord
        // error is at most slope * eps / 512
        double slope = 0;
        const auto& kx = x.knots();
        for (std::size_t q = 0; q + 1 < kx.size(); ++q)
            slope = std::max(slope, std::abs(kx[q + 1].left - kx[q].right) / (kx[q + 1].t - kx[q].t));
        for (double t : {0.0, 0.13, 0.37, 0.5, 0.81, 1.0})
            EXPECT_NEAR(a.eval(t), average_oracle(x, t, eps), 1e-4 + slope * eps / 512) << i;
        for (const auto& k : a.knots()) EXPECT_NEAR(k.left, average_oracle(x, k.t, eps), 1e-4);
    }
}

TEST(WongZakai, DoesNotIncreaseVariationAndStartsAtInitialValue) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 30; ++i) {
        auto x = testsupport::random_path(rng);
        auto a = wz_average(x, 0.1);
        EXPECT_LE(path_stats(a).total_variation, path_stats(x).total_variation + 1e-12);
        EXPECT_EQ(a.initial_left(), x.initial_left());
        EXPECT_NEAR(a.eval(0.0), x.initial_left(), 1e-15);
    }
}

TEST(WongZakai, ExtendedPathReachesTerminalValue) {
    auto x = PathBuilder(0.0, 1.0).hold_to(1.0).jump_to(0.0).build();
    auto e = wz_average(extend_path(x, 0.5), 0.25);
    EXPECT_NEAR(e.eval(1.25), 0.0, 1e-15);
    EXPECT_NEAR(e.eval(1.125), 0.5, 1e-15);
}

// Jumps of opposite sign closer than the window get averaged away, so the
// 2/n bound applies once 1/n is below the smallest gap between jumps; for
// nondecreasing steps it holds at every n.
TEST(WongZakai, M1DistanceShrinksOnExtendedPaths) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 16; ++i) {
        const bool monotone = i % 2 == 0;
        std::vector<double> times{0.0}, values{0.0};
        int jumps = 1 + i % 5;
        for (int j = 0; j < jumps; ++j) times.push_back(0.05 + 0.9 * (j + u(rng)) / jumps);
        for (int j = 0; j < jumps; ++j) values.push_back(monotone ? values.back() + u(rng) : 2 * u(rng) - 1);
        double gap = 1.0;
        for (std::size_t j = 2; j < times.size(); ++j) gap = std::min(gap, times[j] - times[j - 1]);
        auto x = extend_path(CadlagPath::step(0.0, 1.0, 0.0, times, values), 0.5);
        double prev = 1e300;
        for (int n : {4, 8, 16, 32, 64}) {
            if (!monotone && 1.0 / n > gap) continue;
            double d = d_m1(x, wz_average(x, 1.0 / n));
            EXPECT_LE(d, 2.0 / n + 1e-6) << i << ' ' << n;
            EXPECT_LE(d, prev + 1e-6) << i << ' ' << n;
            prev = d;
        }
    }
}

TEST(WongZakai, CloseOppositeJumpsAreSmearedOut) {
    auto x = extend_path(CadlagPath::step(0.0, 1.0, 0.0, {0.0, 0.5, 0.55}, {0.0, 1.0, 0.0}), 0.5);
    EXPECT_GE(d_m1(x, wz_average(x, 0.25)), 0.25);
    EXPECT_LE(d_m1(x, wz_average(x, 1.0 / 64)), 2.0 / 64 + 1e-6);
}

TEST(WongZakai, RampIsWithinWindowOfStepInM1) {
    auto x = unit_step(1.0);
    for (int n : {2, 8, 32}) EXPECT_LE(d_m1(x, wz_average(x, 1.0 / n)), 1.0 / n + 1e-6);
}

TEST(GridDiscretize, StaircaseOnNodes) {
    auto x = CadlagPath::polyline({0.0, 1.0}, {1.0, 0.0});
    auto s = grid_discretize(x, equidistant_nodes(0.0, 1.0, 4));
    EXPECT_DOUBLE_EQ(s.eval(0.1), 1.0);
    EXPECT_DOUBLE_EQ(s.eval(0.25), 0.75);
    EXPECT_DOUBLE_EQ(s.eval(0.99), 0.25);
    EXPECT_DOUBLE_EQ(s.eval(1.0), 0.25);
    EXPECT_DOUBLE_EQ(s.terminal_right(), 0.0);
    EXPECT_NEAR(d_uniform(s, x), 0.25, 1e-15);
}

TEST(JumpCapped, UnitBlockBecomesSmallSteps) {
    auto x = CadlagPath::step(0.0, 2.0, 1.0, {0.0, 1.0}, {1.0, 0.0});
    auto j = jump_capped_simple(x, 4);
    EXPECT_GE(j.steps, 4u);
    const auto& k = j.path.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) EXPECT_LE(std::abs(k[i].right - k[i].left), 0.25 + 1e-12);
    EXPECT_LT(d_uniform(j.path, j.smoothed), 1.0 / 16);
}

TEST(JumpCapped, JumpBoundOnRandomPaths) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 10; ++i) {
        auto x = testsupport::random_path(rng);
        for (int n : {2, 3, 5}) {
            auto j = jump_capped_simple(x, n);
            double bound = std::min(std::ldexp(1.0, -n), 1.0 / n);
            const auto& k = j.path.knots();
            for (std::size_t q = 1; q + 1 < k.size(); ++q) EXPECT_LE(std::abs(k[q].right - k[q].left), bound + 1e-12);
            EXPECT_LT(d_uniform(j.path, j.smoothed), bound);
        }
    }
}

TEST(Certificate, SingleJumpWithinOneOverN) {
    auto x = unit_step(1.0);
    auto c = wz_parametric_certificate(x, 16);
    EXPECT_LE(c.certified_distance, 1.0 / 16 + 1e-12);
    EXPECT_GE(c.certified_distance, d_m1(x, c.smoothed) - 1e-6);
}

TEST(Certificate, RepresentationsCoverBothGraphs) {
    auto x = CadlagPath::step(0.0, 2.0, 0.0, {0.0, 0.5, 1.2}, {0.0, 1.0, -0.5});
    auto c = wz_parametric_certificate(x, 8);
    ASSERT_GE(c.s.size(), 2u);
    EXPECT_EQ(c.s.front(), 0.0);
    EXPECT_EQ(c.s.back(), 1.0);
    EXPECT_EQ(c.r.front(), 0.0);
    EXPECT_EQ(c.r_n.front(), 0.0);
    EXPECT_EQ(c.r.back(), 2.0);
    EXPECT_EQ(c.r_n.back(), 2.0);
    for (std::size_t i = 1; i < c.s.size(); ++i) {
        EXPECT_GE(c.r[i], c.r[i - 1]);
        EXPECT_GE(c.r_n[i], c.r_n[i - 1]);
    }
}

TEST(Certificate, UpperBoundsM1OnRandomPaths) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 25; ++i) {
        auto x = testsupport::random_path(rng);
        int n = 2 + i % 30;
        auto c = wz_parametric_certificate(x, n);
        EXPECT_GE(c.certified_distance, d_m1(x, c.smoothed) - 1e-6) << i;
    }
}
