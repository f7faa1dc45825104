#include <gtest/gtest.h>

#include <random>

#include "impactlab/approx.hpp"
#include "impactlab/metrics.hpp"
#include "test_support.hpp"

using namespace impactlab;

namespace {

CadlagPath unit_step(double at, double t1 = 2.0) { return CadlagPath::step(0.0, t1, 0.0, {0.0, at}, {0.0, 1.0}); }

CadlagPath ramp(double a, double b, double from, double to, double t1 = 2.0) {
    return PathBuilder(0.0, from).hold_to(a).line_to(b, to).hold_to(t1).build();
}

}  // namespace

TEST(Metrics, ShiftedStepDistances) {
    auto x = unit_step(1.0), y = unit_step(1.1);
    EXPECT_DOUBLE_EQ(d_uniform(x, y), 1.0);
    EXPECT_NEAR(d_j1_upper(x, y), 0.1, 1e-12);
    EXPECT_NEAR(d_m1(x, y), 0.1, 1e-6);
}

TEST(Metrics, StepVersusAnticipatingRamp) {
    auto x = unit_step(1.0);
    for (int n : {2, 4, 16, 64}) {
        auto a = ramp(1.0 - 1.0 / n, 1.0, 0.0, 1.0);
        EXPECT_LE(d_m1(x, a), 1.0 / n + 1e-6) << n;
        EXPECT_GE(d_j1_upper(x, a), 0.5 - 1e-9) << n;
    }
}

TEST(Metrics, SumOfSmoothedStepsStaysAwayInM1) {
    // x = 1{t >= 1} smoothed forward, y = 1 - x smoothed backward; x + y = 1.
    auto one = CadlagPath::constant(0.0, 2.0, 1.0);
    for (int n : {4, 16, 64}) {
        double h = 1.0 / n;
        auto s = PathBuilder(0.0, 1.0).hold_to(1.0 - h).line_to(1.0, 2.0).line_to(1.0 + h, 1.0).hold_to(2.0).build();
        EXPECT_GE(d_m1(s, one), 0.5 - 1e-6) << n;
    }
}

TEST(Metrics, IdenticalPathsAreAtZero) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        auto x = testsupport::random_path(rng);
        EXPECT_EQ(d_uniform(x, x), 0.0);
        EXPECT_EQ(d_m1(x, x), 0.0);
        EXPECT_EQ(d_j1_upper(x, x), 0.0);
    }
}

TEST(Metrics, M1MatchesDiscreteFrechetOracle) {
    std::mt19937_64 rng(11);
    const double h = 2e-3;
    for (int i = 0; i < 40; ++i) {
        auto x = testsupport::random_path(rng), y = testsupport::random_path(rng);
        double d = d_m1(x, y, 1e-7);
        double oracle = testsupport::discrete_frechet(x, y, h);
        EXPECT_NEAR(d, oracle, h + 1e-6) << i;
    }
}

TEST(Metrics, OrderingOnRandomPairs) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto x = testsupport::random_path(rng), y = testsupport::random_path(rng);
        double m1 = d_m1(x, y), j1 = d_j1_upper(x, y), u = d_uniform(x, y);
        EXPECT_LE(m1, j1) << i;
        EXPECT_LE(j1, u + 1e-12) << i;
    }
}

TEST(Metrics, TriangleAndSymmetry) {
    std::mt19937_64 rng(8);
    const double tol = 1e-6;
    for (int i = 0; i < 50; ++i) {
        auto x = testsupport::random_path(rng), y = testsupport::random_path(rng), z = testsupport::random_path(rng);
        EXPECT_NEAR(d_m1(x, y), d_m1(y, x), tol);
        EXPECT_LE(d_m1(x, z), d_m1(x, y) + d_m1(y, z) + 3 * tol);
        EXPECT_EQ(d_uniform(x, y), d_uniform(y, x));
        EXPECT_LE(d_uniform(x, z), d_uniform(x, y) + d_uniform(y, z) + 1e-15);
    }
}

TEST(Metrics, DomainMismatchThrows) {
    EXPECT_THROW(d_m1(unit_step(1.0, 2.0), unit_step(1.0, 3.0)), std::invalid_argument);
    EXPECT_THROW(d_uniform(unit_step(1.0, 2.0), unit_step(1.0, 3.0)), std::invalid_argument);
}

TEST(Metrics, LevyProkhorovOfShiftedSteps) {
    EXPECT_NEAR(d_levy_prokhorov(unit_step(1.0), unit_step(1.2)), 0.2, 1e-11);
    EXPECT_EQ(d_levy_prokhorov(unit_step(1.0), unit_step(1.0)), 0.0);
}

TEST(Metrics, LevyProkhorovRejectsNonMonotone) {
    auto x = PathBuilder(0.0, 0.0).line_to(1.0, 1.0).line_to(2.0, 0.0).build();
    EXPECT_THROW(d_levy_prokhorov(x, x), std::invalid_argument);
}

TEST(Metrics, LevyProkhorovSymmetricOnMonotonePaths) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 30; ++i) {
        auto x = testsupport::random_path(rng, 0, 1, 4, true);
        // same endpoints: rescale a second monotone path onto x's range
        auto y0 = testsupport::random_path(rng, 0, 1, 4, true);
        double a = x.eval(1.0) / y0.eval(1.0);
        std::vector<Knot> k = y0.knots();
        for (auto& kn : k) {
            kn.left *= a;
            kn.right *= a;
        }
        CadlagPath y(k, y0.kinds());
        double d1 = d_levy_prokhorov(x, y), d2 = d_levy_prokhorov(y, x);
        EXPECT_NEAR(d1, d2, 1e-11);
        EXPECT_LE(d1, std::max(1.0, x.eval(1.0)) + 1e-9);
    }
}

TEST(Metrics, OscillationOfUpDownBump) {
    auto x = CadlagPath::step(0.0, 2.0, 0.0, {0.0, 1.0, 1.5}, {0.0, 1.0, 0.0});
    EXPECT_DOUBLE_EQ(m1_oscillation(x, 1.25, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(m1_oscillation(unit_step(1.0), 1.0, 0.5), 0.0);
    auto mono = PathBuilder(0.0, 0.0).line_to(1.0, 1.0).jump_to(3.0).line_to(2.0, 4.0).build();
    EXPECT_DOUBLE_EQ(m1_oscillation(mono, 1.0, 1.0), 0.0);
}
