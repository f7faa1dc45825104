#include <gtest/gtest.h>

#include <cmath>

#include "impactlab/impact.hpp"
#include "impactlab/liquidation.hpp"

using namespace impactlab;

namespace {

ImpactModel exp_model(double beta, double lambda = 1.0, double y0 = 0.0) {
    return {Resilience::linear(beta), PriceImpact::multiplicative(ImpactCurve::exponential(lambda)), 1.0, y0};
}

}  // namespace

TEST(Impact, FreeDecayIsExponentialInClock) {
    auto m = deterministic_market(2.0, 0.0, 1.0, 50);
    auto y = solve_impact(CadlagPath::constant(0, 1, 0.0), exp_model(0.7, 1.0, 1.5), m);
    for (double t : {0.1, 0.5, 1.0}) EXPECT_NEAR(y.eval(t), 1.5 * std::exp(-0.7 * 2.0 * t), 1e-13);
}

TEST(Impact, BlockMovesImpactByEtaTimesTrade) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.5}, {1.0, 0.0});
    auto model = exp_model(0.0);
    model.eta = 0.5;
    auto y = solve_impact(th, model, m);
    EXPECT_NEAR(y.left_limit(0.5), 0.0, 1e-15);
    EXPECT_NEAR(y.eval(0.5), -0.5, 1e-15);
}

TEST(Impact, LinearSaleAgainstClosedForm) {
    // dY = -b Y dt + dTheta with dTheta = -dt: Y = -(1 - e^{-bt}) / b.
    const double b = 1.3;
    auto m = deterministic_market(1.0, 0.0, 1.0, 40);
    auto th = CadlagPath::polyline({0.0, 1.0}, {1.0, 0.0});
    auto y = solve_impact(th, exp_model(b), m);
    for (double t : {0.25, 0.6, 1.0}) EXPECT_NEAR(y.eval(t), -(1 - std::exp(-b * t)) / b, 1e-13);
}

TEST(Impact, PolynomialResilienceMatchesLinearCase) {
    auto m = deterministic_market(1.0, 0.0, 2.0, 20);
    auto th = PathBuilder(0.0, 1.0).jump_to(0.6).line_to(1.0, 0.2).hold_to(1.5).jump_to(0.0).hold_to(2.0).build();
    auto exact = solve_impact(th, exp_model(0.8), m);
    ImpactModel poly = exp_model(0.8);
    poly.h = Resilience::polynomial({0.8}, 0.8);
    auto rk = solve_impact(th, poly, m);
    for (const auto& k : exact.knots()) EXPECT_NEAR(rk.eval(k.t), exact.eval(k.t), 1e-10);
}

TEST(Impact, CubicResilienceAgainstFineEuler) {
    Resilience h = Resilience::polynomial({1.0, 0.0, 0.5}, 3.0);
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    ImpactModel model = exp_model(0.0, 1.0, 1.0);
    model.h = h;
    auto y = solve_impact(CadlagPath::constant(0, 1, 0.0), model, m);
    double v = 1.0;
    const int n = 2000000;
    for (int i = 0; i < n; ++i) v -= h(v) / n;
    EXPECT_NEAR(y.eval(1.0), v, 1e-6);
}

TEST(Impact, ObservedPriceIsProductForm) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 10, 2.0);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.3}, {1.0, 0.5});
    auto model = exp_model(1.0);
    auto tr = build_trajectory(th, m, model);
    auto s = observed_price(tr, model.g);
    EXPECT_NEAR(s.eval(0.3), 2.0 * std::exp(-0.5), 1e-14);
}

TEST(Impact, StrategyOnDifferentDomainThrows) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    EXPECT_THROW(solve_impact(CadlagPath::constant(0, 2, 0.0), exp_model(1.0), m), std::invalid_argument);
}

TEST(StochasticImpact, TransitionVarianceIsExact) {
    StochasticLiquidity liq{1.5, 0.7, 0.0};
    DriverSpec d = DriverSpec::flat();
    const double dt = 0.5;
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int p = 0; p < n; ++p) {
        auto m = simulate_market(d, 0.0, dt, dt, 17, static_cast<std::uint64_t>(p));
        auto y = solve_stochastic_impact(CadlagPath::constant(0, dt, 0.0), liq, m);
        double v = y.eval(dt);
        s += v;
        s2 += v * v;
    }
    double mean = s / n, var = s2 / n - mean * mean;
    double expected = 0.49 / 3.0 * (1 - std::exp(-2 * 1.5 * dt));
    EXPECT_NEAR(var, expected, 3 * expected * std::sqrt(2.0 / n));
    EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(expected / n));
}

TEST(StochasticImpact, ImpactFixingControlHoldsImpactConstant) {
    StochasticLiquidity liq{1.0, 0.6, 0.2};
    DriverSpec d = DriverSpec::flat();
    for (std::uint64_t p = 0; p < 10; ++p) {
        auto m = simulate_market(d, 0.0, 8.0, 1e-3, 5, p);
        auto fix = build_impact_fixing_strategy(liq, 1.0, -0.8, -1.0, m);
        auto tr = build_stochastic_trajectory(fix.strategy, liq, m);
        for (std::size_t k = 0; k < tr.size() && tr.t[k] < fix.tau; ++k) {
            if (k > 0) {
                EXPECT_NEAR(tr.y_l[k], -0.8, 1e-12);
            }
            EXPECT_NEAR(tr.y_r[k], -0.8, 1e-12);
        }
    }
}

TEST(StochasticImpact, OffGridStrategyThrows) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.55}, {1.0, 0.0});
    EXPECT_THROW(solve_stochastic_impact(th, {1, 0.1, 0}, m), std::invalid_argument);
}
