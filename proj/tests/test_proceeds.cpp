#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "impactlab/metrics.hpp"
#include "impactlab/proceeds.hpp"
#include "test_support.hpp"

using namespace impactlab;

namespace {

ImpactModel exp_model(double beta, double lambda = 1.0, double y0 = 0.0) {
    return {Resilience::linear(beta), PriceImpact::multiplicative(ImpactCurve::exponential(lambda)), 1.0, y0};
}

/// g(x, y) = x e^y + 0.1 x^2 / (1 + e^-y): not of product form, G_xx != 0.
PriceImpact mixed_impact() {
    GenericImpact gi;
    auto sig = [](double y) { return 1.0 / (1.0 + std::exp(-y)); };
    gi.g = [sig](double x, double y) { return x * std::exp(y) + 0.1 * x * x * sig(y); };
    gi.g_x = [sig](double x, double y) { return std::exp(y) + 0.2 * x * sig(y); };
    gi.g_xx = [sig](double, double y) { return 0.2 * sig(y); };
    gi.g_y = [sig](double x, double y) { return x * std::exp(y) + 0.1 * x * x * sig(y) * (1 - sig(y)); };
    return PriceImpact::generic(gi);
}

DriverSpec jumpy_driver() {
    DriverSpec d = DriverSpec::flat();
    d.sigma = 0.3;
    d.set_xi(0.1);
    d.jump_intensity = 3;
    d.jump_law = JumpLaw::uniform(-0.2, 0.2);
    return d;
}

}  // namespace

TEST(Proceeds, SingleBlockClosedForm) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 100);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.5}, {1.0, 0.0});
    auto model = exp_model(0.0);
    EXPECT_NEAR(proceeds_fv(th, m, model).total, 1 - std::exp(-1.0), 1e-12);
    model.eta = 0.5;
    EXPECT_NEAR(proceeds_fv(th, m, model).total, 2 * (1 - std::exp(-0.5)), 1e-12);
}

TEST(Proceeds, LinearSaleWithoutResilience) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 1000);
    auto th = CadlagPath::polyline({0.0, 1.0}, {1.0, 0.0});
    auto r = proceeds_continuous_fv(th, m, exp_model(0.0));
    EXPECT_NEAR(r.total, 1 - std::exp(-1.0), 1e-7);
}

TEST(Proceeds, LinearSaleWithResilienceAgainstQuadrature) {
    const double b = 1.7;
    auto m = deterministic_market(1.0, 0.0, 1.0, 1000);
    auto th = CadlagPath::polyline({0.0, 1.0}, {1.0, 0.0});
    auto r = proceeds_continuous_fv(th, m, exp_model(b));
    double oracle = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [b](double t) { return std::exp(-(1 - std::exp(-b * t)) / b); }, 0.0, 1.0);
    EXPECT_NEAR(r.total, oracle, 1e-7);
    auto g = proceeds_general(th, m, exp_model(b));
    EXPECT_NEAR(g.total, oracle, 1e-7);
}

TEST(Proceeds, ContinuousFormRejectsJumps) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.5}, {1.0, 0.0});
    EXPECT_THROW(proceeds_continuous_fv(th, m, exp_model(1.0)), std::invalid_argument);
}

TEST(Proceeds, FormsAgreeOnStepStrategies) {
    std::mt19937_64 rng(2024);
    auto m = deterministic_market(1.0, 0.0, 2.0, 2000);
    for (int i = 0; i < 25; ++i) {
        auto th = random_step_strategy(rng, 2.0, 10, 0.01);
        auto model = exp_model(1.0 + 0.1 * i, 1.0, 0.1);
        double fv = proceeds_fv(th, m, model).total;
        EXPECT_NEAR(proceeds_semimartingale(th, m, model).total, fv, 1e-12);
        EXPECT_NEAR(marcus_oracle(th, m, model).total, fv, 1e-9);
        double gen = proceeds_general(th, m, model).total;
        EXPECT_LE(std::abs(gen - fv), 1e-6 * std::max(1.0, std::abs(fv)));
    }
}

TEST(Proceeds, FormsAgreeForNonProductImpact) {
    std::mt19937_64 rng(7);
    auto m = deterministic_market(1.0, 0.0, 1.0, 1000, 1.5);
    ImpactModel model{Resilience::polynomial({1.0, 0.0, 0.3}, 4.0), mixed_impact(), 1.0, 0.0};
    for (int i = 0; i < 5; ++i) {
        auto th = random_step_strategy(rng, 1.0, 6, 0.01);
        double fv = proceeds_fv(th, m, model).total;
        EXPECT_NEAR(marcus_oracle(th, m, model).total, fv, 1e-8);
        EXPECT_NEAR(proceeds_general(th, m, model).total, fv, 1e-6 * std::max(1.0, std::abs(fv)));
    }
}

TEST(Proceeds, FormsAgreeUnderJumpyPrice) {
    auto d = jumpy_driver();
    auto th = PathBuilder(0.0, 1.0).line_to(0.3, 0.7).jump_to(0.4).line_to(0.8, 0.1).jump_to(-0.2).line_to(1.0, 0.0).build();
    std::vector<double> forbid{0.3, 0.8};
    for (std::uint64_t p = 0; p < 5; ++p) {
        auto m = simulate_market(d, 0.0, 1.0, 1e-4, 31, p, forbid);
        auto model = exp_model(1.2, 1.0, 0.0);
        double fv = proceeds_fv(th, m, model).total;
        double scale = std::max(1.0, std::abs(fv));
        EXPECT_NEAR(marcus_oracle(th, m, model).total, fv, 1e-6 * scale);
        EXPECT_NEAR(proceeds_general(th, m, model).total, fv, 5e-3 * scale);
        EXPECT_NEAR(proceeds_semimartingale(th, m, model).total, fv, 5e-3 * scale);
        EXPECT_NEAR(proceeds_partial_recovery(th, m, model).total, proceeds_general(th, m, model).total, 1e-9 * scale);
    }
}

TEST(Proceeds, NonProductImpactUnderStochasticPrice) {
    DriverSpec d = DriverSpec::flat();
    d.sigma = 0.4;
    auto th = PathBuilder(0.0, 1.0).line_to(0.5, 0.5).jump_to(0.2).line_to(1.0, 0.0).build();
    ImpactModel model{Resilience::linear(1.0), mixed_impact(), 1.0, 0.0};
    for (std::uint64_t p = 0; p < 3; ++p) {
        auto m = simulate_market(d, 0.0, 1.0, 1e-4, 8, p, {0.5});
        double fv = proceeds_fv(th, m, model).total;
        EXPECT_NEAR(proceeds_general(th, m, model).total, fv, 5e-3 * std::max(1.0, std::abs(fv)));
    }
}

TEST(Proceeds, SemimartingaleStrategyAgreesWithGeneralForm) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> z(0.0, 1.0);
    const int n = 10000;
    std::vector<double> t(n + 1), v(n + 1);
    v[0] = 1.0;
    for (int i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / n;
    for (int i = 1; i <= n; ++i) v[i] = v[i - 1] - 1.0 / n + 0.5 * std::sqrt(1.0 / n) * z(rng);
    auto th = CadlagPath::polyline(t, v);
    auto m = deterministic_market(1.0, 0.0, 1.0, n);
    auto model = exp_model(1.0);
    double semi = proceeds_semimartingale(th, m, model).total;
    double gen = proceeds_general(th, m, model).total;
    EXPECT_NEAR(semi, gen, 5e-3);
}

TEST(Proceeds, ConstantStrategyEarnsNothing) {
    auto model = exp_model(1.5, 1.0, 0.7);
    auto th = CadlagPath::constant(0.0, 1.0, 0.4);
    auto det = deterministic_market(1.0, 0.0, 1.0, 1000);
    EXPECT_NEAR(proceeds_fv(th, det, model).total, 0.0, 1e-15);
    EXPECT_NEAR(proceeds_general(th, det, model).total, 0.0, 1e-8);
    EXPECT_NEAR(marcus_oracle(th, det, model).total, 0.0, 1e-15);
    auto d = jumpy_driver();
    for (std::uint64_t p = 0; p < 5; ++p) {
        auto m = simulate_market(d, 0.0, 1.0, 1e-3, 77, p);
        double scale = m.sbar.back() * std::exp(0.7);
        EXPECT_NEAR(proceeds_general(th, m, model).total, 0.0, 1e-6 * scale);
        EXPECT_NEAR(proceeds_partial_recovery(th, m, model).total, 0.0, 1e-6 * scale);
    }
}

TEST(Proceeds, PartialRecoveryMatchesBlockForm) {
    auto m = deterministic_market(1.0, 0.0, 1.0, 2000);
    auto th = PathBuilder(0.0, 1.0).hold_to(0.2).jump_to(0.5).line_to(0.6, 0.2).hold_to(0.9).jump_to(0.0).hold_to(1.0).build();
    auto model = exp_model(2.0, 1.5, 0.3);
    model.eta = 0.4;
    double fv = proceeds_fv(th, m, model).total;
    EXPECT_NEAR(proceeds_partial_recovery(th, m, model).total, fv, 1e-6);
    EXPECT_NEAR(proceeds_general(th, m, model).total, fv, 1e-6);
}

TEST(Proceeds, CommonJumpIsRejectedByOracle) {
    DriverSpec d = DriverSpec::flat();
    d.jump_intensity = 100;
    d.jump_law = JumpLaw::fixed(0.1);
    auto m = simulate_market(d, 0.0, 1.0, 0.01, 1, 0);
    ASSERT_FALSE(m.jump_times.empty());
    double jt = m.jump_times.front();
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, jt}, {1.0, 0.0});
    EXPECT_THROW(marcus_oracle(th, m, exp_model(1.0)), std::invalid_argument);
}

TEST(LiquidationValue, ContinuousAcrossBlocksAndMatchesDynamics) {
    DriverSpec d = DriverSpec::flat();
    d.sigma = 0.3;
    d.set_xi(0.2);
    auto th = PathBuilder(0.0, 1.0).hold_to(0.25).jump_to(0.6).line_to(0.75, 0.3).jump_to(0.1).hold_to(1.0).build();
    std::vector<double> forbid{0.25, 0.75};
    auto model = exp_model(1.0, 1.0, 0.0);
    for (std::uint64_t p = 0; p < 3; ++p) {
        auto m = simulate_market(d, 0.0, 1.0, 1e-4, 3, p, forbid);
        auto v = liquidation_value(th, m, model, 0.5);
        for (double t : forbid) EXPECT_NEAR(v.eval(t), v.left_limit(t), 1e-12);
        auto w = liquidation_value_sde(th, m, model, 0.5);
        EXPECT_LE(d_uniform(v, w), 5e-3);
    }
}
