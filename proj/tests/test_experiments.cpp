#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "impactlab/experiments.hpp"

using namespace impactlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("impactlab_test_" + name);
    std::filesystem::remove_all(d);
    return d;
}

const Check* find_check(const Report& r, const std::string& fragment) {
    for (const auto& c : r.checks)
        if (c.name.find(fragment) != std::string::npos) return &c;
    return nullptr;
}

}  // namespace

TEST(Config, MergeReplacesLeavesAndMergesObjects) {
    json base = {{"a", 1}, {"b", {{"c", 2}, {"d", 3}}}};
    json out = merged(base, {{"b", {{"c", 5}}}, {"e", true}});
    EXPECT_EQ(out["a"], 1);
    EXPECT_EQ(out["b"]["c"], 5);
    EXPECT_EQ(out["b"]["d"], 3);
    EXPECT_EQ(out["e"], true);
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW(run_block_closed_form({{"tolerance", 1.0}}, 1), ConfigError);
    EXPECT_THROW(market_from_json({{"kind", "deterministic"}, {"sigmaa", 0.1}}), ConfigError);
}

TEST(Config, DeterministicMarketRefusesNoise) {
    EXPECT_THROW(market_from_json({{"kind", "deterministic"}, {"sigma", 0.1}}), ConfigError);
    EXPECT_THROW(market_from_json({{"kind", "random"}}), ConfigError);
    auto c = market_from_json({{"kind", "simulated"}, {"sigma", 0.1}, {"horizon", 2.0}, {"dt", 0.01}});
    auto m = c.make(3, 0);
    EXPECT_EQ(m.t.size(), 201u);
}

TEST(Config, CurvesAndStrategies) {
    auto f = curve_from_json({{"kind", "exp"}, {"params", {2.0}}});
    EXPECT_DOUBLE_EQ(f.f(0.5), std::exp(1.0));
    EXPECT_THROW(curve_from_json({{"kind", "exp"}}), ConfigError);
    EXPECT_THROW(resilience_from_json({{"kind", "polynomial"}, {"params", {0.0, 1.0}}}), ConfigError);
    auto x = strategy_from_json(json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "linear"}},
                                             {{"t", 1.0}, {"left", 0.0}, {"right", 0.0}, {"kind", "constant"}}}));
    EXPECT_DOUBLE_EQ(x.eval(0.25), 0.75);
    EXPECT_THROW(model_from_json({{"eta", 0.0}}), ConfigError);
}

TEST(Helpers, ParallelMapKeepsOrderAndRethrows) {
    auto one = parallel_map(101, [](std::size_t i) { return static_cast<double>(i * i); }, 1);
    auto four = parallel_map(101, [](std::size_t i) { return static_cast<double>(i * i); }, 4);
    EXPECT_EQ(one, four);
    EXPECT_THROW(parallel_map(
                     10,
                     [](std::size_t i) {
                         if (i == 7) throw std::runtime_error("boom");
                         return 0;
                     },
                     3),
                 std::runtime_error);
}

TEST(Helpers, StatsOfKnownSample) {
    auto s = stats({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(Helpers, SliceAndRestrictAgree) {
    DriverSpec d = DriverSpec::flat();
    d.sigma = 0.3;
    auto m = simulate_market(d, 0.0, 2.0, 0.01, 4, 1);
    auto s = slice_market(m, 0.5);
    EXPECT_EQ(s.t.back(), 0.5);
    EXPECT_EQ(s.sbar.size(), s.t.size());
    EXPECT_EQ(s.dB.size(), s.t.size() - 1);
    EXPECT_EQ(s.sbar.back(), m.sbar[s.t.size() - 1]);
    auto x = CadlagPath::step(0.0, 2.0, 1.0, {0.0, 0.5, 1.0}, {1.0, 0.4, 0.0});
    auto r = restrict_path(x, 1.0);
    EXPECT_EQ(r.end(), 1.0);
    EXPECT_EQ(r.terminal_right(), 0.0);
    EXPECT_EQ(r.eval(0.7), 0.4);
    EXPECT_THROW(restrict_path(x, 0.7), std::invalid_argument);
    EXPECT_THROW(slice_market(m, 0.505), std::invalid_argument);
}

TEST(Helpers, AdhocSumUndershootsForSingleBlock) {
    ImpactModel model{Resilience::zero(), PriceImpact::multiplicative(ImpactCurve::exponential(1.0)), 1.0, 0.0};
    auto m = deterministic_market(1.0, 0.0, 1.0, 10);
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0}, {0.0});
    EXPECT_NEAR(adhoc_block_proceeds(th, m, model), std::exp(-1.0), 1e-15);
}

TEST(Experiments, SameSeedGivesIdenticalFiles) {
    auto a = scratch_dir("a"), b = scratch_dir("b");
    json over = {{"strategies", 5}, {"cells", 200}};
    write_report(run_form_equivalence(over, 9), a);
    write_report(run_form_equivalence(over, 9), b);
    for (const char* f : {"config.json", "summary.json", "forms.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    auto c = scratch_dir("c");
    write_report(run_form_equivalence(over, 10), c);
    EXPECT_NE(slurp(a / "forms.csv"), slurp(c / "forms.csv"));
}

TEST(Experiments, MonteCarloIsThreadIndependent) {
    json over = {{"paths", 40}, {"cases", json::array({{{"beta", 1.0}, {"sigma_hat", 0.5}, {"y0_minus", 0.0},
                                                       {"theta0_minus", 1.0}, {"ytilde", -1.0}, {"upsilon", 0.0}}})}};
    auto r1 = run_hitting_time_mc(over, 3);
    auto r2 = run_hitting_time_mc(over, 3);
    EXPECT_EQ(r1.tables["hittime.csv"].csv(), r2.tables["hittime.csv"].csv());
}

TEST(Experiments, SmallRunsPass) {
    EXPECT_TRUE(run_block_closed_form({}, 1).pass());
    EXPECT_TRUE(run_form_equivalence({{"strategies", 5}}, 2).pass());
    EXPECT_TRUE(run_metric_suite({{"pairs", 10}, {"triples", 5}, {"certificates", 5}}, 3).pass());
    EXPECT_TRUE(run_adhoc_pitfall({}, 4).pass());
    EXPECT_TRUE(run_zero_laws({{"paths", 1}}, 5).pass());
}

TEST(Experiments, ConstantStrategyHasZeroDistances) {
    json over = {{"strategy", json::array({{{"t", 0.0}, {"left", 0.7}, {"right", 0.7}, {"kind", "constant"}},
                                           {{"t", 1.0}, {"left", 0.7}, {"right", 0.7}, {"kind", "constant"}}})},
                 {"approximators", {"wz", "grid", "jumpcap"}},
                 {"levels", {4, 8}},
                 {"markets", json::array({{{"kind", "simulated"}, {"dt", 0.01}, {"sigma", 0.3}}})}};
    auto r = run_convergence_study(over, 6);
    const Check* c = find_check(r, "constant strategy");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(r.pass());
    EXPECT_LE(c->value, 1e-12);
}

TEST(Experiments, NoiselessHittingTimeIsDeterministic) {
    json over = {{"paths", 20},
                 {"cases", json::array({{{"beta", 1.0}, {"sigma_hat", 0.0}, {"y0_minus", 0.0}, {"theta0_minus", 1.0},
                                         {"ytilde", -1.0}, {"upsilon", 0.0}}})}};
    auto r = run_hitting_time_mc(over, 8);
    EXPECT_TRUE(r.pass());
    const auto& row = r.tables["hittime.csv"].rows.at(0);
    EXPECT_EQ(row[3], "0");
}

TEST(Experiments, NoArbitrageNeedsTheDrift) {
    json over = {{"paths", 400}, {"pathwise_paths", 1}, {"pathwise_dt", 1e-3}};
    EXPECT_TRUE(run_noarbitrage_mc(over, 11).pass());
    over["drift"] = "none";
    auto r = run_noarbitrage_mc(over, 11);
    EXPECT_FALSE(r.pass());
}

TEST(Experiments, LiquidationClosedFormChecks) {
    auto r = run_liquidation_mc({{"paths", 0}}, 1);
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.summary["eta_hat"], 1.0);
    auto mc = run_liquidation_mc({{"paths", 300}, {"competitors", 4}}, 2);
    EXPECT_TRUE(mc.pass());
}

TEST(Experiments, PitfallGapShrinks) {
    auto r = run_adhoc_pitfall({{"n", {1, 10, 100}}}, 1);
    const auto& rows = r.tables["pitfall.csv"].rows;
    ASSERT_EQ(rows.size(), 3u);
    double target = std::stod(rows[0][4]);
    double prev = 1e300;
    for (const auto& row : rows) {
        double gap = target - std::stod(row[1]);
        EXPECT_GT(gap, 0.0);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(Configs, ShippedFilesMatchAcceptanceSetups) {
    const std::filesystem::path dir = std::filesystem::path(IMPACTLAB_SOURCE_DIR) / "configs";
    for (const auto& c : acceptance_criteria()) {
        json file = load_config((dir / (c.name + ".json")).string());
        EXPECT_EQ(merged(experiment_defaults(c.experiment), file), merged(experiment_defaults(c.experiment), c.overrides))
            << c.name;
    }
    EXPECT_EQ(load_config((dir / "monotone.json").string()), monotone_defaults());
}

TEST(Configs, CriteriaAreAddressableByNameAndNumber) {
    EXPECT_EQ(find_criterion("8").name, "dominance");
    EXPECT_EQ(find_criterion("lp").id, 6);
    EXPECT_THROW(find_criterion("nope"), ConfigError);
    EXPECT_EQ(acceptance_criteria().size(), 11u);
}
