// impactlab command line driver. Every subcommand writes its artifacts to
// <out>/<experiment>/<timestamp>/ and exits 0 iff all of its checks pass.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "impactlab/experiments.hpp"

using namespace impactlab;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = "results";
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file (comments allowed)");
    sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
    sub->add_option("--out", c.out, "base output directory")->capture_default_str();
}

json config_of(const Common& c) { return c.config.empty() ? json::object() : load_config(c.config); }

/// <base>/<experiment>/<UTC timestamp>, with -2, -3, ... on collision.
fs::path run_dir(const std::string& base, const std::string& experiment) {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    fs::path dir = fs::path(base) / experiment / stamp.str();
    for (int i = 2; fs::exists(dir); ++i) dir = fs::path(base) / experiment / (stamp.str() + "-" + std::to_string(i));
    return dir;
}

int finish(const Report& r, const Common& c) {
    fs::path dir = run_dir(c.out, r.experiment);
    write_report(r, dir);
    for (const auto& chk : r.checks)
        std::cerr << (chk.pass ? "PASS " : "FAIL ") << chk.name << ": " << fmt(chk.value) << ' ' << chk.relation << ' '
                  << fmt(chk.bound) << '\n';
    std::cerr << "wrote " << dir.string() << '\n';
    return r.pass() ? 0 : 1;
}

int cmd_metric(const Common& c, const std::vector<std::string>& files, const std::string& which, double tol,
               int warp_grid) {
    if (files.size() != 2) throw ConfigError("metric needs exactly two path files");
    json cfg = merged({{"metric", which}, {"tol", tol}, {"warp_grid", warp_grid}}, config_of(c));
    require_keys(cfg, {"metric", "tol", "warp_grid"}, "metric config");
    cfg["x"] = files[0];
    cfg["y"] = files[1];
    const CadlagPath x = read_path_json(files[0]), y = read_path_json(files[1]);
    const std::string m = cfg["metric"];
    double d;
    if (m == "uniform") d = d_uniform(x, y);
    else if (m == "j1") d = d_j1_upper(x, y, cfg["warp_grid"]);
    else if (m == "m1") d = d_m1(x, y, cfg["tol"]);
    else if (m == "lp") d = d_levy_prokhorov(x, y, cfg["tol"]);
    else throw ConfigError("metric must be uniform, j1, m1 or lp");
    Report r("metric", cfg);
    r.summary = {{"metric", m}, {"distance", d}};
    std::cout << fmt(d) << '\n';
    return finish(r, c);
}

int cmd_proceeds(const Common& c, const std::string& strategy_file, const std::string& market_file,
                 const std::string& form, double dt) {
    json cfg = config_of(c);
    require_keys(cfg, {"model", "market", "strategy", "form"}, "proceeds config");
    if (!strategy_file.empty()) cfg["strategy"] = strategy_file;
    if (!market_file.empty()) cfg["market"] = load_config(market_file);
    if (!form.empty()) cfg["form"] = form;
    if (!cfg.contains("strategy")) throw ConfigError("proceeds needs --strategy");
    if (!cfg.contains("form")) cfg["form"] = "fv";
    json mj = cfg.value("market", json::object());
    if (dt > 0) mj["dt"] = dt;
    const CadlagPath th = strategy_from_json(cfg["strategy"]);
    mj["t0"] = th.start();
    mj["horizon"] = th.end() - th.start();
    cfg["market"] = mj;
    const MarketConfig mc = market_from_json(mj);
    const ImpactModel model = model_from_json(cfg.value("model", json::object()));
    const auto knots = knot_times(th);
    const MarketScenario m = mc.make(c.seed, 0, knots, knots);
    CadlagPath running = th;
    json breakdown = proceeds_by_form(cfg["form"], th, m, model, &running);
    Report r("proceeds", cfg);
    r.summary = breakdown;
    Table t{{"t", "left", "right"}, {}};
    for (const auto& k : running.knots()) t.rows.push_back({fmt(k.t), fmt(k.left), fmt(k.right)});
    r.tables["running.csv"] = t;
    std::cout << breakdown.dump(2) << '\n';
    return finish(r, c);
}

int cmd_approx(const Common& c, const std::string& input, const std::string& op, int n, double extend) {
    json cfg = merged({{"op", op}, {"param", n}, {"extend", extend}}, config_of(c));
    require_keys(cfg, {"op", "param", "extend", "input"}, "approx config");
    if (!input.empty()) cfg["input"] = input;
    if (!cfg.contains("input")) throw ConfigError("approx needs --input");
    CadlagPath x = strategy_from_json(cfg["input"]);
    const double E = cfg["extend"];
    if (E > 0) x = extend_path(x, E);
    const int param = cfg["param"];
    if (param < 1) throw ConfigError("--param must be positive");
    const std::string o = cfg["op"];
    Report r("approx", cfg);
    CadlagPath out = x;
    if (o == "wz") out = wz_average(x, 1.0 / param);
    else if (o == "grid") out = grid_discretize(x, equidistant_nodes(x.start(), x.end(), static_cast<std::size_t>(param)));
    else if (o == "jumpcap") {
        auto j = jump_capped_simple(x, param);
        out = j.path;
        r.summary["steps"] = j.steps;
        r.summary["eps"] = j.eps;
    } else if (o == "certificate") {
        auto cert = wz_parametric_certificate(x, param);
        out = cert.smoothed;
        r.summary["certified_distance"] = cert.certified_distance;
        Table t{{"s", "u", "r", "u_n", "r_n"}, {}};
        for (std::size_t i = 0; i < cert.s.size(); ++i)
            t.rows.push_back({fmt(cert.s[i]), fmt(cert.u[i]), fmt(cert.r[i]), fmt(cert.u_n[i]), fmt(cert.r_n[i])});
        r.tables["certificate.csv"] = t;
    } else
        throw ConfigError("--op must be wz, grid, jumpcap or certificate");
    r.summary["path"] = path_to_json(out);
    std::cout << path_to_json(out).dump() << '\n';
    int rc = finish(r, c);
    return rc;
}

int cmd_liquidate(const Common& c, const std::string& mode, long paths) {
    json cfg = config_of(c);
    if (paths >= 0) cfg["paths"] = paths;
    if (mode == "impact-fixing") {
        Report r = run_liquidation_mc(cfg, c.seed);
        json out;
        for (const char* k : {"eta_hat", "Upsilon_hat", "Ytilde_hat", "expected_proceeds", "mc_mean", "mc_se"})
            out[k] = r.summary.contains(k) ? r.summary[k] : json(nullptr);
        std::cout << out.dump(2) << '\n';
        return finish(r, c);
    }
    if (mode == "monotone") {
        cfg.erase("paths");
        Report r = run_monotone(cfg, c.seed);
        std::cout << r.summary.dump(2) << '\n';
        return finish(r, c);
    }
    throw ConfigError("--mode must be impact-fixing or monotone");
}

int cmd_experiment(const Common& c, const std::string& experiment) {
    Report r = run_experiment(experiment, config_of(c), c.seed);
    std::cout << r.to_json()["summary"].dump(2) << '\n';
    return finish(r, c);
}

int cmd_check(const Common& c, const std::vector<std::string>& names) {
    std::vector<Criterion> todo;
    for (const auto& n : names) {
        if (n == "all") {
            auto all = acceptance_criteria();
            todo.insert(todo.end(), all.begin(), all.end());
        } else {
            todo.push_back(find_criterion(n));
        }
    }
    if (todo.empty()) throw ConfigError("check needs a criterion name, number or 'all'");
    const json extra = config_of(c);
    int rc = 0;
    for (const auto& crit : todo) {
        Report r = run_experiment(crit.experiment, merged(crit.overrides, extra), c.seed);
        r.experiment = "check-" + crit.name;
        fs::path dir = run_dir(c.out, r.experiment);
        write_report(r, dir);
        std::cout << "criterion " << crit.id << " (" << crit.name << "): " << (r.pass() ? "PASS" : "FAIL") << '\n';
        for (const auto& chk : r.checks)
            if (!chk.pass)
                std::cout << "  failed: " << chk.name << ": " << fmt(chk.value) << ' ' << chk.relation << ' '
                          << fmt(chk.bound) << '\n';
        if (!r.pass()) rc = 1;
    }
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"impactlab: proceeds, approximations and liquidation experiments for transient price impact"};
    app.require_subcommand(1);
    Common common;

    auto* metric = app.add_subcommand("metric", "distance between two path JSON files");
    std::vector<std::string> metric_files;
    std::string metric_which = "m1";
    double metric_tol = 1e-6;
    int warp_grid = 64;
    metric->add_option("paths", metric_files, "two path JSON files")->expected(2);
    metric->add_option("--metric", metric_which, "uniform, j1, m1 or lp")->capture_default_str();
    metric->add_option("--tol", metric_tol, "bisection tolerance")->capture_default_str();
    metric->add_option("--warp-grid", warp_grid, "uniform cells in the J1 warp search")->capture_default_str();
    add_common(metric, common);

    auto* proceeds = app.add_subcommand("proceeds", "proceeds of a strategy in one market scenario");
    std::string strategy_file, market_file, form;
    double dt = 0;
    proceeds->add_option("--strategy", strategy_file, "strategy path JSON");
    proceeds->add_option("--market", market_file, "market config JSON");
    proceeds->add_option("--form", form, "fv, general, semimartingale, marcus or eta");
    proceeds->add_option("--dt", dt, "market grid step");
    add_common(proceeds, common);

    auto* approx = app.add_subcommand("approx", "approximate a strategy");
    std::string approx_input, approx_op = "wz";
    int approx_n = 8;
    double approx_extend = 0;
    approx->add_option("--input", approx_input, "path JSON");
    approx->add_option("--op", approx_op, "wz, grid, jumpcap or certificate")->capture_default_str();
    approx->add_option("--param", approx_n, "level n")->capture_default_str();
    approx->add_option("--extend", approx_extend, "extend the path by this much on both sides first");
    add_common(approx, common);

    auto* liquidate = app.add_subcommand("liquidate", "optimal liquidation");
    std::string mode = "impact-fixing";
    long paths = -1;
    liquidate->add_option("--mode", mode, "impact-fixing or monotone")->capture_default_str();
    liquidate->add_option("--paths", paths, "Monte Carlo paths");
    add_common(liquidate, common);

    std::map<std::string, CLI::App*> experiments;
    for (const char* name : {"converge", "pitfall", "noarb", "hittime", "oracle", "block", "metrics", "zero"}) {
        experiments[name] = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        add_common(experiments[name], common);
    }

    auto* check = app.add_subcommand("check", "run acceptance criteria by name or number, or 'all'");
    std::vector<std::string> check_names;
    check->add_option("names", check_names, "criteria")->required();
    add_common(check, common);

    CLI11_PARSE(app, argc, argv);
    try {
        if (metric->parsed()) return cmd_metric(common, metric_files, metric_which, metric_tol, warp_grid);
        if (proceeds->parsed()) return cmd_proceeds(common, strategy_file, market_file, form, dt);
        if (approx->parsed()) return cmd_approx(common, approx_input, approx_op, approx_n, approx_extend);
        if (liquidate->parsed()) return cmd_liquidate(common, mode, paths);
        if (check->parsed()) return cmd_check(common, check_names);
        for (const auto& [name, sub] : experiments)
            if (sub->parsed()) return cmd_experiment(common, name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
