#ifndef IMPACTLAB_EXPERIMENTS_HPP
#define IMPACTLAB_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "approx.hpp"
#include "cadlag_path.hpp"
#include "config.hpp"
#include "impact.hpp"
#include "liquidation.hpp"
#include "market.hpp"
#include "metrics.hpp"
#include "path_io.hpp"
#include "proceeds.hpp"

namespace impactlab {

// ---------------------------------------------------------------------------
// Reports

struct Check {
    std::string name;
    double value = 0;
    double bound = 0;
    std::string relation;  ///< "<=", ">=" or "=="
    bool pass = false;
};

/// CSV table; cells are preformatted strings.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const {
        std::ostringstream out;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out.str();
    }
};

struct Report {
    Report(std::string name, json cfg) : experiment(std::move(name)), config(std::move(cfg)) {}

    std::string experiment;
    json config;
    json summary = json::object();
    std::vector<Check> checks;
    std::map<std::string, Table> tables;  ///< file name -> table
    std::vector<std::string> timing;      ///< wall-clock notes, kept out of the CSV/JSON outputs

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }

    Check& le(const std::string& name, double value, double bound) {
        checks.push_back({name, value, bound, "<=", value <= bound});
        return checks.back();
    }
    Check& ge(const std::string& name, double value, double bound) {
        checks.push_back({name, value, bound, ">=", value >= bound});
        return checks.back();
    }
    Check& eq(const std::string& name, double value, double bound) {
        checks.push_back({name, value, bound, "==", value == bound});
        return checks.back();
    }

    json to_json() const {
        json j;
        j["experiment"] = experiment;
        j["pass"] = pass();
        j["checks"] = json::array();
        for (const auto& c : checks)
            j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"relation", c.relation},
                                   {"pass", c.pass}});
        j["summary"] = summary;
        return j;
    }
};

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Writes config.json, summary.json, the CSV tables and timing.txt (when
/// there is timing to report) into `dir`.
inline void write_report(const Report& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        out << text;
    };
    put("config.json", r.config.dump(2) + "\n");
    put("summary.json", r.to_json().dump(2) + "\n");
    for (const auto& [name, t] : r.tables) put(name, t.csv());
    if (!r.timing.empty()) {
        std::string timing;
        for (const auto& s : r.timing) timing += s + "\n";
        put("timing.txt", timing);
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo helpers

struct Stats {
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

inline Stats stats(const std::vector<double>& v) {
    Stats s;
    s.n = v.size();
    if (v.empty()) return s;
    double acc = 0;
    for (double x : v) acc += x;
    s.mean = acc / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
    }
    return s;
}

inline unsigned worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

/// Runs fn(i) for i in [0, n) on worker threads; results are stored by index,
/// so any reduction over them is independent of the thread schedule.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn, unsigned threads = 0) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out(n);
    if (threads == 0) threads = worker_count();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// Path helpers

/// Random cadlag path on [t0, t1] with a few knots, jumps and sloped pieces.
inline CadlagPath random_path(std::mt19937_64& rng, double t0 = 0.0, double t1 = 1.0, int max_knots = 5,
                             bool monotone = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> nk(1, max_knots);
    int n = nk(rng);
    std::vector<double> times;
    for (int i = 0; i < n; ++i) times.push_back(t0 + (t1 - t0) * (0.05 + 0.9 * u(rng)));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double v = monotone ? 0.0 : 2 * u(rng) - 1;
    PathBuilder b(t0, v);
    for (double t : times) {
        double next = monotone ? v + u(rng) : 2 * u(rng) - 1;
        if (u(rng) < 0.5) b.line_to(t, next);
        else b.hold_to(t);
        v = b.value();
        if (u(rng) < 0.6) {
            double j = monotone ? v + u(rng) : 2 * u(rng) - 1;
            b.jump_to(j);
            v = j;
        }
    }
    double last = monotone ? v + 0.5 * u(rng) : 2 * u(rng) - 1;
    if (u(rng) < 0.5) b.line_to(t1, last);
    else b.hold_to(t1);
    return b.build();
}

/// Random step strategy on [0, t1] with jumps on multiples of `grid`.
inline CadlagPath random_step_strategy(std::mt19937_64& rng, double t1, int max_jumps, double grid) {
    std::uniform_int_distribution<int> nj(1, max_jumps);
    std::uniform_int_distribution<int> cell(1, static_cast<int>(std::llround(t1 / grid)) - 1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int n = nj(rng);
    std::vector<double> times;
    for (int i = 0; i < n; ++i) times.push_back(cell(rng) * grid);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < times.size(); ++i) values.push_back(u(rng));
    return CadlagPath::step(0.0, t1, u(rng), times, values);
}

/// x restricted to [start, t_end]; t_end must be a knot of x. The value
/// x(t_end) becomes the terminal right value.
inline CadlagPath restrict_path(const CadlagPath& x, double t_end) {
    std::vector<Knot> k;
    std::vector<SegmentKind> kinds;
    for (std::size_t i = 0; i < x.knots().size() && x.knots()[i].t <= t_end; ++i) {
        k.push_back(x.knots()[i]);
        if (i > 0) kinds.push_back(x.kinds()[i - 1]);
    }
    if (k.empty() || k.back().t != t_end) throw std::invalid_argument("restrict_path: t_end must be a knot");
    if (k.size() == 1) throw std::invalid_argument("restrict_path: empty domain");
    return CadlagPath(std::move(k), std::move(kinds));
}

/// Market restricted to the grid times up to t_end, which must lie within
/// 1e-9 of a grid time; that grid time is moved onto t_end.
inline MarketScenario slice_market(const MarketScenario& m, double t_end) {
    auto it = std::lower_bound(m.t.begin(), m.t.end(), t_end - 1e-9);
    if (it == m.t.end() || std::abs(*it - t_end) > 1e-9)
        throw std::invalid_argument("slice_market: t_end must be a grid time");
    const std::size_t n = static_cast<std::size_t>(it - m.t.begin()) + 1;
    if (n < 2) throw std::invalid_argument("slice_market: empty domain");
    MarketScenario s = m;
    s.t.resize(n);
    s.sbar.resize(n);
    s.sbar_left.resize(n);
    s.clock.resize(n);
    s.dM.resize(n - 1);
    s.dB.resize(n - 1);
    s.t.back() = t_end;
    s.jump_times.erase(std::remove_if(s.jump_times.begin(), s.jump_times.end(), [&](double t) { return t > t_end; }),
                       s.jump_times.end());
    return s;
}

inline std::vector<double> knot_times(const CadlagPath& x) {
    std::vector<double> t;
    for (const auto& k : x.knots()) t.push_back(k.t);
    return t;
}

/// Proceeds in one of the named forms, with the running path as CSV samples.
inline json proceeds_by_form(const std::string& form, const CadlagPath& strategy, const MarketScenario& m,
                             const ImpactModel& model, CadlagPath* running = nullptr) {
    json j;
    j["form"] = form;
    auto keep = [&](const CadlagPath& p) {
        if (running) *running = p;
    };
    if (form == "fv") {
        auto r = proceeds_fv(strategy, m, model);
        j["total"] = r.total;
        keep(r.running);
    } else if (form == "general") {
        auto r = proceeds_general(strategy, m, model);
        j["stoch_integral"] = r.stoch_integral;
        j["drift_term"] = r.drift_term;
        j["delta_G"] = r.delta_G;
        j["jump_sum"] = r.jump_sum;
        j["total"] = r.total;
        keep(r.running);
    } else if (form == "semimartingale") {
        auto r = proceeds_semimartingale(strategy, m, model);
        j["total"] = r.total;
        keep(r.running);
    } else if (form == "marcus") {
        auto r = marcus_oracle(strategy, m, model);
        j["total"] = r.total;
        keep(r.running);
    } else if (form == "eta") {
        auto r = proceeds_partial_recovery(strategy, m, model);
        j["total"] = r.total;
        keep(r.running);
    } else {
        throw ConfigError("form must be fv, general, semimartingale, marcus or eta");
    }
    return j;
}

// ---------------------------------------------------------------------------
// Experiments. Each takes an override config (merged over the defaults
// returned by *_defaults()) and a seed.

inline json oracle_defaults() {
    return {{"strategies", 50}, {"max_jumps", 10}, {"horizon", 2.0}, {"cells", 2000}, {"tol_marcus", 1e-8},
            {"tol_general", 1e-6}, {"tol_semimartingale", 1e-6}};
}

/// Agreement of the proceeds forms on random step strategies over
/// deterministic markets with varied clock, drift and impact parameters.
inline Report run_form_equivalence(const json& overrides, std::uint64_t seed) {
    json cfg = merged(oracle_defaults(), overrides);
    require_keys(cfg, {"strategies", "max_jumps", "horizon", "cells", "tol_marcus", "tol_general", "tol_semimartingale"},
                 "oracle config");
    Report r{"oracle", cfg};
    const int n = cfg["strategies"];
    const double T = cfg["horizon"];
    const auto cells = cfg["cells"].get<std::size_t>();
    auto rng = make_stream(seed, 0, 11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Table t{{"case", "alpha", "drift", "beta", "lambda", "y0", "fv", "marcus", "general", "semimartingale"}, {}};
    double e_m = 0, e_g = 0, e_s = 0;
    for (int i = 0; i < n; ++i) {
        auto th = random_step_strategy(rng, T, cfg["max_jumps"], T / static_cast<double>(cells));
        double alpha = 0.5 + 1.5 * u(rng), drift = 0.5 * u(rng), beta = 3 * u(rng), lambda = 0.5 + u(rng);
        double y0 = u(rng) - 0.5;
        auto m = deterministic_market(alpha, 0.0, T, cells, 1.0, drift);
        ImpactModel model{Resilience::linear(beta), PriceImpact::multiplicative(ImpactCurve::exponential(lambda)), 1.0,
                          y0};
        double fv = proceeds_fv(th, m, model).total;
        double mc = marcus_oracle(th, m, model).total;
        double ge = proceeds_general(th, m, model).total;
        double se = proceeds_semimartingale(th, m, model).total;
        e_m = std::max(e_m, std::abs(fv - mc));
        e_g = std::max(e_g, std::abs(fv - ge) / (1 + std::abs(fv)));
        e_s = std::max(e_s, std::abs(fv - se));
        t.rows.push_back({std::to_string(i), fmt(alpha), fmt(drift), fmt(beta), fmt(lambda), fmt(y0), fmt(fv), fmt(mc),
                          fmt(ge), fmt(se)});
    }
    r.tables["forms.csv"] = t;
    r.le("max |fv - marcus|", e_m, cfg["tol_marcus"]);
    r.le("max |fv - general| / (1 + |fv|)", e_g, cfg["tol_general"]);
    r.le("max |fv - semimartingale|", e_s, cfg["tol_semimartingale"]);
    return r;
}

inline json block_defaults() { return {{"tol", 1e-10}, {"cells", 100}}; }

/// Single unit block sale with f = exp, S-bar = 1, Y(0-) = 0 at eta = 1 and 1/2.
inline Report run_block_closed_form(const json& overrides, std::uint64_t) {
    json cfg = merged(block_defaults(), overrides);
    require_keys(cfg, {"tol", "cells"}, "block config");
    Report r{"block", cfg};
    auto m = deterministic_market(1.0, 0.0, 1.0, cfg["cells"].get<std::size_t>());
    auto th = CadlagPath::step(0.0, 1.0, 1.0, {0.0, 0.5}, {1.0, 0.0});
    ImpactModel model{Resilience::linear(1.0), PriceImpact::multiplicative(ImpactCurve::exponential(1.0)), 1.0, 0.0};
    Table t{{"eta", "form", "value", "target"}, {}};
    for (double eta : {1.0, 0.5}) {
        model.eta = eta;
        const double target = (1 - std::exp(-eta)) / eta;
        const std::string e = fmt(eta);
        for (std::string form : {"fv", "general", "eta"}) {
            double v = proceeds_by_form(form, th, m, model)["total"];
            t.rows.push_back({e, form, fmt(v), fmt(target)});
            r.le("eta=" + e + " " + form + " |L - target|", std::abs(v - target), cfg["tol"]);
        }
    }
    r.tables["block.csv"] = t;
    return r;
}

inline json convergence_defaults() {
    return {{"approximators", {"wz"}},
            {"levels", {4, 8, 16, 32, 64}},
            {"extend", 0.25},
            {"strategy", json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "constant"}},
                                      {{"t", 1.0}, {"left", 1.0}, {"right", 0.0}, {"kind", "constant"}}})},
            {"strategies", nullptr},
            {"model", {{"h", {{"kind", "linear"}, {"params", {1.0}}}}, {"f", {{"kind", "exp"}, {"params", {1.0}}}}}},
            {"markets", json::array({{{"kind", "deterministic"}, {"dt", 1e-3}}})},
            {"paths", 1},
            {"tol", 1e-6},
            {"warp_grid", 32},
            {"final_m1_max", nullptr},
            {"j1_floor", nullptr},
            {"uniform_final_ratio", nullptr},
            {"lp_window_bound", false}};
}

namespace detail {

inline CadlagPath approximate(const std::string& kind, const CadlagPath& x, const CadlagPath& x_ext, int n, double E) {
    if (kind == "wz") return wz_average(x_ext, 1.0 / n);
    if (kind == "grid") return extend_path(grid_discretize(x, equidistant_nodes(x.start(), x.end(), n)), E);
    if (kind == "jumpcap") return jump_capped_simple(x_ext, n).path;
    throw ConfigError("approximator must be wz, grid or jumpcap, got '" + kind + "'");
}

inline bool nonincreasing(const std::vector<double>& v, double tol) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] + tol) return false;
    return true;
}

}  // namespace detail

/// Distances between the proceeds path of a strategy and those of its
/// approximations, all on paths extended by `extend` on both sides.
/// `strategies` (a list) replaces `strategy` when given.
inline Report run_convergence_study(const json& overrides, std::uint64_t seed) {
    json cfg = merged(convergence_defaults(), overrides);
    require_keys(cfg,
                 {"approximators", "levels", "extend", "strategy", "strategies", "model", "markets", "paths", "tol",
                  "warp_grid", "final_m1_max", "j1_floor", "uniform_final_ratio", "lp_window_bound"},
                 "converge config");
    Report r{"converge", cfg};
    const double E = cfg["extend"], tol = cfg["tol"];
    if (!(E > 0)) throw ConfigError("extend must be positive");
    std::vector<CadlagPath> strategies;
    if (cfg.contains("strategies") && !cfg["strategies"].is_null())
        for (const auto& sj : cfg["strategies"]) strategies.push_back(strategy_from_json(sj));
    else
        strategies.push_back(strategy_from_json(cfg["strategy"]));
    const ImpactModel model = model_from_json(cfg["model"]);
    const auto levels = cfg["levels"].get<std::vector<int>>();
    const int paths = cfg["paths"];
    Table t{{"strategy", "market", "path", "approximator", "level", "d_uniform", "d_j1_upper", "d_m1", "d_lp"}, {}};
    for (std::size_t si = 0; si < strategies.size(); ++si) {
        const CadlagPath& x = strategies[si];
        const CadlagPath x_ext = extend_path(x, E);
        const auto jumps = path_stats(x_ext).jump_times.size();
        for (std::size_t mi = 0; mi < cfg["markets"].size(); ++mi) {
            json mj = cfg["markets"][mi];
            mj["t0"] = x.start() - E;
            mj["horizon"] = x.end() - x.start() + 2 * E;
            const MarketConfig mc = market_from_json(mj);
            const int np = mc.simulated ? paths : 1;
            for (int p = 0; p < np; ++p) {
                const auto extra = knot_times(x_ext);
                const MarketScenario m = mc.make(seed, static_cast<std::uint64_t>(p), extra, extra);
                const CadlagPath L = proceeds_fv(x_ext, m, model).running;
                for (const auto& kind : cfg["approximators"].get<std::vector<std::string>>()) {
                    const std::string tag = "strategy " + std::to_string(si) + " market " + std::to_string(mi) +
                                            " path " + std::to_string(p) + " " + kind;
                    std::vector<double> du, dj, dm, dl;
                    for (int n : levels) {
                        Stopwatch sw;
                        const CadlagPath xn = detail::approximate(kind, x, x_ext, n, E);
                        // strategy knots join the grid so block times coincide with grid times
                        const MarketScenario mn = mc.make(seed, static_cast<std::uint64_t>(p), extra, knot_times(xn));
                        const CadlagPath Ln = proceeds_fv(xn, mn, model).running;
                        du.push_back(d_uniform(L, Ln));
                        dj.push_back(d_j1_upper(L, Ln, cfg["warp_grid"]));
                        dm.push_back(d_m1(L, Ln, tol));
                        double lp = std::numeric_limits<double>::quiet_NaN();
                        if (is_nondecreasing(L, 1e-12) && is_nondecreasing(Ln, 1e-12) &&
                            std::abs(L.terminal_right() - Ln.terminal_right()) <= 1e-9 &&
                            std::abs(L.knots().back().left - Ln.knots().back().left) <= 1e-9)
                            lp = d_levy_prokhorov(L, Ln);
                        dl.push_back(lp);
                        t.rows.push_back({std::to_string(si), std::to_string(mi), std::to_string(p), kind,
                                          std::to_string(n), fmt(du.back()), fmt(dj.back()), fmt(dm.back()), fmt(lp)});
                        r.timing.push_back(tag + " n=" + std::to_string(n) + ": " + fmt(sw.seconds()) + " s");
                    }
                    if (jumps > 0 || kind != "grid")
                        r.checks.push_back(
                            {tag + " d_m1 nonincreasing", dm.back(), tol, "mono", detail::nonincreasing(dm, tol)});
                    if (kind == "grid")
                        r.checks.push_back(
                            {tag + " d_uniform nonincreasing", du.back(), tol, "mono", detail::nonincreasing(du, tol)});
                    if (!cfg["final_m1_max"].is_null() && kind != "grid")
                        r.le(tag + " final d_m1", dm.back(), cfg["final_m1_max"]);
                    if (!cfg["j1_floor"].is_null())
                        r.ge(tag + " min d_j1_upper", *std::min_element(dj.begin(), dj.end()), cfg["j1_floor"]);
                    if (!cfg["uniform_final_ratio"].is_null())
                        r.le(tag + " final d_uniform * ratio / first d_uniform",
                             du.back() * cfg["uniform_final_ratio"].get<double>() / std::max(du.front(), 1e-300), 1.0);
                    const bool lp_wanted = cfg["lp_window_bound"].get<bool>();
                    if (std::none_of(dl.begin(), dl.end(), [](double v) { return std::isnan(v); })) {
                        r.checks.push_back(
                            {tag + " d_lp nonincreasing", dl.back(), 1e-12, "mono", detail::nonincreasing(dl, 1e-12)});
                        if (lp_wanted && kind == "wz" && jumps == 1)
                            for (std::size_t i = 0; i < levels.size(); ++i)
                                r.le(tag + " d_lp at n=" + std::to_string(levels[i]) + " minus 1/n",
                                     dl[i] - 1.0 / levels[i], 1e-6);
                    } else if (lp_wanted) {
                        r.checks.push_back(
                            {tag + " d_lp defined (monotone proceeds, equal endpoints)", 0, 0, "defined", false});
                    }
                    if (path_stats(x_ext).total_variation == 0)
                        r.le(tag + " max distance for a constant strategy",
                             std::max({*std::max_element(du.begin(), du.end()), *std::max_element(dj.begin(), dj.end()),
                                       *std::max_element(dm.begin(), dm.end())}),
                             1e-12);
                }
            }
        }
    }
    r.tables["convergence.csv"] = t;
    return r;
}

inline json metric_suite_defaults() {
    return {{"pairs", 200}, {"triples", 100}, {"certificates", 50}, {"tol", 1e-6}, {"warp_grid", 64}};
}

/// Ordering, axioms and certificate bound on random paths.
inline Report run_metric_suite(const json& overrides, std::uint64_t seed) {
    json cfg = merged(metric_suite_defaults(), overrides);
    require_keys(cfg, {"pairs", "triples", "certificates", "tol", "warp_grid"}, "metric config");
    Report r{"metrics", cfg};
    const double tol = cfg["tol"];
    auto rng = make_stream(seed, 0, 12);
    double order1 = -1e300, order2 = -1e300;
    Table t{{"pair", "d_uniform", "d_j1_upper", "d_m1"}, {}};
    for (int i = 0; i < cfg["pairs"].get<int>(); ++i) {
        auto x = random_path(rng), y = random_path(rng);
        double du = d_uniform(x, y), dj = d_j1_upper(x, y, cfg["warp_grid"]), dm = d_m1(x, y, tol);
        order1 = std::max(order1, dm - dj);
        order2 = std::max(order2, dj - du);
        t.rows.push_back({std::to_string(i), fmt(du), fmt(dj), fmt(dm)});
    }
    r.tables["pairs.csv"] = t;
    r.le("max (d_m1 - d_j1_upper)", order1, 0.0);
    r.le("max (d_j1_upper - d_uniform)", order2, tol);
    double ident = 0, asym = 0, tri = -1e300, neg = 0;
    for (int i = 0; i < cfg["triples"].get<int>(); ++i) {
        auto x = random_path(rng), y = random_path(rng), z = random_path(rng);
        for (int which = 0; which < 2; ++which) {
            auto d = [&](const CadlagPath& a, const CadlagPath& b) { return which ? d_m1(a, b, tol) : d_uniform(a, b); };
            double xy = d(x, y), yx = d(y, x), yz = d(y, z), xz = d(x, z);
            ident = std::max(ident, d(x, x));
            asym = std::max(asym, std::abs(xy - yx));
            tri = std::max(tri, xz - xy - yz);
            neg = std::min({neg, xy, yz, xz});
        }
    }
    r.le("max d(x, x)", ident, tol);
    r.le("max |d(x, y) - d(y, x)|", asym, tol);
    r.le("max triangle excess", tri, 3 * tol);
    r.ge("min distance", neg, 0.0);
    double cert = -1e300;
    for (int i = 0; i < cfg["certificates"].get<int>(); ++i) {
        auto x = random_path(rng);
        int n = 2 + i % 31;
        auto c = wz_parametric_certificate(x, n);
        cert = std::max(cert, d_m1(x, c.smoothed, tol) - c.certified_distance);
    }
    r.le("max (d_m1 - certificate)", cert, tol);
    return r;
}

inline json hittime_defaults() {
    return {{"paths", 10000},
            {"dt", 1e-3},
            {"horizon_factor", 20.0},
            {"cases", json::array({{{"beta", 1.0}, {"sigma_hat", 0.5}, {"y0_minus", 0.0}, {"theta0_minus", 1.0},
                                    {"ytilde", -1.0}, {"upsilon", 0.0}},
                                   {{"beta", 2.0}, {"sigma_hat", 0.8}, {"y0_minus", 0.2}, {"theta0_minus", 1.5},
                                    {"ytilde", -0.9}, {"upsilon", -0.4}},
                                   {{"beta", 0.5}, {"sigma_hat", 0.3}, {"y0_minus", 0.0}, {"theta0_minus", 2.0},
                                    {"ytilde", -1.5}, {"upsilon", -0.5}}})}};
}

/// Realised liquidation times of impact-fixing strategies against the
/// closed-form expectation.
inline Report run_hitting_time_mc(const json& overrides, std::uint64_t seed) {
    json cfg = merged(hittime_defaults(), overrides);
    require_keys(cfg, {"paths", "dt", "horizon_factor", "cases"}, "hittime config");
    Report r{"hittime", cfg};
    const auto paths = cfg["paths"].get<std::size_t>();
    const double dt = cfg["dt"];
    Table t{{"case", "expected", "mc_mean", "mc_se", "truncated"}, {}};
    r.summary["cases"] = json::array();
    for (std::size_t c = 0; c < cfg["cases"].size(); ++c) {
        const json& p = cfg["cases"][c];
        require_keys(p, {"beta", "sigma_hat", "y0_minus", "theta0_minus", "ytilde", "upsilon"}, "hittime case");
        StochasticLiquidity liq{p.at("beta").get<double>(), p.at("sigma_hat").get<double>(),
                                p.at("y0_minus").get<double>()};
        const double th0 = p.at("theta0_minus"), yt = p.at("ytilde"), ups = p.at("upsilon");
        const double expected = expected_liquidation_time(liq.y0_minus, th0, ups, liq.beta, yt);
        if (!std::isfinite(expected) || expected <= 0)
            throw ConfigError("hittime case " + std::to_string(c) + " needs a finite positive expected time");
        const double H = std::ceil(cfg["horizon_factor"].get<double>() * expected / dt) * dt;
        Stopwatch sw;
        auto taus = parallel_map(paths, [&](std::size_t i) {
            auto m = simulate_market(DriverSpec::flat(), 0.0, H, dt, seed + 1000 * c, i);
            auto fix = build_impact_fixing_strategy(liq, th0, yt, ups, m);
            return std::pair<double, bool>{fix.tau, fix.truncated};
        });
        std::vector<double> tau;
        std::size_t truncated = 0;
        for (const auto& [v, tr] : taus) {
            tau.push_back(v);
            truncated += tr;
        }
        Stats s = stats(tau);
        t.rows.push_back({std::to_string(c), fmt(expected), fmt(s.mean), fmt(s.se), std::to_string(truncated)});
        r.summary["cases"].push_back(
            {{"mc_mean", s.mean}, {"mc_se", s.se}, {"target", expected}, {"pass", std::abs(s.mean - expected) <= 3 * s.se}});
        if (s.se > 0)
            r.le("case " + std::to_string(c) + " |mean tau - E[tau]| / SE", std::abs(s.mean - expected) / s.se, 3.0);
        else
            r.le("case " + std::to_string(c) + " |tau - E[tau]| without noise", std::abs(s.mean - expected), dt);
        r.eq("case " + std::to_string(c) + " truncated paths", static_cast<double>(truncated), 0.0);
        r.timing.push_back("case " + std::to_string(c) + ": " + fmt(sw.seconds()) + " s");
    }
    r.tables["hittime.csv"] = t;
    return r;
}

inline json liquidation_defaults() {
    return {{"liquidity", {{"beta", 1.0}, {"sigma_hat", 0.5}, {"y0_minus", 0.0}, {"theta0_minus", 1.0}, {"eta_max", 1.0},
                           {"f", {{"kind", "exp"}, {"params", {1.0}}}}}},
            {"sigma", 0.2},
            {"paths", 10000},
            {"dt", 1e-3},
            {"horizon_factor", 20.0},
            {"competitors", 20},
            {"max_blocks", 6},
            {"budgets", {0.0, 0.25, 0.5, 1.0, 2.0}},
            {"residual_tol", 1e-8},
            {"se_margin", 2.0}};
}

namespace detail {

/// Nonincreasing staircase from theta0 to 0 with blocks on times of `grid`
/// no later than eta_max; the last block closes the position.
inline CadlagPath random_competitor(std::mt19937_64& rng, double theta0, double eta_max,
                                    const std::vector<double>& grid, int max_blocks) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> nb(1, max_blocks);
    std::size_t top = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), eta_max + 1e-12) - grid.begin());
    top = std::max<std::size_t>(top, 2) - 1;
    std::uniform_int_distribution<std::size_t> cell(0, top);
    const int n = nb(rng);
    std::vector<std::size_t> idx;
    for (int i = 0; i < n; ++i) idx.push_back(cell(rng));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (idx.back() == 0) idx.push_back(1);
    // blocks before the last one sell random fractions of the position
    std::vector<double> w;
    double sum = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        w.push_back(u(rng) + 0.05);
        sum += w.back();
    }
    std::vector<double> times, values;
    if (idx.front() != 0) {
        times.push_back(grid.front());
        values.push_back(theta0);
    }
    double pos = theta0;
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        pos -= theta0 * w[i] / sum;
        times.push_back(grid[idx[i]]);
        values.push_back(std::max(pos, 0.0));
    }
    const double last = grid[idx.back()];
    CadlagPath s = CadlagPath::step(grid.front(), last, theta0, times, values);
    std::vector<Knot> k = s.knots();
    k.back().right = 0.0;
    return CadlagPath(std::move(k), s.kinds());
}

}  // namespace detail

/// Impact-fixing optimum versus randomised staircases under common random
/// numbers, plus the closed-form checks on the solver.
inline Report run_liquidation_mc(const json& overrides, std::uint64_t seed) {
    json cfg = merged(liquidation_defaults(), overrides);
    require_keys(cfg,
                 {"liquidity", "sigma", "paths", "dt", "horizon_factor", "competitors", "max_blocks", "budgets",
                  "residual_tol", "se_margin"},
                 "liquidate config");
    Report r{"liquidate", cfg};
    const LiquidityProblem prob = liquidity_from_json(cfg["liquidity"]);
    const ImpactFixingSolution sol = solve_impact_fixing(prob);
    const StochasticLiquidity liq{prob.beta, prob.sigma_hat, prob.y0_minus};
    const double dt = cfg["dt"];
    r.summary["eta_hat"] = sol.eta_hat;
    r.summary["Upsilon_hat"] = sol.upsilon_hat;
    r.summary["Ytilde_hat"] = sol.ytilde_hat;
    r.summary["expected_proceeds"] = sol.expected_proceeds;
    r.summary["residual"] = sol.residual;
    if (prob.f.kind == ImpactCurve::Kind::exponential) r.eq("eta_hat == eta_max", sol.eta_hat, prob.eta_max);
    if (sol.eta_hat > 0) r.le("|first-order residual|", std::abs(sol.residual), cfg["residual_tol"]);

    Table budgets{{"eta_max", "expected_proceeds"}, {}};
    double prev = -std::numeric_limits<double>::infinity(), worst = std::numeric_limits<double>::infinity();
    for (double b : cfg["budgets"].get<std::vector<double>>()) {
        LiquidityProblem q = prob;
        q.eta_max = b;
        double v = solve_impact_fixing(q).expected_proceeds;
        budgets.rows.push_back({fmt(b), fmt(v)});
        worst = std::min(worst, v - prev);
        prev = v;
    }
    r.tables["budgets.csv"] = budgets;
    if (prob.f.kind == ImpactCurve::Kind::exponential) r.ge("min increment over the budget grid", worst, 0.0);

    const auto paths = cfg["paths"].get<std::size_t>();
    if (paths == 0) return r;
    const int ncomp = cfg["competitors"];
    const double expected_tau =
        expected_liquidation_time(prob.y0_minus, prob.theta0_minus, sol.upsilon_hat, prob.beta, sol.ytilde_hat);
    const double H =
        std::ceil(cfg["horizon_factor"].get<double>() * std::max(expected_tau, prob.eta_max) / dt) * dt + dt;
    const std::vector<double> grid = detail::build_grid(0.0, H, dt, {});
    auto crng = make_stream(seed, 0, 13);
    std::vector<CadlagPath> comps;
    for (int i = 0; i < ncomp; ++i)
        comps.push_back(detail::random_competitor(crng, prob.theta0_minus, prob.eta_max, grid, cfg["max_blocks"]));
    DriverSpec d = DriverSpec::flat();
    d.sigma = cfg["sigma"];
    Stopwatch sw;
    struct PathResult {
        double opt = 0;
        bool truncated = false;
        std::vector<double> comp;
    };
    auto res = parallel_map(paths, [&](std::size_t i) {
        PathResult out;
        auto m = simulate_market(d, 0.0, H, dt, seed, i);
        auto fix = build_impact_fixing_strategy(liq, prob.theta0_minus, sol.ytilde_hat, sol.upsilon_hat, m);
        out.truncated = fix.truncated;
        if (fix.tau > 0) {
            auto ms = slice_market(m, fix.tau);
            auto tr = build_stochastic_trajectory(restrict_path(fix.strategy, fix.tau), liq, ms);
            out.opt = proceeds_stochastic_liquidity(tr, prob.f, liq);
        } else {
            auto ms = slice_market(m, m.t[1]);
            auto tr = build_stochastic_trajectory(restrict_path(fix.strategy, m.t[1]), liq, ms);
            out.opt = block_proceeds_stochastic(tr, prob.f);
        }
        for (const auto& c : comps) {
            auto ms = slice_market(m, c.end());
            out.comp.push_back(block_proceeds_stochastic(build_stochastic_trajectory(c, liq, ms), prob.f));
        }
        return out;
    });
    std::vector<double> opt;
    std::size_t truncated = 0;
    for (const auto& p : res) {
        opt.push_back(p.opt);
        truncated += p.truncated;
    }
    Stats so = stats(opt);
    r.summary["mc_mean"] = so.mean;
    r.summary["mc_se"] = so.se;
    r.summary["truncated"] = truncated;
    r.le("|mc mean - expected proceeds| / SE", std::abs(so.mean - sol.expected_proceeds) / so.se, 3.0);
    Table ct{{"competitor", "blocks", "last_block", "mc_mean", "mc_se", "paired_diff", "paired_se"}, {}};
    const double margin = cfg["se_margin"];
    for (int c = 0; c < ncomp; ++c) {
        std::vector<double> v, diff;
        for (std::size_t i = 0; i < paths; ++i) {
            v.push_back(res[i].comp[static_cast<std::size_t>(c)]);
            diff.push_back(res[i].opt - v.back());
        }
        Stats sc = stats(v), sd = stats(diff);
        ct.rows.push_back({std::to_string(c), std::to_string(comps[static_cast<std::size_t>(c)].knots().size() - 1),
                           fmt(comps[static_cast<std::size_t>(c)].end()), fmt(sc.mean), fmt(sc.se), fmt(sd.mean),
                           fmt(sd.se)});
        r.ge("competitor " + std::to_string(c) + " (optimum - competitor) / paired SE", sd.mean / sd.se, -margin);
    }
    r.tables["competitors.csv"] = ct;
    r.timing.push_back("monte carlo: " + fmt(sw.seconds()) + " s");
    return r;
}

inline json monotone_defaults() {
    return {{"f", {{"kind", "exp"}, {"params", {1.0}}}},
            {"h", {{"kind", "linear"}, {"params", {1.0}}}},
            {"delta", 0.0},
            {"horizon", 1.0},
            {"theta0", 1.0},
            {"y0_minus", 0.0},
            {"alpha", 1.0},
            {"levels", {4, 8, 16}},
            {"starts", 8}};
}

/// Finite-horizon monotone schedules on refining grids; each level is
/// warm-started from the previous optimum.
inline Report run_monotone(const json& overrides, std::uint64_t seed) {
    json cfg = merged(monotone_defaults(), overrides);
    require_keys(cfg, {"f", "h", "delta", "horizon", "theta0", "y0_minus", "alpha", "levels", "starts"},
                 "monotone config");
    Report r{"monotone", cfg};
    MonotoneProblem p;
    p.f = curve_from_json(cfg["f"]);
    p.h = resilience_from_json(cfg["h"]);
    p.delta = cfg["delta"];
    p.horizon = cfg["horizon"];
    p.theta0 = cfg["theta0"];
    p.y0_minus = cfg["y0_minus"];
    p.alpha = cfg["alpha"];
    Table t{{"K", "proceeds", "positions"}, {}};
    std::vector<std::vector<double>> warm;
    double prev = -std::numeric_limits<double>::infinity(), worst = std::numeric_limits<double>::infinity();
    for (int K : cfg["levels"].get<std::vector<int>>()) {
        if (!warm.empty() && static_cast<int>(warm.front().size()) != K) warm.clear();
        auto sol = optimize_monotone_finite_horizon(p, static_cast<std::size_t>(K), cfg["starts"], seed, warm);
        std::string pos;
        for (double v : sol.positions) pos += (pos.empty() ? "" : " ") + fmt(v);
        t.rows.push_back({std::to_string(K), fmt(sol.proceeds), pos});
        worst = std::min(worst, sol.proceeds - prev);
        prev = sol.proceeds;
        warm = {refine_schedule(sol.positions)};
        r.summary["proceeds"] = sol.proceeds;
        r.summary["positions"] = sol.positions;
    }
    r.tables["monotone.csv"] = t;
    r.ge("min proceeds gain from refining", worst, -1e-12);
    return r;
}

inline json noarb_defaults() {
    return {{"paths", 10000},
            {"dt", 1e-3},
            {"pathwise_dt", 1e-4},
            {"pathwise_paths", 3},
            {"pathwise_tol", 5e-3},
            {"sigma", 0.3},
            {"alpha", 1.0},
            {"drift", "no_arbitrage"},
            {"model", {{"h", {{"kind", "linear"}, {"params", {1.0}}}}, {"f", {{"kind", "exp"}, {"params", {1.0}}}}}},
            {"strategies",
             json::array(
                 {json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "linear"}},
                               {{"t", 1.0}, {"left", 0.0}, {"right", 0.0}, {"kind", "constant"}}}),
                  json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "constant"}},
                               {{"t", 0.25}, {"left", 1.0}, {"right", 0.5}, {"kind", "constant"}},
                               {{"t", 0.5}, {"left", 0.5}, {"right", 0.2}, {"kind", "constant"}},
                               {{"t", 1.0}, {"left", 0.2}, {"right", 0.2}, {"kind", "constant"}}}),
                  json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 0.7}, {"kind", "linear"}},
                               {{"t", 0.6}, {"left", 0.3}, {"right", 0.3}, {"kind", "constant"}},
                               {{"t", 0.8}, {"left", 0.3}, {"right", 0.1}, {"kind", "constant"}},
                               {{"t", 1.0}, {"left", 0.1}, {"right", 0.1}, {"kind", "constant"}}})})}};
}

namespace detail {

/// Drift per unit clock that makes the liquidation value of a deterministic
/// strategy a martingale: xi = h(Y) (f(Y) - f(Y - Theta)) / (F(Y) - F(Y - Theta)).
inline std::function<double(double)> no_arbitrage_drift(const CadlagPath& strategy, const ImpactModel& model,
                                                        double alpha, double dt) {
    const auto cells = static_cast<std::size_t>(std::llround((strategy.end() - strategy.start()) / dt));
    auto ref = deterministic_market(alpha, strategy.start(), strategy.end(), cells, 1.0, 0.0, knot_times(strategy));
    auto y = std::make_shared<CadlagPath>(solve_impact(strategy, model, ref));
    auto th = std::make_shared<CadlagPath>(strategy);
    const ImpactCurve c = model.g.curve();
    const Resilience h = model.h;
    return [y, th, c, h](double t) {
        double yy = y->eval(t), q = th->eval(t);
        double dF = c.F(yy) - c.F(yy - q);
        if (std::abs(dF) < 1e-300) return 0.0;
        return h(yy) * (c.f(yy) - c.f(yy - q)) / dF;
    };
}

}  // namespace detail

/// Liquidation value of deterministic strategies under the drift that
/// removes arbitrage; the mean of V_T - V_0 must vanish.
inline Report run_noarbitrage_mc(const json& overrides, std::uint64_t seed) {
    json cfg = merged(noarb_defaults(), overrides);
    require_keys(cfg,
                 {"paths", "dt", "pathwise_dt", "pathwise_paths", "pathwise_tol", "sigma", "alpha", "drift", "model",
                  "strategies"},
                 "noarb config");
    Report r{"noarb", cfg};
    const ImpactModel model = model_from_json(cfg["model"]);
    const auto paths = cfg["paths"].get<std::size_t>();
    const double dt = cfg["dt"], alpha = cfg["alpha"];
    Table t{{"strategy", "mc_mean", "mc_se", "pathwise_gap"}, {}};
    r.summary["strategies"] = json::array();
    for (std::size_t s = 0; s < cfg["strategies"].size(); ++s) {
        const CadlagPath th = strategy_from_json(cfg["strategies"][s]);
        DriverSpec d = DriverSpec::flat(alpha);
        d.sigma = cfg["sigma"];
        const auto drift = cfg["drift"].get<std::string>();
        if (drift == "no_arbitrage") d.xi = detail::no_arbitrage_drift(th, model, alpha, dt);
        else if (drift != "none") throw ConfigError("noarb drift must be no_arbitrage or none");
        const auto extra = knot_times(th);
        Stopwatch sw;
        auto gains = parallel_map(paths, [&](std::size_t i) {
            auto m = simulate_market(d, th.start(), th.end(), dt, seed + 7919 * s, i, extra);
            auto v = liquidation_value(th, m, model);
            return v.knots().back().right - v.initial_left();
        });
        Stats st = stats(gains);
        double gap = 0;
        for (int p = 0; p < cfg["pathwise_paths"].get<int>(); ++p) {
            auto m = simulate_market(d, th.start(), th.end(), cfg["pathwise_dt"], seed + 7919 * s + 1,
                                     static_cast<std::uint64_t>(p), extra);
            gap = std::max(gap, d_uniform(liquidation_value(th, m, model), liquidation_value_sde(th, m, model)));
        }
        t.rows.push_back({std::to_string(s), fmt(st.mean), fmt(st.se), fmt(gap)});
        r.summary["strategies"].push_back(
            {{"mc_mean", st.mean}, {"mc_se", st.se}, {"target", 0.0}, {"pass", std::abs(st.mean) <= 3 * st.se}});
        r.le("strategy " + std::to_string(s) + " |mean(V_T - V_0)| / SE", std::abs(st.mean) / st.se, 3.0);
        r.le("strategy " + std::to_string(s) + " sup |V direct - V sde|", gap, cfg["pathwise_tol"]);
        r.timing.push_back("strategy " + std::to_string(s) + ": " + fmt(sw.seconds()) + " s");
    }
    r.tables["noarb.csv"] = t;
    return r;
}

inline json pitfall_defaults() {
    return {{"n", {1, 2, 5, 10, 20, 50, 100}},
            {"theta0", 1.0},
            {"f", {{"kind", "exp"}, {"params", {1.0}}}},
            {"market", {{"kind", "deterministic"}, {"dt", 1e-3}, {"drift", 0.0}}},
            {"paths", 1},
            {"gap_tol", 0.01}};
}

/// Ad-hoc proceeds sum of -dTheta times the post-trade price.
inline double adhoc_block_proceeds(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model) {
    Trajectory tr = build_trajectory(strategy, m, model);
    double acc = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        double d = tr.th_r[k] - tr.th_l[k];
        if (d != 0) acc -= d * model.g.g(tr.s_r[k], tr.y_r[k]);
    }
    return acc;
}

/// Splitting a sale into n blocks within 1/n under permanent impact: the
/// ad-hoc sum approaches the block formula's value only as n grows.
inline Report run_adhoc_pitfall(const json& overrides, std::uint64_t seed) {
    json cfg = merged(pitfall_defaults(), overrides);
    require_keys(cfg, {"n", "theta0", "f", "market", "paths", "gap_tol"}, "pitfall config");
    Report r{"pitfall", cfg};
    const ImpactCurve f = curve_from_json(cfg["f"]);
    const ImpactModel model{Resilience::zero(), PriceImpact::multiplicative(f), 1.0, 0.0};
    const double q = cfg["theta0"];
    const double target = f.F(0.0) - f.F(-q);
    const MarketConfig mc = market_from_json(cfg["market"]);
    const int paths = mc.simulated ? cfg["paths"].get<int>() : 1;
    Table t{{"n", "adhoc_mean", "adhoc_se", "consistent_mean", "target"}, {}};
    const auto ns = cfg["n"].get<std::vector<int>>();
    double first_adhoc = 0, last_gap = 0, consistent_first = 0;
    for (int n : ns) {
        if (n < 1 || 1.0 / n > mc.horizon) throw ConfigError("pitfall n must be positive with 1/n inside the horizon");
        std::vector<double> times, values;
        for (int j = 0; j < n; ++j) {
            times.push_back(mc.t0 + static_cast<double>(j) / (static_cast<double>(n) * n));
            values.push_back(q * (1.0 - static_cast<double>(j + 1) / n));
        }
        auto th = CadlagPath::step(mc.t0, mc.t0 + mc.horizon, q, times, values);
        std::vector<double> adhoc, consistent;
        for (int p = 0; p < paths; ++p) {
            auto m = mc.make(seed, static_cast<std::uint64_t>(p), times, times);
            adhoc.push_back(adhoc_block_proceeds(th, m, model) / m.sbar.front());
            consistent.push_back(proceeds_fv(th, m, model).total / m.sbar.front());
        }
        Stats sa = stats(adhoc), sc = stats(consistent);
        t.rows.push_back({std::to_string(n), fmt(sa.mean), fmt(sa.se), fmt(sc.mean), fmt(target)});
        if (n == ns.front()) {
            first_adhoc = sa.mean;
            consistent_first = sc.mean;
        }
        last_gap = std::abs(sa.mean - target);
    }
    r.tables["pitfall.csv"] = t;
    r.summary["target"] = target;
    r.le("|ad-hoc - target| at largest n", last_gap, cfg["gap_tol"]);
    r.le("ad-hoc at smallest n - target (must be negative)", first_adhoc - target, -1e-12);
    r.le("|consistent block formula - target| at smallest n", std::abs(consistent_first - target),
         mc.simulated ? 3e-2 : 1e-10);
    return r;
}

inline json zero_defaults() {
    return {{"dt", 1e-3},
            {"deterministic_tol", 1e-8},
            {"stochastic_tol", 1e-6},
            {"paths", 5},
            {"levels", {0.0, 0.4}},
            {"y0", {0.0, 0.7}},
            {"markets",
             json::array({{{"kind", "deterministic"}},
                          {{"kind", "deterministic"}, {"alpha", 2.0}, {"drift", 0.5}},
                          {{"kind", "simulated"}, {"sigma", 0.3}},
                          {{"kind", "simulated"}, {"sigma", 0.3}, {"xi", 0.2}, {"alpha", 1.5}},
                          {{"kind", "simulated"},
                           {"sigma", 0.3},
                           {"xi", 0.1},
                           {"jump_intensity", 3.0},
                           {"jump_law", {{"kind", "uniform"}, {"params", {-0.2, 0.2}}}}},
                          {{"kind", "simulated"},
                           {"sigma", 0.2},
                           {"alpha", {{"times", {0.0, 0.5}}, {"values", {1.0, 3.0}}}},
                           {"jump_intensity", 2.0},
                           {"jump_law", {{"kind", "fixed"}, {"params", {0.1}}}}}})}};
}

/// Constant strategies earn nothing in every proceeds form and market.
inline Report run_zero_laws(const json& overrides, std::uint64_t seed) {
    json cfg = merged(zero_defaults(), overrides);
    require_keys(cfg, {"dt", "deterministic_tol", "stochastic_tol", "paths", "levels", "y0", "markets"}, "zero config");
    Report r{"zero", cfg};
    Table t{{"market", "path", "level", "y0", "form", "value", "scale"}, {}};
    const std::vector<std::pair<std::string, ImpactModel>> models{
        {"exp", {Resilience::linear(1.5), PriceImpact::multiplicative(ImpactCurve::exponential(1.0)), 1.0, 0.0}},
        {"poly", {Resilience::polynomial({1.0, 0.0, 0.5}, 4.0),
                  PriceImpact::multiplicative(ImpactCurve::polynomial({1.0, 1.0, 0.5})), 1.0, 0.0}}};
    double det_worst = 0, sto_worst = 0;
    for (std::size_t mi = 0; mi < cfg["markets"].size(); ++mi) {
        json mj = cfg["markets"][mi];
        if (!mj.contains("dt")) mj["dt"] = cfg["dt"];
        const MarketConfig mc = market_from_json(mj);
        const int np = mc.simulated ? cfg["paths"].get<int>() : 1;
        for (int p = 0; p < np; ++p) {
            const MarketScenario m = mc.make(seed + mi, static_cast<std::uint64_t>(p));
            const double smax = *std::max_element(m.sbar.begin(), m.sbar.end());
            for (double level : cfg["levels"].get<std::vector<double>>()) {
                const CadlagPath th = CadlagPath::constant(mc.t0, mc.t0 + mc.horizon, level);
                for (double y0 : cfg["y0"].get<std::vector<double>>()) {
                    for (auto [name, model] : models) {
                        model.y0_minus = y0;
                        const auto& c = model.g.curve();
                        const double scale = std::max(1.0, smax * std::max(std::abs(c.f(y0)), std::abs(c.f(0.0))));
                        std::vector<std::string> forms{"fv", "general", "semimartingale", "marcus"};
                        auto half = model;
                        half.eta = 0.5;
                        for (const auto& form : forms) {
                            double v = proceeds_by_form(form, th, m, model)["total"];
                            t.rows.push_back({std::to_string(mi), std::to_string(p), fmt(level), fmt(y0),
                                              name + ":" + form, fmt(v), fmt(scale)});
                            if (mc.simulated) sto_worst = std::max(sto_worst, std::abs(v) / scale);
                            else det_worst = std::max(det_worst, std::abs(v));
                        }
                        double v = proceeds_by_form("eta", th, m, half)["total"];
                        t.rows.push_back({std::to_string(mi), std::to_string(p), fmt(level), fmt(y0), name + ":eta",
                                          fmt(v), fmt(scale)});
                        if (mc.simulated) sto_worst = std::max(sto_worst, std::abs(v) / scale);
                        else det_worst = std::max(det_worst, std::abs(v));
                    }
                }
            }
        }
    }
    r.tables["zero.csv"] = t;
    r.le("max |L| on deterministic markets", det_worst, cfg["deterministic_tol"]);
    r.le("max |L| / scale on simulated markets", sto_worst, cfg["stochastic_tol"]);
    return r;
}

/// An acceptance criterion: an experiment plus the overrides that set it up.
/// The overrides are mirrored in configs/<name>.json.
struct Criterion {
    int id;
    std::string name;
    std::string experiment;
    json overrides;
};

inline Report run_experiment(const std::string& experiment, const json& overrides, std::uint64_t seed) {
    if (experiment == "oracle") return run_form_equivalence(overrides, seed);
    if (experiment == "block") return run_block_closed_form(overrides, seed);
    if (experiment == "converge") return run_convergence_study(overrides, seed);
    if (experiment == "metrics") return run_metric_suite(overrides, seed);
    if (experiment == "hittime") return run_hitting_time_mc(overrides, seed);
    if (experiment == "liquidate") return run_liquidation_mc(overrides, seed);
    if (experiment == "noarb") return run_noarbitrage_mc(overrides, seed);
    if (experiment == "pitfall") return run_adhoc_pitfall(overrides, seed);
    if (experiment == "zero") return run_zero_laws(overrides, seed);
    if (experiment == "monotone") return run_monotone(overrides, seed);
    throw ConfigError("unknown experiment '" + experiment + "'");
}

inline json experiment_defaults(const std::string& experiment) {
    if (experiment == "oracle") return oracle_defaults();
    if (experiment == "block") return block_defaults();
    if (experiment == "converge") return convergence_defaults();
    if (experiment == "metrics") return metric_suite_defaults();
    if (experiment == "hittime") return hittime_defaults();
    if (experiment == "liquidate") return liquidation_defaults();
    if (experiment == "noarb") return noarb_defaults();
    if (experiment == "pitfall") return pitfall_defaults();
    if (experiment == "zero") return zero_defaults();
    if (experiment == "monotone") return monotone_defaults();
    throw ConfigError("unknown experiment '" + experiment + "'");
}

inline std::vector<Criterion> acceptance_criteria() {
    const json linear_sale = json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "linear"}},
                                          {{"t", 1.0}, {"left", 0.0}, {"right", 0.0}, {"kind", "constant"}}});
    const json one_block = json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "constant"}},
                                        {{"t", 0.5}, {"left", 1.0}, {"right", 0.0}, {"kind", "constant"}},
                                        {{"t", 1.0}, {"left", 0.0}, {"right", 0.0}, {"kind", "constant"}}});
    const json two_blocks = json::array({{{"t", 0.0}, {"left", 1.0}, {"right", 1.0}, {"kind", "constant"}},
                                         {{"t", 0.3}, {"left", 1.0}, {"right", 0.6}, {"kind", "constant"}},
                                         {{"t", 0.7}, {"left", 0.6}, {"right", 0.0}, {"kind", "constant"}},
                                         {{"t", 1.0}, {"left", 0.0}, {"right", 0.0}, {"kind", "constant"}}});
    return {
        {1, "oracle", "oracle", json::object()},
        {2, "block", "block", json::object()},
        {3, "wz", "converge", {{"final_m1_max", 0.05}, {"j1_floor", 0.25}}},
        {4, "grid", "converge",
         {{"approximators", {"grid"}},
          {"levels", {8, 32, 128}},
          {"strategy", linear_sale},
          {"markets", json::array({{{"kind", "deterministic"}, {"dt", 1e-3}},
                                   {{"kind", "simulated"}, {"dt", 1e-3}, {"sigma", 0.2}}})},
          {"paths", 3},
          {"uniform_final_ratio", 8.0}}},
        {5, "metrics", "metrics", json::object()},
        {6, "lp", "converge",
         {{"model", {{"h", {{"kind", "zero"}}}, {"f", {{"kind", "exp"}, {"params", {1.0}}}}}},
          {"strategies", json::array({one_block, two_blocks})},
          {"lp_window_bound", true}}},
        {7, "hittime", "hittime", json::object()},
        {8, "dominance", "liquidate", json::object()},
        {9, "noarb", "noarb", json::object()},
        {10, "pitfall", "pitfall", json::object()},
        {11, "zero", "zero", json::object()},
    };
}

inline const Criterion& find_criterion(const std::string& name) {
    static const std::vector<Criterion> all = acceptance_criteria();
    for (const auto& c : all)
        if (c.name == name || std::to_string(c.id) == name) return c;
    throw ConfigError("unknown check '" + name + "'");
}

}  // namespace impactlab

#endif
