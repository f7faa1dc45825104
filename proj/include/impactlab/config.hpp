#ifndef IMPACTLAB_CONFIG_HPP
#define IMPACTLAB_CONFIG_HPP

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "impact.hpp"
#include "liquidation.hpp"
#include "market.hpp"
#include "path_io.hpp"

namespace impactlab {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline json load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(file + ": " + e.what());
    }
}

/// Rejects keys of `obj` outside `allowed`; `where` names the object in messages.
inline void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

/// Recursive merge: keys in `over` replace those in `base`; objects merge.
inline json merged(json base, const json& over) {
    if (over.is_null()) return base;
    if (!base.is_object() || !over.is_object()) return over;
    for (const auto& [k, v] : over.items()) base[k] = base.contains(k) ? merged(base[k], v) : v;
    return base;
}

namespace detail {

inline std::vector<double> params_of(const json& j, const std::string& where) {
    auto p = get_or<std::vector<double>>(j, "params", {});
    if (p.empty()) throw ConfigError(where + " needs a non-empty 'params' list");
    return p;
}

/// A number, or {"times": [...], "values": [...]} read as a right-continuous step.
inline std::function<double(double)> scalar_fn(const json& j, const std::string& where, bool& constant) {
    if (j.is_number()) {
        double v = j.get<double>();
        constant = true;
        return [v](double) { return v; };
    }
    require_keys(j, {"times", "values"}, where);
    auto ts = get_or<std::vector<double>>(j, "times", {});
    auto vs = get_or<std::vector<double>>(j, "values", {});
    if (ts.empty() || ts.size() != vs.size() || !std::is_sorted(ts.begin(), ts.end()))
        throw ConfigError(where + ": times and values must be equal-length, sorted and non-empty");
    constant = false;
    return [ts, vs](double t) {
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        return it == ts.begin() ? vs.front() : vs[static_cast<std::size_t>(it - ts.begin()) - 1];
    };
}

}  // namespace detail

inline ImpactCurve curve_from_json(const json& j) {
    require_keys(j, {"kind", "params"}, "f");
    auto kind = get_or<std::string>(j, "kind", "exp");
    auto p = detail::params_of(j, "f");
    if (kind == "exp") return ImpactCurve::exponential(p.front());
    if (kind == "polynomial") return ImpactCurve::polynomial(p);
    throw ConfigError("f.kind must be exp or polynomial, got '" + kind + "'");
}

inline Resilience resilience_from_json(const json& j) {
    require_keys(j, {"kind", "params", "lipschitz"}, "h");
    auto kind = get_or<std::string>(j, "kind", "linear");
    if (kind == "zero") return Resilience::zero();
    auto p = detail::params_of(j, "h");
    if (kind == "linear") return Resilience::linear(p.front());
    if (kind == "polynomial") {
        if (!j.contains("lipschitz")) throw ConfigError("polynomial h needs 'lipschitz'");
        return Resilience::polynomial(p, j.at("lipschitz").get<double>());
    }
    throw ConfigError("h.kind must be zero, linear or polynomial, got '" + kind + "'");
}

inline ImpactModel model_from_json(const json& j) {
    require_keys(j, {"h", "f", "eta", "y0_minus"}, "model");
    ImpactModel m;
    m.h = j.contains("h") ? resilience_from_json(j.at("h")) : Resilience::linear(1.0);
    m.g = PriceImpact::multiplicative(j.contains("f") ? curve_from_json(j.at("f")) : ImpactCurve::exponential(1.0));
    m.eta = get_or(j, "eta", 1.0);
    m.y0_minus = get_or(j, "y0_minus", 0.0);
    if (!(m.eta > 0 && m.eta <= 1)) throw ConfigError("model.eta must lie in (0, 1]");
    return m;
}

/// Market section: the driver keys plus grid and kind.
struct MarketConfig {
    bool simulated = false;
    DriverSpec driver = DriverSpec::flat();
    double t0 = 0;
    double horizon = 1;
    double dt = 1e-3;
    double drift = 0;  ///< deterministic markets only: S-bar = s0 exp(-drift t)
    double alpha = 1;  ///< deterministic markets only

    MarketScenario make(std::uint64_t seed, std::uint64_t path, const std::vector<double>& forbidden = {},
                        const std::vector<double>& extra = {}) const {
        if (simulated) return simulate_market(driver, t0, t0 + horizon, dt, seed, path, forbidden, extra);
        auto cells = static_cast<std::size_t>(std::llround(horizon / dt));
        return deterministic_market(alpha, t0, t0 + horizon, std::max<std::size_t>(cells, 1), driver.s0, drift, extra);
    }
};

inline MarketConfig market_from_json(const json& j) {
    require_keys(j,
                 {"kind", "t0", "horizon", "dt", "sigma", "xi", "alpha", "jump_intensity", "jump_law", "s0", "drift"},
                 "market");
    MarketConfig c;
    auto kind = get_or<std::string>(j, "kind", "deterministic");
    if (kind != "deterministic" && kind != "simulated")
        throw ConfigError("market.kind must be deterministic or simulated");
    c.simulated = kind == "simulated";
    c.t0 = get_or(j, "t0", 0.0);
    c.horizon = get_or(j, "horizon", 1.0);
    c.dt = get_or(j, "dt", 1e-3);
    if (!(c.horizon > 0 && c.dt > 0)) throw ConfigError("market.horizon and market.dt must be positive");
    c.drift = get_or(j, "drift", 0.0);
    c.driver.sigma = get_or(j, "sigma", 0.0);
    c.driver.s0 = get_or(j, "s0", 1.0);
    c.driver.jump_intensity = get_or(j, "jump_intensity", 0.0);
    if (j.contains("alpha")) {
        bool constant = true;
        c.driver.alpha = detail::scalar_fn(j.at("alpha"), "market.alpha", constant);
        c.driver.alpha_is_constant = constant;
        if (constant) c.alpha = j.at("alpha").get<double>();
        else if (!c.simulated) throw ConfigError("deterministic markets need a constant alpha");
    }
    if (j.contains("xi")) {
        bool constant = true;
        c.driver.xi = detail::scalar_fn(j.at("xi"), "market.xi", constant);
    }
    if (j.contains("jump_law")) {
        const auto& l = j.at("jump_law");
        require_keys(l, {"kind", "params"}, "market.jump_law");
        auto k = get_or<std::string>(l, "kind", "none");
        try {
            if (k == "none") c.driver.jump_law = JumpLaw::none();
            else if (k == "fixed") c.driver.jump_law = JumpLaw::fixed(detail::params_of(l, "jump_law").at(0));
            else if (k == "uniform") {
                auto p = detail::params_of(l, "jump_law");
                if (p.size() != 2) throw ConfigError("uniform jump law needs two params");
                c.driver.jump_law = JumpLaw::uniform(p[0], p[1]);
            } else
                throw ConfigError("jump_law.kind must be none, fixed or uniform");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("market.jump_law: ") + e.what());
        }
    }
    if (!c.simulated && (c.driver.sigma != 0 || c.driver.jump_intensity != 0))
        throw ConfigError("deterministic markets take no sigma or jumps; use kind = simulated");
    return c;
}

inline LiquidityProblem liquidity_from_json(const json& j) {
    require_keys(j, {"beta", "sigma_hat", "y0_minus", "theta0_minus", "eta_max", "f"}, "liquidity");
    LiquidityProblem p;
    p.beta = get_or(j, "beta", p.beta);
    p.sigma_hat = get_or(j, "sigma_hat", p.sigma_hat);
    p.y0_minus = get_or(j, "y0_minus", p.y0_minus);
    p.theta0_minus = get_or(j, "theta0_minus", p.theta0_minus);
    p.eta_max = get_or(j, "eta_max", p.eta_max);
    if (j.contains("f")) p.f = curve_from_json(j.at("f"));
    return p;
}

/// A strategy is an inline knot array or the name of a path JSON file.
inline CadlagPath strategy_from_json(const json& j) {
    if (j.is_string()) return read_path_json(j.get<std::string>());
    try {
        return path_from_json(j);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("strategy: ") + e.what());
    }
}

}  // namespace impactlab

#endif
