#ifndef IMPACTLAB_MARKET_HPP
#define IMPACTLAB_MARKET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadlag_path.hpp"

namespace impactlab {

/// splitmix64 finaliser; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Generator for one (seed, path, stream) triple. Results depend only on
/// the triple, never on how many other paths were drawn before.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t path_index, std::uint64_t stream = 0) {
    std::uint64_t s = mix64(mix64(mix64(seed) ^ path_index) ^ (stream * 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

/// Relative jump sizes dM of the price driver; every draw exceeds -1.
struct JumpLaw {
    enum class Kind { none, fixed, uniform };
    Kind kind = Kind::none;
    double a = 0;  // fixed size, or lower end of the uniform law
    double b = 0;  // upper end of the uniform law

    static JumpLaw none() { return {}; }
    static JumpLaw fixed(double size) { return check({Kind::fixed, size, size}); }
    static JumpLaw uniform(double lo, double hi) { return check({Kind::uniform, lo, hi}); }

    double mean() const {
        switch (kind) {
            case Kind::none: return 0;
            case Kind::fixed: return a;
            case Kind::uniform: return 0.5 * (a + b);
        }
        return 0;
    }

    template <class Rng>
    double sample(Rng& rng) const {
        if (kind == Kind::uniform) return std::uniform_real_distribution<double>(a, b)(rng);
        return a;
    }

private:
    static JumpLaw check(JumpLaw l) {
        if (!(l.a > -1.0) || l.b < l.a) throw std::invalid_argument("jump law must keep sizes above -1");
        return l;
    }
};

struct DriverSpec {
    double sigma = 0;                                      ///< volatility scale of the continuous part
    std::function<double(double)> xi = [](double) { return 0.0; };  ///< drift per unit of clock
    std::function<double(double)> alpha = [](double) { return 1.0; };  ///< clock density
    bool alpha_is_constant = true;
    double jump_intensity = 0;  ///< jumps per unit time
    JumpLaw jump_law;
    double s0 = 1;

    static DriverSpec flat(double alpha = 1.0, double s0 = 1.0) {
        DriverSpec d;
        d.alpha = [alpha](double) { return alpha; };
        d.s0 = s0;
        return d;
    }
    void set_alpha(double a) {
        alpha = [a](double) { return a; };
        alpha_is_constant = true;
    }
    void set_xi(double x) {
        xi = [x](double) { return x; };
    }
};

/// One realisation of the unaffected price, the resilience clock and an
/// independent Brownian motion on a shared grid. Cell k is (t[k], t[k+1]];
/// a driver jump at t[k+1] is part of cell k.
struct MarketScenario {
    std::vector<double> t;
    std::vector<double> sbar;       ///< value at t[k]
    std::vector<double> sbar_left;  ///< left limit at t[k]
    std::vector<double> clock;      ///< integral of alpha up to t[k]
    std::vector<double> dM;         ///< driver increment over cell k
    std::vector<double> dB;         ///< independent Brownian increment over cell k
    std::vector<double> jump_times;
    double sigma = 0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;

    std::size_t cells() const { return t.size() - 1; }
    double start() const { return t.front(); }
    double end() const { return t.back(); }

    CadlagPath sbar_path() const {
        std::vector<Knot> k;
        std::vector<SegmentKind> kinds;
        for (std::size_t i = 0; i < t.size(); ++i) {
            k.push_back({t[i], sbar_left[i], sbar[i]});
            if (i > 0) kinds.push_back(SegmentKind::linear);
        }
        k.back().right = k.back().left;
        return CadlagPath(std::move(k), std::move(kinds));
    }

    CadlagPath clock_path() const {
        std::vector<double> v(clock);
        return CadlagPath::polyline(t, v);
    }
};

namespace detail {

inline std::vector<double> build_grid(double t0, double t1, double dt, const std::vector<double>& extra) {
    if (!(t1 > t0)) throw std::invalid_argument("market horizon must be positive");
    if (!(dt > 0)) throw std::invalid_argument("market step must be positive");
    auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    n = std::max<std::size_t>(n, 1);
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
    g.back() = t1;
    for (double e : extra)
        if (e > t0 && e < t1) g.push_back(e);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

inline double clock_increment(const DriverSpec& s, double a, double b) {
    if (s.alpha_is_constant) return s.alpha(a) * (b - a);
    return (b - a) / 6.0 * (s.alpha(a) + 4.0 * s.alpha(0.5 * (a + b)) + s.alpha(b));
}

}  // namespace detail

/// Simulates one market path on a grid of step `dt` over [t0, t1]. Extra
/// grid times (e.g. strategy knots) are inserted; driver jumps never land
/// within 1e-12 of a `forbidden` time.
inline MarketScenario simulate_market(const DriverSpec& spec, double t0, double t1, double dt, std::uint64_t seed,
                                      std::uint64_t path_index, const std::vector<double>& forbidden = {},
                                      const std::vector<double>& extra_grid = {}) {
    if (spec.sigma < 0 || spec.jump_intensity < 0 || !(spec.s0 > 0))
        throw std::invalid_argument("invalid driver parameters");
    auto rng = make_stream(seed, path_index, 0);
    auto jump_rng = make_stream(seed, path_index, 1);
    auto bm_rng = make_stream(seed, path_index, 2);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> jumps, sizes;
    if (spec.jump_intensity > 0 && spec.jump_law.kind != JumpLaw::Kind::none) {
        std::exponential_distribution<double> gap(spec.jump_intensity);
        double tau = t0;
        while (true) {
            double cand = tau + gap(jump_rng);
            if (cand >= t1) break;
            bool clash = cand <= t0;
            for (double f : forbidden) clash = clash || std::abs(cand - f) < 1e-12;
            if (clash) continue;
            tau = cand;
            jumps.push_back(tau);
            sizes.push_back(spec.jump_law.sample(jump_rng));
        }
    }
    std::vector<double> extra(extra_grid);
    extra.insert(extra.end(), forbidden.begin(), forbidden.end());
    extra.insert(extra.end(), jumps.begin(), jumps.end());

    MarketScenario m;
    m.t = detail::build_grid(t0, t1, dt, extra);
    m.sigma = spec.sigma;
    m.seed = seed;
    m.path_index = path_index;
    m.jump_times = jumps;
    const std::size_t n = m.t.size();
    m.sbar.assign(n, spec.s0);
    m.sbar_left.assign(n, spec.s0);
    m.clock.assign(n, 0.0);
    m.dM.assign(n - 1, 0.0);
    m.dB.assign(n - 1, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) m.clock[k + 1] = m.clock[k] + detail::clock_increment(spec, m.t[k], m.t[k + 1]);

    // Gaussian parts on the base grid come from streams 0 and 2 in a fixed
    // order; inserted times are filled by Brownian bridges from stream 3, so
    // the base-grid values do not depend on `extra_grid`.
    auto bridge_rng = make_stream(seed, path_index, 3);
    std::vector<double> G(n, 0.0), B(n, 0.0);
    const auto base = detail::build_grid(t0, t1, dt, {});
    std::size_t lo = 0;
    for (std::size_t j = 0; j + 1 < base.size(); ++j) {
        std::size_t hi = lo + 1;
        while (m.t[hi] < base[j + 1]) ++hi;
        const double dc = m.clock[hi] - m.clock[lo], h = m.t[hi] - m.t[lo];
        G[hi] = G[lo] + spec.sigma * std::sqrt(dc) * normal(rng);
        B[hi] = B[lo] + std::sqrt(h) * normal(bm_rng);
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const double wc = (m.clock[i] - m.clock[i - 1]) / (m.clock[hi] - m.clock[i - 1]);
            const double vc = (m.clock[i] - m.clock[i - 1]) * (m.clock[hi] - m.clock[i]) / (m.clock[hi] - m.clock[i - 1]);
            G[i] = G[i - 1] + wc * (G[hi] - G[i - 1]) + spec.sigma * std::sqrt(vc) * normal(bridge_rng);
            const double wt = (m.t[i] - m.t[i - 1]) / (m.t[hi] - m.t[i - 1]);
            const double vt = (m.t[i] - m.t[i - 1]) * (m.t[hi] - m.t[i]) / (m.t[hi] - m.t[i - 1]);
            B[i] = B[i - 1] + wt * (B[hi] - B[i - 1]) + std::sqrt(vt) * normal(bridge_rng);
        }
        lo = hi;
    }

    const double compensator = spec.jump_intensity * spec.jump_law.mean();
    std::size_t next_jump = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double a = m.t[k], b = m.t[k + 1], h = b - a;
        const double dc = m.clock[k + 1] - m.clock[k];
        const double xi = spec.xi(0.5 * (a + b));
        m.dB[k] = B[k + 1] - B[k];
        double s = m.sbar[k] *
                   std::exp(xi * dc - 0.5 * spec.sigma * spec.sigma * dc + (G[k + 1] - G[k]) - compensator * h);
        m.sbar_left[k + 1] = s;
        if (next_jump < jumps.size() && jumps[next_jump] == b) {
            s *= 1.0 + sizes[next_jump];
            ++next_jump;
        }
        m.sbar[k + 1] = s;
        m.dM[k] = (s - m.sbar[k]) / m.sbar[k] - xi * dc;
    }
    return m;
}

/// Market with S-bar = s0 * exp(-drift * (t - t0)) and constant clock
/// density `alpha`; the Brownian increments are zero.
inline MarketScenario deterministic_market(double alpha, double t0, double t1, std::size_t cells, double s0 = 1.0,
                                           double drift = 0.0, const std::vector<double>& extra_grid = {}) {
    if (!(alpha > 0)) throw std::invalid_argument("clock density must be positive");
    MarketScenario m;
    m.t = detail::build_grid(t0, t1, (t1 - t0) / static_cast<double>(cells), extra_grid);
    const std::size_t n = m.t.size();
    m.sbar.resize(n);
    m.sbar_left.resize(n);
    m.clock.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        m.sbar[i] = m.sbar_left[i] = s0 * std::exp(-drift * (m.t[i] - t0));
        m.clock[i] = alpha * (m.t[i] - t0);
    }
    m.dM.assign(n - 1, 0.0);
    m.dB.assign(n - 1, 0.0);
    return m;
}

}  // namespace impactlab

#endif
