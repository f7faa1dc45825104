#ifndef IMPACTLAB_APPROX_HPP
#define IMPACTLAB_APPROX_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cadlag_path.hpp"
#include "metrics.hpp"

namespace impactlab {

namespace detail {

/// O(log n) evaluation of t -> integral of x over [start, t], with x held
/// at x(start-) before start.
class PathIntegral {
public:
    explicit PathIntegral(const CadlagPath& x) : x_(x) {
        const auto& k = x.knots();
        prefix_.assign(k.size(), 0.0);
        for (std::size_t i = 0; i + 1 < k.size(); ++i)
            prefix_[i + 1] = prefix_[i] + 0.5 * (k[i].right + k[i + 1].left) * (k[i + 1].t - k[i].t);
    }

    double operator()(double t) const {
        if (t <= x_.start()) return x_.initial_left() * (t - x_.start());
        if (t >= x_.end()) return prefix_.back() + x_.terminal_right() * (t - x_.end());
        std::size_t i = x_.locate(t);
        const auto& k = x_.knots();
        double v = x_.eval(t);
        return prefix_[i] + 0.5 * (k[i].right + v) * (t - k[i].t);
    }

private:
    const CadlagPath& x_;
    std::vector<double> prefix_;
};

inline bool sloped_at(const CadlagPath& x, double t) {
    if (t < x.start() || t >= x.end()) return false;
    std::size_t i = x.locate(t);
    return x.kinds()[i] == SegmentKind::linear && x.knots()[i].right != x.knots()[i + 1].left;
}

}  // namespace detail

/// Backward moving average (1/eps) int_{t-eps}^t x(s) ds on the domain of
/// x, with x = x(start-) before the domain. Exact at every output knot;
/// quadratic stretches are resampled at spacing eps/8.
inline CadlagPath wz_average(const CadlagPath& x, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("wz_average: eps must be positive");
    const double t0 = x.start(), t1 = x.end();
    std::vector<double> cand{t0, t1};
    for (const auto& k : x.knots()) {
        cand.push_back(k.t);
        if (k.t + eps < t1) cand.push_back(k.t + eps);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    detail::PathIntegral I(x);
    std::vector<double> t{t0};
    for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
        double a = cand[i], b = cand[i + 1], mid = 0.5 * (a + b);
        bool curved = detail::sloped_at(x, mid) || detail::sloped_at(x, mid - eps);
        std::size_t pieces = curved ? static_cast<std::size_t>(std::ceil((b - a) / (eps / 8.0) - 1e-9)) : 1;
        pieces = std::max<std::size_t>(pieces, 1);
        for (std::size_t j = 1; j < pieces; ++j) t.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(pieces));
        t.push_back(b);
    }
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = (I(t[i]) - I(t[i] - eps)) / eps;
    std::vector<Knot> knots;
    std::vector<SegmentKind> kinds;
    for (std::size_t i = 0; i < t.size(); ++i) {
        knots.push_back({t[i], v[i], v[i]});
        if (i > 0) kinds.push_back(v[i] == v[i - 1] ? SegmentKind::constant : SegmentKind::linear);
    }
    knots.front().left = x.initial_left();
    knots.front().right = x.initial_left();
    if (kinds.front() == SegmentKind::constant && knots[1].left != knots[0].right) kinds.front() = SegmentKind::linear;
    return CadlagPath(std::move(knots), std::move(kinds));
}

/// Staircase x(start) + sum (x(t_k) - x(t_{k-1})) 1{t >= t_k} on sorted
/// nodes. A node at the horizon becomes the terminal jump to x(end+).
inline CadlagPath grid_discretize(const CadlagPath& x, const std::vector<double>& nodes) {
    const double t0 = x.start(), t1 = x.end();
    std::vector<double> times, values;
    for (double t : nodes) {
        if (t < t0 || t > t1) throw std::invalid_argument("grid_discretize: node outside domain");
        if (!times.empty() && !(t > times.back())) throw std::invalid_argument("grid_discretize: nodes must increase");
        if (t == t1) continue;
        times.push_back(t);
        values.push_back(x.eval(t));
    }
    if (times.empty() || times.front() != t0) {
        times.insert(times.begin(), t0);
        values.insert(values.begin(), x.eval(t0));
    }
    CadlagPath s = CadlagPath::step(t0, t1, x.initial_left(), times, values);
    std::vector<Knot> k = s.knots();
    k.back().right = x.terminal_right();
    return CadlagPath(std::move(k), s.kinds());
}

inline std::vector<double> equidistant_nodes(double t0, double t1, std::size_t n) {
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
    v.back() = t1;
    return v;
}

struct JumpCappedApproximation {
    CadlagPath path;
    CadlagPath smoothed;
    double eps = 0;
    std::size_t steps = 0;
};

/// Simple strategy with jumps at most min(2^-n, 1/n): smooth with a 1/n
/// moving average, then step whenever the smoothed path has moved by eps
/// or 1/n time has passed.
inline JumpCappedApproximation jump_capped_simple(const CadlagPath& x, int n) {
    if (n < 1) throw std::invalid_argument("jump_capped_simple: n must be positive");
    const double cap = 1.0 / n;
    const double bound = std::min(std::ldexp(1.0, -n), cap);
    JumpCappedApproximation out{x, wz_average(x, cap), 0.5 * bound, 0};
    const CadlagPath& xs = out.smoothed;
    const double t0 = xs.start(), t1 = xs.end();
    for (int attempt = 0; attempt < 60; ++attempt) {
        const double eps = out.eps;
        std::vector<double> times{t0}, values{xs.eval(t0)};
        double sigma = t0;
        while (true) {
            const double ref = values.back();
            const double limit = std::min(sigma + cap, t1);
            double next = limit;
            const auto& k = xs.knots();
            for (std::size_t i = xs.locate(sigma); i + 1 < k.size() && k[i].t < limit; ++i) {
                double a = std::max(k[i].t, sigma), b = std::min(k[i + 1].t, limit);
                double va = xs.eval(a), vb = (b == k[i + 1].t) ? k[i + 1].left : xs.eval(b);
                if (std::abs(vb - ref) >= eps) {
                    double target = vb > ref ? ref + eps : ref - eps;
                    double w = (vb == va) ? 1.0 : std::clamp((target - va) / (vb - va), 0.0, 1.0);
                    next = a + w * (b - a);
                    if (!(next > sigma)) next = b;
                    break;
                }
            }
            if (next >= t1) break;
            sigma = next;
            times.push_back(sigma);
            values.push_back(xs.eval(sigma));
        }
        CadlagPath s = CadlagPath::step(t0, t1, xs.initial_left(), times, values);
        std::vector<Knot> kn = s.knots();
        kn.back().right = xs.terminal_right();
        out.path = CadlagPath(std::move(kn), s.kinds());
        out.steps = times.size();
        if (d_uniform(out.path, xs) < bound) return out;
        out.eps *= 0.5;
    }
    throw std::runtime_error("jump_capped_simple: could not meet the jump bound");
}

/// Pair of parametric representations of the completed graphs of x and of
/// its 1/n moving average on a common parameter, built from a fictitious
/// time that opens an interval of length 2^-k at the k-th largest jump.
struct ParametricCertificate {
    std::vector<double> s;  ///< parameter, rescaled to [0, 1]
    std::vector<double> u, r, u_n, r_n;
    double certified_distance = 0;
    CadlagPath smoothed;
};

inline ParametricCertificate wz_parametric_certificate(const CadlagPath& x, int n) {
    if (n < 1) throw std::invalid_argument("wz_parametric_certificate: n must be positive");
    const double h = 1.0 / n;
    const double t0 = x.start(), t1 = x.end();
    struct Jump {
        double t, size, a;
    };
    std::vector<Jump> jumps;
    const auto& k = x.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i)
        if (k[i].right != k[i].left) jumps.push_back({k[i].t, k[i].right - k[i].left, 0});
    std::vector<std::size_t> order(jumps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(jumps[a].size) > std::abs(jumps[b].size);
    });
    for (std::size_t r = 0; r < order.size(); ++r) jumps[order[r]].a = std::ldexp(1.0, -static_cast<int>(r + 1));

    auto delta_before = [&](double t) {  // delta(t-)
        double d = 0;
        for (const auto& j : jumps)
            if (j.t < t) d += j.a;
        return d;
    };
    auto gamma_n = [&](double t) {
        double g = t - 0.5 * h;
        for (const auto& j : jumps) g += j.a * n * std::clamp(t - j.t, 0.0, h);
        return g;
    };
    CadlagPath xn = wz_average(x, h);

    // gamma_n is piecewise linear with these breakpoints.
    std::vector<double> gb{t0, t1};
    for (const auto& j : jumps) {
        gb.push_back(j.t);
        if (j.t + h < t1) gb.push_back(j.t + h);
    }
    std::sort(gb.begin(), gb.end());
    gb.erase(std::unique(gb.begin(), gb.end()), gb.end());
    std::vector<double> gv(gb.size());
    for (std::size_t i = 0; i < gb.size(); ++i) gv[i] = gamma_n(gb[i]);
    auto gamma_n_inv = [&](double s) {
        if (s <= gv.front()) return t0;
        if (s >= gv.back()) return t1;
        std::size_t i = static_cast<std::size_t>(std::upper_bound(gv.begin(), gv.end(), s) - gv.begin()) - 1;
        return gb[i] + (s - gv[i]) / (gv[i + 1] - gv[i]) * (gb[i + 1] - gb[i]);
    };

    const double s_hi = t1 + delta_before(t1);
    const double s_lo = std::min(t0, gv.front());
    auto rep0 = [&](double s, double& u, double& r) {
        if (s <= t0) {
            u = x.initial_left();
            r = t0;
            return;
        }
        if (s >= s_hi) {
            u = x.eval(t1);
            r = t1;
            return;
        }
        double acc = 0;
        for (std::size_t i = 0; i < jumps.size() + 1; ++i) {
            // jumps are sorted by time; walk the fictitious intervals
            double jt = i < jumps.size() ? jumps[i].t : t1 + 1;
            double open = jt + acc;
            if (s < open || i == jumps.size()) {
                r = std::clamp(s - acc, t0, t1);
                u = x.eval(r);
                return;
            }
            double close = open + jumps[i].a;
            if (s <= close) {
                double w = (s - open) / jumps[i].a;
                r = jt;
                u = x.left_limit(jt) + w * (x.eval(jt) - x.left_limit(jt));
                return;
            }
            acc += jumps[i].a;
        }
    };
    auto rep_n = [&](double s, double& u, double& r) {
        r = gamma_n_inv(s);
        u = xn.eval(r);
    };

    std::vector<double> ss{s_lo, s_hi, t0};
    for (const auto& kn : x.knots()) {
        double db = delta_before(kn.t);
        ss.push_back(kn.t + db);
        double after = db;
        for (const auto& j : jumps)
            if (j.t == kn.t) after += j.a;
        ss.push_back(kn.t + after);
    }
    for (const auto& kn : xn.knots()) ss.push_back(gamma_n(kn.t));
    for (double v : gv) ss.push_back(v);
    const int uniform = 512;
    for (int i = 0; i <= uniform; ++i) ss.push_back(s_lo + (s_hi - s_lo) * i / uniform);
    std::sort(ss.begin(), ss.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
    ss.erase(std::remove_if(ss.begin(), ss.end(), [&](double s) { return s < s_lo || s > s_hi; }), ss.end());

    ParametricCertificate c;
    c.smoothed = xn;
    for (double s : ss) {
        double u, r, un, rn;
        rep0(s, u, r);
        rep_n(s, un, rn);
        c.s.push_back((s - s_lo) / (s_hi - s_lo));
        c.u.push_back(u);
        c.r.push_back(r);
        c.u_n.push_back(un);
        c.r_n.push_back(rn);
        c.certified_distance = std::max({c.certified_distance, std::abs(u - un), std::abs(r - rn)});
    }
    return c;
}

}  // namespace impactlab

#endif
