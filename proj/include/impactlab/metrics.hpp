#ifndef IMPACTLAB_METRICS_HPP
#define IMPACTLAB_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cadlag_path.hpp"

namespace impactlab {

namespace detail {

inline void require_same_domain(const CadlagPath& x, const CadlagPath& y) {
    if (x.start() != y.start() || x.end() != y.end())
        throw std::invalid_argument("paths live on different domains");
}

struct Interval {
    double lo = 1.0;
    double hi = 0.0;
    bool empty() const { return lo > hi; }
};

inline Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

/// Parameters s in [0,1] with |c - s d| <= eps.
inline Interval coordinate_band(double c, double d, double eps) {
    if (d == 0) return std::abs(c) <= eps ? Interval{0, 1} : Interval{};
    double a = (c - eps) / d, b = (c + eps) / d;
    if (a > b) std::swap(a, b);
    return {std::max(0.0, a), std::min(1.0, b)};
}

/// Free part of segment a->b within sup-distance eps of p.
inline Interval free_interval(GraphPoint p, GraphPoint a, GraphPoint b, double eps) {
    return intersect(coordinate_band(p.t - a.t, b.t - a.t, eps), coordinate_band(p.v - a.v, b.v - a.v, eps));
}

inline double sup_dist(GraphPoint a, GraphPoint b) { return std::max(std::abs(a.t - b.t), std::abs(a.v - b.v)); }

/// Decides whether the Frechet distance (sup ground metric) is <= eps.
/// The free space of every cell is convex, so reachable sets on cell edges
/// stay single intervals.
inline bool frechet_within(const std::vector<GraphPoint>& p, const std::vector<GraphPoint>& q, double eps) {
    const std::size_t n = p.size() - 1, m = q.size() - 1;
    if (sup_dist(p.front(), q.front()) > eps || sup_dist(p.back(), q.back()) > eps) return false;
    // reach_left[j]: reachable interval on the left edge of cell (i, j).
    std::vector<Interval> reach_left(m);
    bool alive = true;
    for (std::size_t j = 0; j < m; ++j) {
        Interval f = free_interval(p[0], q[j], q[j + 1], eps);
        if (alive && !f.empty() && f.lo == 0.0) {
            reach_left[j] = f;
            alive = f.hi == 1.0;
        } else {
            reach_left[j] = Interval{};
            alive = false;
        }
    }
    bool bottom_alive = true;
    Interval last_right{}, last_top{};
    for (std::size_t i = 0; i < n; ++i) {
        Interval reach_bottom;
        {
            Interval f = free_interval(q[0], p[i], p[i + 1], eps);
            if (bottom_alive && !f.empty() && f.lo == 0.0) {
                reach_bottom = f;
                bottom_alive = f.hi == 1.0;
            } else {
                reach_bottom = Interval{};
                bottom_alive = false;
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            Interval right_free = free_interval(p[i + 1], q[j], q[j + 1], eps);
            Interval top_free = free_interval(q[j + 1], p[i], p[i + 1], eps);
            const Interval& rl = reach_left[j];
            Interval rr{}, rt{};
            if (!reach_bottom.empty()) {
                rr = right_free;
                rt = rl.empty() ? intersect(top_free, {reach_bottom.lo, 1.0}) : top_free;
            } else if (!rl.empty()) {
                rr = intersect(right_free, {rl.lo, 1.0});
                rt = top_free;
            }
            reach_left[j] = rr;
            reach_bottom = rt;
            if (i + 1 == n && j + 1 == m) {
                last_right = rr;
                last_top = rt;
            }
        }
    }
    return (!last_right.empty() && last_right.hi == 1.0) || (!last_top.empty() && last_top.hi == 1.0);
}

}  // namespace detail

/// Sup distance including left limits; exact for piecewise-linear paths.
inline double d_uniform(const CadlagPath& x, const CadlagPath& y) {
    detail::require_same_domain(x, y);
    double d = std::abs(x.initial_left() - y.initial_left());
    for (double t : merged_times(x, y)) {
        d = std::max(d, std::abs(x.eval(t) - y.eval(t)));
        d = std::max(d, std::abs(x.left_limit(t) - y.left_limit(t)));
    }
    return d;
}

/// Strong M1 distance as the Frechet distance of the completed graphs under
/// the max(|dt|, |dv|) ground metric. Returns a certified lower bound within
/// `tol` of the true value.
inline double d_m1(const CadlagPath& x, const CadlagPath& y, double tol = 1e-6) {
    detail::require_same_domain(x, y);
    if (!(tol > 0)) throw std::invalid_argument("d_m1: tol must be positive");
    const auto p = completed_graph(x).vertices;
    const auto q = completed_graph(y).vertices;
    double lo = std::max(detail::sup_dist(p.front(), q.front()), detail::sup_dist(p.back(), q.back()));
    if (detail::frechet_within(p, q, lo)) return lo;
    double hi = 0;
    for (const auto& a : p)
        for (const auto& b : q) hi = std::max(hi, detail::sup_dist(a, b));
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (detail::frechet_within(p, q, mid)) hi = mid;
        else lo = mid;
    }
    return lo;
}

namespace detail {

inline std::vector<double> jump_times_with_start(const CadlagPath& x) {
    std::vector<double> t;
    const auto& k = x.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i)
        if (k[i].right != k[i].left) t.push_back(k[i].t);
    return t;
}

/// sup over s in [a0, a1] of |x(lambda(s)) - y(s)| with lambda linear from
/// [a0, a1] onto [b0, b1]. Stops early once the cost reaches `limit`.
inline double warp_piece_cost(const CadlagPath& x, const CadlagPath& y, double a0, double a1, double b0, double b1,
                              double limit = std::numeric_limits<double>::infinity()) {
    double c = std::max(std::abs(x.eval(b0) - y.eval(a0)), std::abs(x.left_limit(b1) - y.left_limit(a1)));
    if (c >= limit) return c;
    const double ratio = (b1 - b0) / (a1 - a0);
    auto lam = [&](double s) { return std::clamp(b0 + (s - a0) * ratio, b0, b1); };
    auto inv = [&](double t) { return std::clamp(a0 + (t - b0) / ratio, a0, a1); };
    const auto& yk = y.knots();
    for (std::size_t i = y.locate(a0) + 1; i < yk.size() && yk[i].t < a1; ++i) {
        double s = yk[i].t, t = lam(s);
        if (t <= b0 || t >= b1) continue;
        c = std::max(c, std::abs(x.eval(t) - y.eval(s)));
        c = std::max(c, std::abs(x.left_limit(t) - y.left_limit(s)));
        if (c >= limit) return c;
    }
    const auto& xk = x.knots();
    for (std::size_t i = x.locate(b0) + 1; i < xk.size() && xk[i].t < b1; ++i) {
        double t = xk[i].t, s = inv(t);
        if (s <= a0 || s >= a1) continue;
        c = std::max(c, std::abs(x.eval(t) - y.eval(s)));
        c = std::max(c, std::abs(x.left_limit(t) - y.left_limit(s)));
        if (c >= limit) return c;
    }
    return c;
}

}  // namespace detail

/// Upper bound on the J1 distance: the best piecewise-linear time change
/// whose nodes lie on the union of both jump-time sets and a uniform grid.
/// The identity is always a candidate, so the result never exceeds
/// `d_uniform`.
inline double d_j1_upper(const CadlagPath& x, const CadlagPath& y, int warp_grid_size = 64) {
    detail::require_same_domain(x, y);
    if (warp_grid_size < 1) throw std::invalid_argument("d_j1_upper: warp grid must have at least one cell");
    std::vector<double> c;
    const double t0 = x.start(), t1 = x.end();
    for (int i = 0; i <= warp_grid_size; ++i) c.push_back(t0 + (t1 - t0) * i / warp_grid_size);
    c.back() = t1;
    for (double t : detail::jump_times_with_start(x)) c.push_back(t);
    for (double t : detail::jump_times_with_start(y)) c.push_back(t);
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    const std::size_t n = c.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(n * n, inf);
    auto at = [&](std::size_t a, std::size_t b) -> double& { return best[a * n + b]; };
    at(0, 0) = std::abs(x.initial_left() - y.initial_left());
    // the identity warp gives d_uniform, so costlier partial warps are dropped
    double ub = d_uniform(x, y);
    // a coarse pass on a subgrid tightens the bound before the full search
    if (warp_grid_size > 8 && warp_grid_size % 8 == 0) ub = std::min(ub, d_j1_upper(x, y, 8));
    auto relax = [&](std::size_t a, std::size_t b, std::size_t a2, std::size_t b2) {
        double base = at(a, b);
        double shift = std::max(std::abs(c[a] - c[b]), std::abs(c[a2] - c[b2]));
        double v = std::max(base, shift);
        if (v >= at(a2, b2) || v >= ub) return;
        v = std::max(v, detail::warp_piece_cost(x, y, c[a], c[a2], c[b], c[b2], std::min(at(a2, b2), ub)));
        if (v < ub) at(a2, b2) = std::min(at(a2, b2), v);
    };
    for (std::size_t a = 0; a + 1 < n; ++a) {
        for (std::size_t b = 0; b + 1 < n; ++b) {
            if (at(a, b) >= ub) continue;
            for (std::size_t b2 = b + 1; b2 < n && c[b2] - c[a + 1] < ub; ++b2) relax(a, b, a + 1, b2);
            for (std::size_t a2 = a + 2; a2 < n && c[a2] - c[b + 1] < ub; ++a2) relax(a, b, a2, b + 1);
        }
    }
    return std::min(at(n - 1, n - 1), ub);
}

/// Levy-Prokhorov distance between nondecreasing paths with matching
/// endpoints, read as distribution functions.
inline double d_levy_prokhorov(const CadlagPath& x, const CadlagPath& y, double tol = 1e-12) {
    detail::require_same_domain(x, y);
    const double slack = 1e-9;
    if (!is_nondecreasing(x, slack) || !is_nondecreasing(y, slack))
        throw std::invalid_argument("d_levy_prokhorov: paths must be nondecreasing");
    if (std::abs(x.initial_left() - y.initial_left()) > slack || std::abs(x.eval(x.end()) - y.eval(y.end())) > slack)
        throw std::invalid_argument("d_levy_prokhorov: paths must share their endpoints");
    const double t0 = x.start(), t1 = x.end();
    auto dominated = [&](const CadlagPath& a, const CadlagPath& b, double eps) {
        std::vector<double> cand{t0, t1, std::max(t0, t1 - eps)};
        for (const auto& k : a.knots()) cand.push_back(k.t);
        for (const auto& k : b.knots())
            if (k.t - eps >= t0) cand.push_back(k.t - eps);
        for (double t : cand) {
            double s = std::min(t + eps, t1);
            if (a.eval(t) > b.eval(s) + eps + 1e-15) return false;
            if (t > t0 && a.left_limit(t) > b.left_limit(s) + eps + 1e-15) return false;
        }
        return true;
    };
    auto ok = [&](double eps) { return dominated(x, y, eps) && dominated(y, x, eps); };
    if (ok(0.0)) return 0.0;
    double range = std::max(x.eval(t1) - x.initial_left(), y.eval(t1) - y.initial_left());
    double lo = 0.0, hi = std::max(range, t1 - t0) + 1.0;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (ok(mid)) hi = mid;
        else lo = mid;
    }
    return hi;
}

/// M1 oscillation: the largest distance of x(t2) from the segment
/// [x(t1), x(t3)] over t1 < t2 < t3 in [t - delta, t + delta].
inline double m1_oscillation(const CadlagPath& x, double t, double delta) {
    if (!(delta >= 0)) throw std::invalid_argument("m1_oscillation: delta must be nonnegative");
    const double a = std::max(x.start(), t - delta), b = std::min(x.end(), t + delta);
    std::vector<double> v{x.eval(a)};
    const auto& k = x.knots();
    for (std::size_t i = x.locate(a) + 1; i < k.size() && k[i].t < b; ++i) {
        v.push_back(k[i].left);
        v.push_back(k[i].right);
    }
    if (b > a) {
        v.push_back(x.left_limit(b));
        v.push_back(x.eval(b));
    }
    const std::size_t m = v.size();
    if (m < 3) return 0.0;
    std::vector<double> pmin(m), pmax(m), smin(m), smax(m);
    pmin[0] = pmax[0] = v[0];
    for (std::size_t i = 1; i < m; ++i) {
        pmin[i] = std::min(pmin[i - 1], v[i]);
        pmax[i] = std::max(pmax[i - 1], v[i]);
    }
    smin[m - 1] = smax[m - 1] = v[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) {
        smin[i] = std::min(smin[i + 1], v[i]);
        smax[i] = std::max(smax[i + 1], v[i]);
    }
    double w = 0;
    for (std::size_t j = 1; j + 1 < m; ++j) {
        w = std::max(w, v[j] - std::max(pmin[j - 1], smin[j + 1]));
        w = std::max(w, std::min(pmax[j - 1], smax[j + 1]) - v[j]);
    }
    return w;
}

}  // namespace impactlab

#endif
