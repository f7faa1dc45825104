#ifndef IMPACTLAB_CADLAG_PATH_HPP
#define IMPACTLAB_CADLAG_PATH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace impactlab {

enum class SegmentKind { constant, linear };

/// A breakpoint with its left limit and its value.
struct Knot {
    double t;
    double left;
    double right;
};

/// Piecewise-linear cadlag path on [start, end].
///
/// The first knot carries x(start-) as `left`; the last knot carries x(end-)
/// as `left` and the post-horizon value x(end+) as `right`. The path itself
/// is left-continuous at `end`, so `eval(end)` returns the left value and
/// the terminal jump only shows up once the path is extended.
class CadlagPath {
public:
    CadlagPath() = default;

    CadlagPath(std::vector<Knot> knots, std::vector<SegmentKind> kinds)
        : knots_(std::move(knots)), kinds_(std::move(kinds)) {
        validate();
    }

    static CadlagPath constant(double t0, double t1, double c) {
        return CadlagPath({{t0, c, c}, {t1, c, c}}, {SegmentKind::constant});
    }

    /// Step path: value `initial_left` before t0, then `values[i]` from
    /// `times[i]` on. A time equal to t1 becomes the terminal jump.
    static CadlagPath step(double t0, double t1, double initial_left,
                           const std::vector<double>& times,
                           const std::vector<double>& values) {
        if (times.size() != values.size())
            throw std::invalid_argument("step: times and values differ in size");
        std::vector<Knot> k;
        std::vector<SegmentKind> kinds;
        k.push_back({t0, initial_left, initial_left});
        double cur = initial_left;
        for (std::size_t i = 0; i < times.size(); ++i) {
            double t = times[i];
            if (t < t0 || t > t1) throw std::invalid_argument("step: time outside domain");
            if (i > 0 && !(t > times[i - 1])) throw std::invalid_argument("step: times must increase");
            if (t == k.back().t) {
                k.back().right = values[i];
            } else {
                kinds.push_back(SegmentKind::constant);
                k.push_back({t, cur, values[i]});
            }
            cur = values[i];
        }
        if (k.back().t < t1) {
            kinds.push_back(SegmentKind::constant);
            k.push_back({t1, cur, cur});
        }
        return CadlagPath(std::move(k), std::move(kinds));
    }

    /// Continuous polyline through (t[i], v[i]).
    static CadlagPath polyline(const std::vector<double>& t, const std::vector<double>& v) {
        if (t.size() != v.size() || t.size() < 2)
            throw std::invalid_argument("polyline: need at least two matching samples");
        std::vector<Knot> k;
        std::vector<SegmentKind> kinds;
        for (std::size_t i = 0; i < t.size(); ++i) {
            k.push_back({t[i], v[i], v[i]});
            if (i > 0) kinds.push_back(v[i] == v[i - 1] ? SegmentKind::constant : SegmentKind::linear);
        }
        return CadlagPath(std::move(k), std::move(kinds));
    }

    double start() const { return knots_.front().t; }
    double end() const { return knots_.back().t; }
    double initial_left() const { return knots_.front().left; }
    double terminal_right() const { return knots_.back().right; }
    const std::vector<Knot>& knots() const { return knots_; }
    const std::vector<SegmentKind>& kinds() const { return kinds_; }
    std::size_t size() const { return knots_.size(); }

    double eval(double t) const {
        check_domain(t);
        std::size_t i = locate(t);
        if (knots_[i].t == t) return (i + 1 == knots_.size()) ? knots_[i].left : knots_[i].right;
        return interp(i, t);
    }

    double left_limit(double t) const {
        check_domain(t);
        std::size_t i = locate(t);
        if (knots_[i].t == t) return knots_[i].left;
        return interp(i, t);
    }

    /// Jump x(t) - x(t-) at a knot time; zero elsewhere. The terminal knot
    /// reports the jump to x(end+).
    double jump_at(double t) const {
        check_domain(t);
        std::size_t i = locate(t);
        if (knots_[i].t != t) return 0.0;
        return knots_[i].right - knots_[i].left;
    }

    bool has_jumps() const {
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
            if (knots_[i].right != knots_[i].left) return true;
        return false;
    }

    /// Index of the last knot with time <= t.
    std::size_t locate(double t) const {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double a, const Knot& k) { return a < k.t; });
        std::size_t i = static_cast<std::size_t>(it - knots_.begin());
        return i == 0 ? 0 : i - 1;
    }

private:
    double interp(std::size_t i, double t) const {
        const Knot& a = knots_[i];
        const Knot& b = knots_[i + 1];
        if (kinds_[i] == SegmentKind::constant) return a.right;
        double w = (t - a.t) / (b.t - a.t);
        return a.right + w * (b.left - a.right);
    }

    void check_domain(double t) const {
        if (knots_.empty()) throw std::logic_error("empty path");
        if (!(t >= start() && t <= end()))
            throw std::out_of_range("time " + std::to_string(t) + " outside path domain");
    }

    void validate() const {
        if (knots_.size() < 2) throw std::invalid_argument("path needs at least two knots");
        if (kinds_.size() + 1 != knots_.size())
            throw std::invalid_argument("path needs one segment kind per interval");
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            const Knot& k = knots_[i];
            if (!std::isfinite(k.t) || !std::isfinite(k.left) || !std::isfinite(k.right))
                throw std::invalid_argument("path contains a non-finite value");
            if (i > 0) {
                if (!(k.t > knots_[i - 1].t)) throw std::invalid_argument("knot times must strictly increase");
                if (kinds_[i - 1] == SegmentKind::constant && k.left != knots_[i - 1].right)
                    throw std::invalid_argument("constant segment with mismatched endpoints");
            }
        }
    }

    std::vector<Knot> knots_;
    std::vector<SegmentKind> kinds_;
};

/// Incremental construction of cadlag paths.
class PathBuilder {
public:
    PathBuilder(double t0, double initial_left) { knots_.push_back({t0, initial_left, initial_left}); }

    double time() const { return knots_.back().t; }
    double value() const { return knots_.back().right; }

    PathBuilder& jump_to(double v) {
        knots_.back().right = v;
        return *this;
    }

    PathBuilder& line_to(double t, double v) { return segment_to(t, v, SegmentKind::linear); }
    PathBuilder& hold_to(double t) { return segment_to(t, value(), SegmentKind::constant); }

    PathBuilder& segment_to(double t, double v, SegmentKind kind) {
        if (!(t > time())) throw std::invalid_argument("builder: time must increase");
        double from = value();
        if (kind == SegmentKind::constant) v = from;
        if (v == from) kind = SegmentKind::constant;
        kinds_.push_back(kind);
        knots_.push_back({t, v, v});
        return *this;
    }

    CadlagPath build() const { return CadlagPath(knots_, kinds_); }

private:
    std::vector<Knot> knots_;
    std::vector<SegmentKind> kinds_;
};

/// Vertex of a completed graph in the (time, value) plane.
struct GraphPoint {
    double t;
    double v;
};

/// Completed graph as an ordered polyline: horizontal or sloped pieces for
/// the path, vertical pieces for jumps (including one at the start when
/// x(start-) differs from x(start)). The terminal jump is not part of it.
struct CompletedGraph {
    std::vector<GraphPoint> vertices;
};

inline CompletedGraph completed_graph(const CadlagPath& x) {
    CompletedGraph g;
    const auto& k = x.knots();
    auto push = [&](double t, double v) {
        if (!g.vertices.empty() && g.vertices.back().t == t && g.vertices.back().v == v) return;
        g.vertices.push_back({t, v});
    };
    for (std::size_t i = 0; i < k.size(); ++i) {
        push(k[i].t, k[i].left);
        if (i + 1 < k.size()) push(k[i].t, k[i].right);
    }
    if (g.vertices.size() == 1) g.vertices.push_back(g.vertices.front());
    return g;
}

/// Extends x to [start - eps, end + eps]: x(start-) before, x(end+) after.
inline CadlagPath extend_path(const CadlagPath& x, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("extend_path: eps must be positive");
    std::vector<Knot> k;
    std::vector<SegmentKind> kinds;
    const auto& src = x.knots();
    double a = x.initial_left();
    double b = x.terminal_right();
    k.push_back({x.start() - eps, a, a});
    kinds.push_back(SegmentKind::constant);
    for (std::size_t i = 0; i < src.size(); ++i) {
        k.push_back(src[i]);
        if (i + 1 < src.size()) kinds.push_back(x.kinds()[i]);
    }
    kinds.push_back(SegmentKind::constant);
    k.push_back({x.end() + eps, b, b});
    return CadlagPath(std::move(k), std::move(kinds));
}

struct PathStats {
    double total_variation = 0;
    double quadratic_jump_sum = 0;
    std::vector<double> jump_times;
};

/// Variation over [start, end), counting a jump at `start` but not the
/// terminal one.
inline PathStats path_stats(const CadlagPath& x) {
    PathStats s;
    const auto& k = x.knots();
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        double j = k[i].right - k[i].left;
        if (j != 0) {
            s.total_variation += std::abs(j);
            s.quadratic_jump_sum += j * j;
            s.jump_times.push_back(k[i].t);
        }
        s.total_variation += std::abs(k[i + 1].left - k[i].right);
    }
    return s;
}

/// Cumulative integral of x over [start, t], with x taken as x(start-)
/// for t < start.
inline double integral_to(const CadlagPath& x, double t) {
    const auto& k = x.knots();
    if (t <= x.start()) return x.initial_left() * (t - x.start());
    double acc = 0;
    for (std::size_t i = 0; i + 1 < k.size(); ++i) {
        double a = k[i].t, b = k[i + 1].t;
        if (t <= a) break;
        double hi = std::min(t, b);
        double va = k[i].right;
        double vb = x.kinds()[i] == SegmentKind::constant
                        ? va
                        : va + (hi - a) / (b - a) * (k[i + 1].left - va);
        acc += 0.5 * (va + vb) * (hi - a);
        if (t <= b) return acc;
    }
    return acc + x.terminal_right() * (t - x.end());
}

/// True if the path never decreases (including across jumps).
inline bool is_nondecreasing(const CadlagPath& x, double slack = 0.0) {
    const auto& k = x.knots();
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i + 1 < k.size() && k[i].right < k[i].left - slack) return false;
        if (i + 1 < k.size() && k[i + 1].left < k[i].right - slack) return false;
    }
    return true;
}

/// Sorted union of the knot times of both paths.
inline std::vector<double> merged_times(const CadlagPath& x, const CadlagPath& y) {
    std::vector<double> t;
    t.reserve(x.size() + y.size());
    for (const auto& k : x.knots()) t.push_back(k.t);
    for (const auto& k : y.knots()) t.push_back(k.t);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

}  // namespace impactlab

#endif
