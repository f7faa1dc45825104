#ifndef IMPACTLAB_IMPACT_HPP
#define IMPACTLAB_IMPACT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cadlag_path.hpp"
#include "market.hpp"

namespace impactlab {

/// Resilience speed h(y); Lipschitz, h(0) = 0, sign(h(y)) = sign(y).
struct Resilience {
    enum class Kind { zero, linear, polynomial };
    Kind kind = Kind::zero;
    double beta = 0;
    std::vector<double> coeffs;  ///< h(y) = sum coeffs[i] * y^(i+1)
    double lipschitz = 0;

    static Resilience zero() { return {}; }
    static Resilience linear(double beta) {
        if (!(beta >= 0)) throw std::invalid_argument("resilience rate must be nonnegative");
        return {Kind::linear, beta, {}, beta};
    }
    /// `lipschitz` bounds |h'| on the region the impact process visits.
    static Resilience polynomial(std::vector<double> coeffs, double lipschitz) {
        if (coeffs.empty() || !(lipschitz > 0)) throw std::invalid_argument("polynomial resilience needs coefficients and a Lipschitz bound");
        return {Kind::polynomial, 0, std::move(coeffs), lipschitz};
    }

    double operator()(double y) const {
        switch (kind) {
            case Kind::zero: return 0;
            case Kind::linear: return beta * y;
            case Kind::polynomial: {
                double acc = 0;
                for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * y + coeffs[i];
                return acc * y;
            }
        }
        return 0;
    }
};

/// Impact curve f of the multiplicative model g(x, y) = x f(y), with
/// F(y) = integral of f from 0 to y.
struct ImpactCurve {
    enum class Kind { exponential, polynomial };
    Kind kind = Kind::exponential;
    double lambda = 1;
    std::vector<double> coeffs;  ///< f(y) = sum coeffs[i] * y^i

    static ImpactCurve exponential(double lambda) {
        if (!(lambda > 0)) throw std::invalid_argument("exponential impact needs lambda > 0");
        return {Kind::exponential, lambda, {}};
    }
    static ImpactCurve polynomial(std::vector<double> coeffs) {
        if (coeffs.empty()) throw std::invalid_argument("polynomial impact needs coefficients");
        return {Kind::polynomial, 0, std::move(coeffs)};
    }

    double f(double y) const {
        if (kind == Kind::exponential) return std::exp(lambda * y);
        return horner(coeffs, y);
    }
    double df(double y) const {
        if (kind == Kind::exponential) return lambda * std::exp(lambda * y);
        return horner(derivative(coeffs), y);
    }
    double d2f(double y) const {
        if (kind == Kind::exponential) return lambda * lambda * std::exp(lambda * y);
        return horner(derivative(derivative(coeffs)), y);
    }
    double F(double y) const {
        if (kind == Kind::exponential) return std::expm1(lambda * y) / lambda;
        std::vector<double> c(coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) c[i + 1] = coeffs[i] / static_cast<double>(i + 1);
        return horner(c, y);
    }

private:
    static double horner(const std::vector<double>& c, double y) {
        double acc = 0;
        for (std::size_t i = c.size(); i-- > 0;) acc = acc * y + c[i];
        return acc;
    }
    static std::vector<double> derivative(const std::vector<double>& c) {
        if (c.size() <= 1) return {0.0};
        std::vector<double> d(c.size() - 1);
        for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
        return d;
    }
};

/// Callables for a price-impact function that is not of product form.
struct GenericImpact {
    std::function<double(double, double)> g, g_x, g_xx, g_y;
};

/// Observed price S = g(S-bar, Y). G, G_x, G_xx integrate in y from 0.
class PriceImpact {
public:
    static PriceImpact multiplicative(ImpactCurve f) {
        PriceImpact p;
        p.curve_ = std::move(f);
        return p;
    }
    static PriceImpact generic(GenericImpact fns) {
        if (!fns.g || !fns.g_x || !fns.g_xx || !fns.g_y) throw std::invalid_argument("generic impact needs g, g_x, g_xx, g_y");
        PriceImpact p;
        p.generic_ = std::make_shared<GenericImpact>(std::move(fns));
        return p;
    }

    bool is_multiplicative() const { return !generic_; }
    const ImpactCurve& curve() const {
        if (generic_) throw std::logic_error("price impact has no product form");
        return curve_;
    }

    double g(double x, double y) const { return generic_ ? generic_->g(x, y) : x * curve_.f(y); }
    double g_x(double x, double y) const { return generic_ ? generic_->g_x(x, y) : curve_.f(y); }
    double g_xx(double x, double y) const { return generic_ ? generic_->g_xx(x, y) : 0.0; }
    double g_y(double x, double y) const { return generic_ ? generic_->g_y(x, y) : x * curve_.df(y); }

    double G(double x, double y) const {
        return generic_ ? integrate([&](double z) { return generic_->g(x, z); }, 0, y) : x * curve_.F(y);
    }
    double G_x(double x, double y) const {
        return generic_ ? integrate([&](double z) { return generic_->g_x(x, z); }, 0, y) : curve_.F(y);
    }
    double G_xx(double x, double y) const {
        return generic_ ? integrate([&](double z) { return generic_->g_xx(x, z); }, 0, y) : 0.0;
    }

    /// Integral of g(x, y + u) over u in [0, d].
    double block_integral(double x, double y, double d) const {
        if (!generic_) return x * (curve_.F(y + d) - curve_.F(y));
        return integrate([&](double z) { return generic_->g(x, z); }, y, y + d);
    }

private:
    template <class Fn>
    static double integrate(Fn fn, double a, double b) {
        if (a == b) return 0.0;
        return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn, a, b, 12, 1e-13);
    }

    ImpactCurve curve_ = ImpactCurve::exponential(1.0);
    std::shared_ptr<const GenericImpact> generic_;
};

struct ImpactModel {
    Resilience h;
    PriceImpact g = PriceImpact::multiplicative(ImpactCurve::exponential(1.0));
    double eta = 1.0;       ///< fraction of each trade that moves the impact process
    double y0_minus = 0.0;  ///< impact before the first trade
};

/// Market, strategy and impact sampled on one merged grid. Index k carries
/// left limits (`*_l`) and values (`*_r`) at t[k].
struct Trajectory {
    std::vector<double> t, s_l, s_r, clock, th_l, th_r, y_l, y_r;
    std::vector<double> dB;  ///< Brownian increment over (t[k], t[k+1]]; empty when not aligned
    std::size_t size() const { return t.size(); }
};

namespace detail {

inline void require_matching_domain(const CadlagPath& strategy, const MarketScenario& m) {
    if (strategy.start() != m.start() || strategy.end() != m.end())
        throw std::invalid_argument("strategy and market live on different domains");
}

/// Market values at arbitrary times, interpolating the continuous part
/// inside a market cell.
inline Trajectory merge_market(const CadlagPath& strategy, const MarketScenario& m) {
    require_matching_domain(strategy, m);
    Trajectory tr;
    std::vector<double> times(m.t);
    for (const auto& k : strategy.knots()) times.push_back(k.t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const bool aligned = times.size() == m.t.size();
    std::size_t cell = 0;
    for (double t : times) {
        while (cell + 1 < m.t.size() && m.t[cell + 1] <= t) ++cell;
        double sl, sr, c;
        if (m.t[cell] == t) {
            sl = m.sbar_left[cell];
            sr = m.sbar[cell];
            c = m.clock[cell];
        } else {
            double w = (t - m.t[cell]) / (m.t[cell + 1] - m.t[cell]);
            sl = sr = m.sbar[cell] + w * (m.sbar_left[cell + 1] - m.sbar[cell]);
            c = m.clock[cell] + w * (m.clock[cell + 1] - m.clock[cell]);
        }
        tr.t.push_back(t);
        tr.s_l.push_back(sl);
        tr.s_r.push_back(sr);
        tr.clock.push_back(c);
        tr.th_l.push_back(strategy.left_limit(t));
        tr.th_r.push_back(t == strategy.end() ? strategy.terminal_right() : strategy.eval(t));
    }
    if (aligned) tr.dB = m.dB;
    return tr;
}

/// Advances dY/dc = -h(Y) + rate over a clock increment dc.
inline double impact_flow(const Resilience& h, double y, double rate, double dc) {
    if (dc == 0) return y;
    switch (h.kind) {
        case Resilience::Kind::zero: return y + rate * dc;
        case Resilience::Kind::linear: {
            if (h.beta == 0) return y + rate * dc;
            double x = h.beta * dc;
            return y * std::exp(-x) + rate * (-std::expm1(-x)) / h.beta;
        }
        case Resilience::Kind::polynomial: {
            int n = std::max(1, static_cast<int>(std::ceil(h.lipschitz * dc / 0.01)));
            double s = dc / n;
            auto rhs = [&](double v) { return -h(v) + rate; };
            for (int i = 0; i < n; ++i) {
                double k1 = rhs(y), k2 = rhs(y + 0.5 * s * k1), k3 = rhs(y + 0.5 * s * k2), k4 = rhs(y + s * k3);
                y += s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            }
            return y;
        }
    }
    return y;
}

inline void fill_impact(Trajectory& tr, const ImpactModel& model) {
    const std::size_t n = tr.size();
    tr.y_l.assign(n, 0.0);
    tr.y_r.assign(n, 0.0);
    tr.y_l[0] = model.y0_minus;
    tr.y_r[0] = tr.y_l[0] + model.eta * (tr.th_r[0] - tr.th_l[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double dth = tr.th_l[k + 1] - tr.th_r[k];
        double dc = tr.clock[k + 1] - tr.clock[k];
        double y;
        if (dc > 0) y = impact_flow(model.h, tr.y_r[k], model.eta * dth / dc, dc);
        else y = tr.y_r[k] + model.eta * dth;
        tr.y_l[k + 1] = y;
        tr.y_r[k + 1] = y + model.eta * (tr.th_r[k + 1] - tr.th_l[k + 1]);
    }
}

inline CadlagPath path_from_samples(const std::vector<double>& t, const std::vector<double>& l,
                                    const std::vector<double>& r) {
    std::vector<Knot> k(t.size());
    std::vector<SegmentKind> kinds;
    for (std::size_t i = 0; i < t.size(); ++i) {
        k[i] = {t[i], l[i], r[i]};
        if (i > 0) kinds.push_back(l[i] == r[i - 1] ? SegmentKind::constant : SegmentKind::linear);
    }
    return CadlagPath(std::move(k), std::move(kinds));
}

}  // namespace detail

/// Market, strategy and deterministic-resilience impact on the merged grid.
inline Trajectory build_trajectory(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model) {
    if (!(model.eta > 0 && model.eta <= 1)) throw std::invalid_argument("eta must lie in (0, 1]");
    Trajectory tr = detail::merge_market(strategy, m);
    detail::fill_impact(tr, model);
    return tr;
}

/// Impact process Y for dY = -h(Y) d<M> + eta dTheta with Y(start-) = y0_minus.
/// Exact exponential steps for linear h, RK4 with sub-stepping otherwise.
inline CadlagPath solve_impact(const CadlagPath& strategy, const ImpactModel& model, const MarketScenario& m) {
    Trajectory tr = build_trajectory(strategy, m, model);
    return detail::path_from_samples(tr.t, tr.y_l, tr.y_r);
}

/// Impact with stochastic liquidity: dY = -beta Y dt + sigma_hat dB + dTheta.
struct StochasticLiquidity {
    double beta = 1;
    double sigma_hat = 0;
    double y0_minus = 0;
};

namespace detail {

struct OuCell {
    double decay, drive, noise;
};

/// Transition weights over a cell of length dt: Y' = decay * Y + drive * dTheta
/// + noise * sigma_hat * dB. `drive` integrates a linear strategy piece
/// exactly; `noise` rescales dB so the conditional variance is exact.
inline OuCell ou_cell(double beta, double dt) {
    if (beta == 0) return {1.0, 1.0, 1.0};
    double x = beta * dt;
    double decay = std::exp(-x);
    double drive = -std::expm1(-x) / x;
    double noise = std::sqrt(-std::expm1(-2 * x) / (2 * x));
    return {decay, drive, noise};
}

}  // namespace detail

/// Impact under stochastic liquidity on the market grid. Strategy knots
/// must be grid times so the Brownian increments line up.
inline Trajectory build_stochastic_trajectory(const CadlagPath& strategy, const StochasticLiquidity& liq,
                                              const MarketScenario& m) {
    if (liq.beta < 0 || liq.sigma_hat < 0) throw std::invalid_argument("invalid liquidity parameters");
    Trajectory tr = detail::merge_market(strategy, m);
    if (tr.dB.empty()) throw std::invalid_argument("strategy knots must lie on the market grid");
    const std::size_t n = tr.size();
    tr.y_l.assign(n, 0.0);
    tr.y_r.assign(n, 0.0);
    tr.y_l[0] = liq.y0_minus;
    tr.y_r[0] = liq.y0_minus + tr.th_r[0] - tr.th_l[0];
    for (std::size_t k = 0; k + 1 < n; ++k) {
        auto c = detail::ou_cell(liq.beta, tr.t[k + 1] - tr.t[k]);
        double dth = tr.th_l[k + 1] - tr.th_r[k];
        tr.y_l[k + 1] = c.decay * tr.y_r[k] + c.drive * dth + c.noise * liq.sigma_hat * tr.dB[k];
        tr.y_r[k + 1] = tr.y_l[k + 1] + tr.th_r[k + 1] - tr.th_l[k + 1];
    }
    return tr;
}

inline CadlagPath solve_stochastic_impact(const CadlagPath& strategy, const StochasticLiquidity& liq,
                                          const MarketScenario& m) {
    Trajectory tr = build_stochastic_trajectory(strategy, liq, m);
    return detail::path_from_samples(tr.t, tr.y_l, tr.y_r);
}

/// Observed price g(S-bar, Y) sampled on a trajectory.
inline CadlagPath observed_price(const Trajectory& tr, const PriceImpact& g) {
    std::vector<double> l(tr.size()), r(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        l[k] = g.g(tr.s_l[k], tr.y_l[k]);
        r[k] = g.g(tr.s_r[k], tr.y_r[k]);
    }
    return detail::path_from_samples(tr.t, l, r);
}

}  // namespace impactlab

#endif
