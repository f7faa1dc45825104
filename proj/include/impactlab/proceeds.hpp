#ifndef IMPACTLAB_PROCEEDS_HPP
#define IMPACTLAB_PROCEEDS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cadlag_path.hpp"
#include "impact.hpp"
#include "market.hpp"

namespace impactlab {

/// Total proceeds L(end+) and the running proceeds path. The terminal
/// trade, if any, is in `running.terminal_right()`.
struct ProceedsResult {
    double total = 0;
    CadlagPath running;
};

struct ProceedsBreakdown {
    double stoch_integral = 0;
    double drift_term = 0;
    double delta_G = 0;
    double jump_sum = 0;
    double total = 0;
    CadlagPath running;
};

namespace detail {

inline ProceedsResult finish(const Trajectory& tr, const std::vector<double>& l, const std::vector<double>& r) {
    return {r.back(), path_from_samples(tr.t, l, r)};
}

/// Simpson rule in the clock for a function of Y over cell k, with the
/// midpoint taken from the impact flow.
template <class Fn>
double cell_simpson(const ImpactModel& model, const Trajectory& tr, std::size_t k, Fn fn) {
    const double dc = tr.clock[k + 1] - tr.clock[k];
    if (dc == 0) return 0.0;
    const double rate = model.eta * (tr.th_l[k + 1] - tr.th_r[k]) / dc;
    const double ym = impact_flow(model.h, tr.y_r[k], rate, 0.5 * dc);
    return dc / 6.0 * (fn(tr.y_r[k]) + 4.0 * fn(ym) + fn(tr.y_l[k + 1]));
}

/// -int g(S-bar, Y) dTheta over cell k. Theta and S-bar are linear in the
/// clock across the cell and Y follows the impact flow.
inline double cell_fv(const ImpactModel& model, const Trajectory& tr, std::size_t k) {
    const double d = tr.th_l[k + 1] - tr.th_r[k];
    if (d == 0) return 0.0;
    const double dc = tr.clock[k + 1] - tr.clock[k];
    const double s0 = tr.s_r[k], s1 = tr.s_l[k + 1], y0 = tr.y_r[k], y1 = tr.y_l[k + 1];
    const double rate = dc > 0 ? model.eta * d / dc : 0.0;
    auto integrand = [&](double u) {
        double y = dc > 0 ? impact_flow(model.h, y0, rate, u * dc) : y0 + u * (y1 - y0);
        return model.g.g(s0 + u * (s1 - s0), y);
    };
    return -d * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, 0.0, 1.0, 5, 1e-13);
}

inline double block_proceeds(const PriceImpact& g, double eta, double s, double y, double d) {
    if (d == 0) return 0.0;
    return -g.block_integral(s, y, eta * d) / eta;
}

}  // namespace detail

/// Proceeds -int g(S-bar, Y) dTheta for a continuous finite-variation
/// strategy, by Gauss-Kronrod quadrature in each grid cell.
inline ProceedsResult proceeds_continuous_fv(const CadlagPath& strategy, const MarketScenario& m,
                                             const ImpactModel& model) {
    if (strategy.has_jumps() || strategy.terminal_right() != strategy.eval(strategy.end()))
        throw std::invalid_argument("continuous proceeds need a strategy without jumps");
    Trajectory tr = build_trajectory(strategy, m, model);
    const std::size_t n = tr.size();
    std::vector<double> l(n, 0.0), r(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        l[k + 1] = r[k + 1] = r[k] + detail::cell_fv(model, tr, k);
    }
    return detail::finish(tr, l, r);
}

/// Proceeds of a finite-variation strategy: the continuous part as above,
/// plus -(1/eta) int_0^{eta dTheta} g(S-bar_-, Y_- + x) dx for each block.
inline ProceedsResult proceeds_fv(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model) {
    Trajectory tr = build_trajectory(strategy, m, model);
    const std::size_t n = tr.size();
    std::vector<double> l(n, 0.0), r(n, 0.0);
    auto block = [&](std::size_t k) {
        return detail::block_proceeds(model.g, model.eta, tr.s_l[k], tr.y_l[k], tr.th_r[k] - tr.th_l[k]);
    };
    r[0] = block(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double step = detail::cell_fv(model, tr, k);
        l[k + 1] = r[k] + step;
        r[k + 1] = l[k + 1] + block(k + 1);
    }
    return detail::finish(tr, l, r);
}

/// Proceeds from the integration-by-parts representation
///   (1/eta) [ int G_x dS-bar + int (G_xx/2 d[S-bar]^c - g h d<M>)
///             - (G(S-bar_T, Y_T) - G(S-bar_0, Y_0-)) + jump corrections ].
/// Works for any strategy; the Ito correction uses realised squared
/// increments of the continuous part of S-bar.
inline ProceedsBreakdown proceeds_general(const CadlagPath& strategy, const MarketScenario& m,
                                          const ImpactModel& model) {
    Trajectory tr = build_trajectory(strategy, m, model);
    const auto& g = model.g;
    const std::size_t n = tr.size();
    ProceedsBreakdown out;
    std::vector<double> l(n, 0.0), r(n, 0.0);
    const double w = 1.0 / model.eta;
    auto point = [&](std::size_t k) {
        double ds = tr.s_r[k] - tr.s_l[k];
        double y = tr.y_l[k];
        double stoch = 0, jump = 0;
        if (ds != 0) {
            double gx = g.G_x(tr.s_l[k], y);
            stoch = gx * ds;
            jump = g.G(tr.s_r[k], y) - g.G(tr.s_l[k], y) - gx * ds;
        }
        double delta = -(g.G(tr.s_r[k], tr.y_r[k]) - g.G(tr.s_l[k], tr.y_l[k]));
        out.stoch_integral += w * stoch;
        out.jump_sum += w * jump;
        out.delta_G += w * delta;
        return w * (stoch + jump + delta);
    };
    r[0] = point(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double s0 = tr.s_r[k], y0 = tr.y_r[k];
        const double s1 = tr.s_l[k + 1], y1 = tr.y_l[k + 1];
        const double ds = s1 - s0;
        double stoch = ds != 0 ? g.G_x(s0, y0) * ds : 0.0;
        double ito = (ds != 0 && !g.is_multiplicative()) ? 0.5 * g.G_xx(s0, y0) * ds * ds : 0.0;
        double drift = -detail::cell_simpson(model, tr, k, [&](double y) { return g.g(s1, y) * model.h(y); });
        double delta = -(g.G(s1, y1) - g.G(s0, y0));
        out.stoch_integral += w * stoch;
        out.drift_term += w * (ito + drift);
        out.delta_G += w * delta;
        l[k + 1] = r[k] + w * (stoch + ito + drift + delta);
        r[k + 1] = l[k + 1] + point(k + 1);
    }
    out.total = r.back();
    out.running = detail::path_from_samples(tr.t, l, r);
    return out;
}

/// Proceeds in Ito form for a semimartingale strategy sampled on the grid:
///   -int g dTheta - (eta/2) int g_y d[Theta]^c - int g_x d[S-bar, Theta]
///   - sum over blocks of the block integral minus g dTheta,
/// with left-point sums and realised brackets.
inline ProceedsResult proceeds_semimartingale(const CadlagPath& strategy, const MarketScenario& m,
                                              const ImpactModel& model) {
    Trajectory tr = build_trajectory(strategy, m, model);
    const auto& g = model.g;
    const std::size_t n = tr.size();
    std::vector<double> l(n, 0.0), r(n, 0.0);
    auto block = [&](std::size_t k) {
        return detail::block_proceeds(g, model.eta, tr.s_l[k], tr.y_l[k], tr.th_r[k] - tr.th_l[k]);
    };
    r[0] = block(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double s = tr.s_r[k], y = tr.y_r[k];
        const double dth = tr.th_l[k + 1] - tr.th_r[k];
        const double ds = tr.s_l[k + 1] - tr.s_r[k];
        double inc = 0;
        if (dth != 0)
            inc = -g.g(s, y) * dth - 0.5 * model.eta * g.g_y(s, y) * dth * dth - g.g_x(s, y) * ds * dth;
        l[k + 1] = r[k] + inc;
        r[k + 1] = l[k + 1] + block(k + 1);
    }
    return detail::finish(tr, l, r);
}

namespace detail {

/// State (L, Y, S-bar) driven by (Theta, S-bar, <M>).
using MarcusState = std::array<double, 3>;

inline MarcusState marcus_rhs(const ImpactModel& model, const MarcusState& x, double dth, double ds, double dc) {
    return {-model.g.g(x[2], x[1]) * dth, model.eta * dth - model.h(x[1]) * dc, ds};
}

inline MarcusState marcus_flow(const ImpactModel& model, MarcusState x, double dth, double ds, double dc, int steps) {
    const double hstep = 1.0 / steps;
    auto axpy = [](const MarcusState& a, double s, const MarcusState& b) {
        return MarcusState{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]};
    };
    for (int i = 0; i < steps; ++i) {
        auto k1 = marcus_rhs(model, x, dth, ds, dc);
        auto k2 = marcus_rhs(model, axpy(x, 0.5 * hstep, k1), dth, ds, dc);
        auto k3 = marcus_rhs(model, axpy(x, 0.5 * hstep, k2), dth, ds, dc);
        auto k4 = marcus_rhs(model, axpy(x, hstep, k3), dth, ds, dc);
        for (int j = 0; j < 3; ++j) x[j] += hstep / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    }
    return x;
}

}  // namespace detail

/// Independent proceeds oracle: integrates the Marcus system for
/// (L, Y, S-bar) cell by cell with RK4 and applies the flow map at jumps.
/// It does not reuse the impact solver.
inline ProceedsResult marcus_oracle(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model) {
    Trajectory tr = detail::merge_market(strategy, m);
    const std::size_t n = tr.size();
    std::vector<double> l(n, 0.0), r(n, 0.0);
    const double lip = model.h.kind == Resilience::Kind::zero ? 0.0 : model.h.lipschitz;
    detail::MarcusState x{0.0, model.y0_minus, tr.s_l[0]};
    auto jump = [&](std::size_t k) {
        double dth = tr.th_r[k] - tr.th_l[k];
        double ds = tr.s_r[k] - tr.s_l[k];
        if (dth != 0 && ds != 0) throw std::invalid_argument("strategy and price driver jump together");
        if (dth != 0) x = detail::marcus_flow(model, x, dth, 0.0, 0.0, 256);
        x[2] = tr.s_r[k];
    };
    jump(0);
    r[0] = x[0];
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double dth = tr.th_l[k + 1] - tr.th_r[k];
        double ds = tr.s_l[k + 1] - tr.s_r[k];
        double dc = tr.clock[k + 1] - tr.clock[k];
        double size = model.eta * std::abs(dth) + lip * dc + std::abs(ds) / std::max(std::abs(x[2]), 1e-12);
        int steps = 4 + static_cast<int>(std::ceil(100.0 * size));
        x = detail::marcus_flow(model, x, dth, ds, dc, steps);
        l[k + 1] = x[0];
        jump(k + 1);
        r[k + 1] = x[0];
    }
    return detail::finish(tr, l, r);
}

namespace detail {

inline void require_product_form(const ImpactModel& model) {
    if (!model.g.is_multiplicative()) throw std::invalid_argument("this quantity needs g(x, y) = x f(y)");
}

}  // namespace detail

/// Liquidation value V = beta0 + L + S-bar (F(Y) - F(Y - Theta)) computed
/// directly from proceeds and the impact path.
inline CadlagPath liquidation_value(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model,
                                    double beta0 = 0.0) {
    detail::require_product_form(model);
    if (model.eta != 1.0) throw std::invalid_argument("liquidation value needs full impact (eta = 1)");
    const auto& c = model.g.curve();
    Trajectory tr = build_trajectory(strategy, m, model);
    ProceedsResult p = proceeds_fv(strategy, m, model);
    const std::size_t n = tr.size();
    std::vector<double> l(n), r(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& kn = p.running.knots()[k];
        l[k] = beta0 + kn.left + tr.s_l[k] * (c.F(tr.y_l[k]) - c.F(tr.y_l[k] - tr.th_l[k]));
        r[k] = beta0 + kn.right + tr.s_r[k] * (c.F(tr.y_r[k]) - c.F(tr.y_r[k] - tr.th_r[k]));
    }
    return detail::path_from_samples(tr.t, l, r);
}

/// The same value from its dynamics
///   dV = (F(Y_-) - F(Y_- - Theta_-)) dS-bar - S-bar h(Y_-) (f(Y_-) - f(Y_- - Theta_-)) d<M>,
/// stepped with left-point sums; V does not move at block trades.
inline CadlagPath liquidation_value_sde(const CadlagPath& strategy, const MarketScenario& m, const ImpactModel& model,
                                        double beta0 = 0.0) {
    detail::require_product_form(model);
    if (model.eta != 1.0) throw std::invalid_argument("liquidation value needs full impact (eta = 1)");
    const auto& c = model.g.curve();
    Trajectory tr = build_trajectory(strategy, m, model);
    const std::size_t n = tr.size();
    std::vector<double> v(n);
    v[0] = beta0 + tr.s_l[0] * (c.F(tr.y_l[0]) - c.F(tr.y_l[0] - tr.th_l[0]));
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double y = tr.y_r[k], th = tr.th_r[k], s = tr.s_r[k];
        const double dF = c.F(y) - c.F(y - th);
        const double ds = tr.s_r[k + 1] - s;
        const double dc = tr.clock[k + 1] - tr.clock[k];
        v[k + 1] = v[k] + dF * ds - s * model.h(y) * (c.f(y) - c.f(y - th)) * dc;
    }
    return detail::path_from_samples(tr.t, v, v);
}

/// Proceeds with partial impact eta in product form:
///   (1/eta) ( int F(Y) dS-bar - int S-bar f(Y) h(Y) d<M> - [S-bar F(Y)] ).
inline ProceedsResult proceeds_partial_recovery(const CadlagPath& strategy, const MarketScenario& m,
                                                const ImpactModel& model) {
    detail::require_product_form(model);
    const auto& c = model.g.curve();
    Trajectory tr = build_trajectory(strategy, m, model);
    const std::size_t n = tr.size();
    const double w = 1.0 / model.eta;
    std::vector<double> l(n, 0.0), r(n, 0.0);
    auto sf = [&](double s, double y) { return s * c.F(y); };
    auto at_point = [&](std::size_t k) {
        double a = c.F(tr.y_l[k]) * (tr.s_r[k] - tr.s_l[k]);
        return w * (a - (sf(tr.s_r[k], tr.y_r[k]) - sf(tr.s_l[k], tr.y_l[k])));
    };
    r[0] = at_point(0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double y0 = tr.y_r[k], y1 = tr.y_l[k + 1], s0 = tr.s_r[k], s1 = tr.s_l[k + 1];
        double integral = c.F(y0) * (s1 - s0);
        double drift = s1 * detail::cell_simpson(model, tr, k, [&](double y) { return c.f(y) * model.h(y); });
        l[k + 1] = r[k] + w * (integral - drift - (sf(s1, y1) - sf(s0, y0)));
        r[k + 1] = l[k + 1] + at_point(k + 1);
    }
    return detail::finish(tr, l, r);
}

/// Pathwise proceeds under stochastic liquidity for g = x f(y):
///   int S-bar psi(Y_-) dt + S-bar_0 F(Y_0-) - S-bar_T F(Y_T)
///   + int F(Y_-) dS-bar + sigma_hat int S-bar f(Y_-) dB,
/// with psi(y) = -beta y f(y) + sigma_hat^2/2 f'(y). F may use any base point.
inline double proceeds_stochastic_liquidity(const Trajectory& tr, const ImpactCurve& curve,
                                            const StochasticLiquidity& liq) {
    if (tr.dB.size() + 1 != tr.size()) throw std::invalid_argument("trajectory has no Brownian increments");
    auto psi = [&](double y) {
        return -liq.beta * y * curve.f(y) + 0.5 * liq.sigma_hat * liq.sigma_hat * curve.df(y);
    };
    const std::size_t n = tr.size();
    double acc = tr.s_l[0] * curve.F(tr.y_l[0]) - tr.s_r[n - 1] * curve.F(tr.y_r[n - 1]);
    acc += curve.F(tr.y_l[0]) * (tr.s_r[0] - tr.s_l[0]);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double s = tr.s_r[k], y = tr.y_r[k], dt = tr.t[k + 1] - tr.t[k];
        acc += s * psi(y) * dt;
        acc += curve.F(y) * (tr.s_l[k + 1] - s) + curve.F(tr.y_l[k + 1]) * (tr.s_r[k + 1] - tr.s_l[k + 1]);
        acc += liq.sigma_hat * s * curve.f(y) * tr.dB[k];
    }
    return acc;
}

/// Block-trade proceeds under stochastic liquidity:
/// -sum S-bar_- (F(Y_- + dTheta) - F(Y_-)), exact for step strategies.
inline double block_proceeds_stochastic(const Trajectory& tr, const ImpactCurve& curve) {
    double acc = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        double d = tr.th_r[k] - tr.th_l[k];
        if (d != 0) acc -= tr.s_l[k] * (curve.F(tr.y_l[k] + d) - curve.F(tr.y_l[k]));
    }
    return acc;
}

}  // namespace impactlab

#endif
