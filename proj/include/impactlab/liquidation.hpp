#ifndef IMPACTLAB_LIQUIDATION_HPP
#define IMPACTLAB_LIQUIDATION_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "approx.hpp"
#include "cadlag_path.hpp"
#include "impact.hpp"
#include "market.hpp"
#include "proceeds.hpp"

namespace impactlab {

/// Optimal liquidation under stochastic liquidity dY = -beta Y dt +
/// sigma_hat dB + dTheta, with expected liquidation time at most eta_max.
struct LiquidityProblem {
    double beta = 1;
    double sigma_hat = 0.5;
    double y0_minus = 0;
    double theta0_minus = 1;
    double eta_max = 1;
    ImpactCurve f = ImpactCurve::exponential(1.0);
};

/// psi, its envelope psi-hat and the objective Psi-hat(eta, Upsilon).
class PsiObjective {
public:
    explicit PsiObjective(LiquidityProblem p) : p_(std::move(p)) {
        if (!(p_.beta > 0)) throw std::invalid_argument("liquidation needs beta > 0");
        if (p_.sigma_hat < 0 || p_.eta_max < 0) throw std::invalid_argument("invalid liquidity problem");
        y_star_ = find_y_star();
    }

    const LiquidityProblem& problem() const { return p_; }

    /// Antiderivative of f; for exponential f it vanishes at -infinity.
    double F(double y) const {
        if (p_.f.kind == ImpactCurve::Kind::exponential) return std::exp(p_.f.lambda * y) / p_.f.lambda;
        return p_.f.F(y);
    }
    double f(double y) const { return p_.f.f(y); }

    double psi(double y) const {
        return -p_.beta * y * p_.f.f(y) + 0.5 * p_.sigma_hat * p_.sigma_hat * p_.f.df(y);
    }
    double dpsi(double y) const {
        return -p_.beta * p_.f.f(y) - p_.beta * y * p_.f.df(y) + 0.5 * p_.sigma_hat * p_.sigma_hat * p_.f.d2f(y);
    }
    /// psi' / f; its root is y*.
    double k(double y) const {
        const double s2 = 0.5 * p_.sigma_hat * p_.sigma_hat;
        return s2 * p_.f.d2f(y) / p_.f.f(y) - p_.beta - p_.beta * y * p_.f.df(y) / p_.f.f(y);
    }
    double y_star() const { return y_star_; }
    double psi_hat(double y) const { return psi(std::max(y, y_star_)); }
    double dpsi_hat(double y) const { return y > y_star_ ? dpsi(y) : 0.0; }

    double distance() const { return p_.y0_minus - p_.theta0_minus; }

    double Psi_hat(double eta, double ups) const {
        if (eta == 0) return -F(ups);
        return eta * psi_hat((distance() - ups) / (p_.beta * eta)) - F(ups);
    }

    /// Derivative of Psi-hat in Upsilon.
    double residual(double eta, double ups) const {
        return -dpsi_hat((distance() - ups) / (p_.beta * eta)) / p_.beta - f(ups);
    }

    double e_star(double eta) const { return distance() - p_.beta * eta * y_star_; }

    /// Maximiser of Psi-hat(eta, .) on (-inf, e*(eta)).
    double e_hat(double eta) const {
        if (eta == 0) return distance();
        double hi = e_star(eta);
        double lo = hi - 1.0;
        for (int i = 0; residual(eta, lo) <= 0; ++i) {
            if (i > 200) throw std::runtime_error("e_hat: could not bracket the first-order condition");
            lo = hi - 2.0 * (hi - lo);
        }
        for (int i = 0; i < 400 && hi - lo > 0; ++i) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (residual(eta, mid) > 0) lo = mid;
            else hi = mid;
        }
        return std::abs(residual(eta, lo)) <= std::abs(residual(eta, hi)) ? lo : hi;
    }

    double value(double eta) const { return Psi_hat(eta, e_hat(eta)); }

private:
    double find_y_star() const {
        if (p_.f.kind == ImpactCurve::Kind::exponential) {
            double l = p_.f.lambda;
            return (0.5 * p_.sigma_hat * p_.sigma_hat * l * l - p_.beta) / (p_.beta * l);
        }
        // scan from the right for the last sign change of k from + to -, then bisect
        const double step = 1e-2;
        double hi = 50;
        while (hi > -50 && !(k(hi - step) > 0 && k(hi) <= 0)) hi -= step;
        if (hi <= -50) throw std::invalid_argument("k has no root on [-50, 50]");
        double lo = hi - step;
        for (int i = 0; i < 200; ++i) {
            double mid = 0.5 * (lo + hi);
            (k(mid) > 0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    LiquidityProblem p_;
    double y_star_ = 0;
};

struct ImpactFixingSolution {
    double eta_hat = 0;
    double upsilon_hat = 0;
    double ytilde_hat = 0;
    double expected_proceeds = 0;
    double residual = 0;
};

/// Best impact-fixing strategy: maximise Psi-hat(eta, e_hat(eta)) over
/// eta in [0, eta_max]; the upper end wins ties.
inline ImpactFixingSolution solve_impact_fixing(const LiquidityProblem& p) {
    PsiObjective obj(p);
    auto G = [&](double eta) { return obj.value(eta); };
    double best_eta = p.eta_max, best = G(p.eta_max);
    if (p.eta_max > 0) {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = 0, b = p.eta_max;
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = G(c), fd = G(d);
        while (b - a > 1e-8) {
            if (fc < fd) {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = G(d);
            } else {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = G(c);
            }
        }
        for (double e : {0.0, 0.5 * (a + b)}) {
            double v = G(e);
            if (v > best + 1e-12) {
                best = v;
                best_eta = e;
            }
        }
    }
    ImpactFixingSolution s;
    s.eta_hat = best_eta;
    s.upsilon_hat = obj.e_hat(best_eta);
    s.ytilde_hat = best_eta > 0 ? (obj.distance() - s.upsilon_hat) / (p.beta * best_eta) : p.y0_minus - p.theta0_minus;
    s.expected_proceeds = obj.F(p.y0_minus) + obj.Psi_hat(best_eta, s.upsilon_hat);
    s.residual = best_eta > 0 ? obj.residual(best_eta, s.upsilon_hat) : 0.0;
    return s;
}

/// Expected time for the impact-fixing strategy to reach Theta_- = Ytilde - Upsilon.
inline double expected_liquidation_time(double y0_minus, double theta0_minus, double upsilon, double beta,
                                        double ytilde) {
    const double gap = y0_minus - theta0_minus - upsilon;
    if (gap == 0) return 0.0;
    if (gap * ytilde > 0) return gap / (beta * ytilde);
    return std::numeric_limits<double>::infinity();
}

/// Density at t of the first time x + mu s + W_s hits z.
inline double hitting_time_density(double mu, double x, double z, double t) {
    if (!(t > 0)) return 0.0;
    const double d = z - x;
    return std::abs(d) / (std::sqrt(2 * std::numbers::pi) * std::pow(t, 1.5)) *
           std::exp(-(d - mu * t) * (d - mu * t) / (2 * t));
}

/// Probability that x + mu s + W_s never reaches z.
inline double probability_never_hit(double mu, double x, double z) {
    const double d = z - x;
    return 1.0 - std::exp(mu * d - std::abs(mu) * std::abs(d));
}

struct ImpactFixingPath {
    CadlagPath strategy;
    double tau = 0;
    bool truncated = false;
};

/// Impact-fixing control on the market grid: block to Ytilde at the start,
/// then dTheta = beta Ytilde dt - sigma_hat dB (discretised so that Y
/// stays at Ytilde exactly), and a final block once Theta_- reaches
/// Ytilde - Upsilon. Crossings between grid points are caught with the
/// Brownian-bridge probability; the time is rounded up to the grid.
inline ImpactFixingPath build_impact_fixing_strategy(const StochasticLiquidity& liq, double theta0_minus, double ytilde,
                                                     double upsilon, const MarketScenario& m) {
    const double theta0 = theta0_minus + ytilde - liq.y0_minus;
    const double level = ytilde - upsilon;
    const double t0 = m.start(), t1 = m.end();
    ImpactFixingPath out;
    if (theta0 == level) {
        out.strategy = CadlagPath({{t0, theta0_minus, 0.0}, {t1, 0.0, 0.0}}, {SegmentKind::constant});
        return out;
    }
    const double side = theta0 > level ? 1.0 : -1.0;
    auto bridge = make_stream(m.seed, m.path_index, 3);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PathBuilder b(t0, theta0_minus);
    b.jump_to(theta0);
    double th = theta0;
    for (std::size_t k = 0; k + 1 < m.t.size(); ++k) {
        const double dt = m.t[k + 1] - m.t[k];
        auto c = detail::ou_cell(liq.beta, dt);
        const double vol = liq.sigma_hat * c.noise / c.drive;
        const double next = th + liq.beta * ytilde * dt - vol * m.dB[k];
        bool hit = (next - level) * side <= 0;
        if (!hit && vol > 0) {
            double p = std::exp(-2.0 * (th - level) * (next - level) / (vol * vol * dt));
            hit = unif(bridge) < p;
        }
        b.line_to(m.t[k + 1], next);
        th = next;
        if (hit) {
            out.tau = m.t[k + 1];
            b.jump_to(0.0);
            if (out.tau < t1) b.hold_to(t1);
            out.strategy = b.build();
            return out;
        }
    }
    out.tau = t1;
    out.truncated = true;
    b.jump_to(0.0);
    out.strategy = b.build();
    return out;
}

/// Liquidation of theta0 over [0, T] with a deterministic price
/// S-bar_t = exp(-delta t), as a staircase on K equal cells.
struct MonotoneProblem {
    ImpactCurve f = ImpactCurve::exponential(1.0);
    Resilience h = Resilience::linear(1.0);
    double delta = 0;
    double horizon = 1;
    double theta0 = 1;
    double y0_minus = 0;
    double alpha = 1;
};

struct MonotoneSolution {
    std::vector<double> positions;  ///< holding on [t_{j-1}, t_j), j = 1..K
    double proceeds = 0;
    std::vector<double> start_values;
    CadlagPath strategy;
};

inline CadlagPath monotone_staircase(const MonotoneProblem& p, const std::vector<double>& w) {
    const std::size_t K = w.size();
    std::vector<double> times(K), values(w);
    for (std::size_t j = 0; j < K; ++j) times[j] = p.horizon * static_cast<double>(j) / static_cast<double>(K);
    CadlagPath s = CadlagPath::step(0.0, p.horizon, p.theta0, times, values);
    std::vector<Knot> k = s.knots();
    k.back().right = 0.0;
    return CadlagPath(std::move(k), s.kinds());
}

inline double monotone_proceeds(const MonotoneProblem& p, const std::vector<double>& w, const MarketScenario& m) {
    ImpactModel model{p.h, PriceImpact::multiplicative(p.f), 1.0, p.y0_minus};
    return proceeds_fv(monotone_staircase(p, w), m, model).total;
}

/// Projected coordinate ascent over theta0 >= w_1 >= ... >= w_K >= 0 from
/// several starts (plus any warm start); returns the best schedule.
inline MonotoneSolution optimize_monotone_finite_horizon(const MonotoneProblem& p, std::size_t K, int starts = 8,
                                                         std::uint64_t seed = 1,
                                                         const std::vector<std::vector<double>>& warm = {}) {
    if (K < 1 || p.theta0 < 0 || !(p.horizon > 0)) throw std::invalid_argument("invalid monotone problem");
    const std::size_t cells = p.h.kind == Resilience::Kind::polynomial ? 16 * K : K;
    MarketScenario m = deterministic_market(p.alpha, 0.0, p.horizon, cells, 1.0, p.delta);
    auto obj = [&](const std::vector<double>& w) { return monotone_proceeds(p, w, m); };
    std::vector<std::vector<double>> inits;
    for (const auto& w : warm)
        if (w.size() == K) inits.push_back(w);
    auto rng = make_stream(seed, K, 7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int s = 0; s < starts; ++s) {
        std::vector<double> w(K);
        for (std::size_t j = 0; j < K; ++j) {
            double lin = p.theta0 * (1.0 - static_cast<double>(j + 1) / static_cast<double>(K + 1));
            if (s == 0) w[j] = lin;
            else if (s == 1) w[j] = 0.0;
            else if (s == 2) w[j] = p.theta0;
            else w[j] = p.theta0 * unif(rng);
        }
        std::sort(w.begin(), w.end(), std::greater<>());
        inits.push_back(w);
    }
    MonotoneSolution best;
    best.proceeds = -std::numeric_limits<double>::infinity();
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (auto w : inits) {
        double val = obj(w);
        for (int sweep = 0; sweep < 200; ++sweep) {
            double before = val;
            for (std::size_t j = 0; j < K; ++j) {
                double lo = j + 1 < K ? w[j + 1] : 0.0;
                double hi = j > 0 ? w[j - 1] : p.theta0;
                auto at = [&](double v) {
                    double keep = w[j];
                    w[j] = v;
                    double r = obj(w);
                    w[j] = keep;
                    return r;
                };
                double a = lo, b = hi;
                double c = b - phi * (b - a), d = a + phi * (b - a);
                double fc = at(c), fd = at(d);
                while (b - a > 1e-10) {
                    if (fc < fd) {
                        a = c; c = d; fc = fd; d = a + phi * (b - a); fd = at(d);
                    } else {
                        b = d; d = c; fd = fc; c = b - phi * (b - a); fc = at(c);
                    }
                }
                double cand_v = 0.5 * (a + b);
                for (double v : {lo, hi, cand_v}) {
                    double r = at(v);
                    if (r > val) {
                        val = r;
                        w[j] = v;
                    }
                }
            }
            if (val - before < 1e-13) break;
        }
        best.start_values.push_back(val);
        if (val > best.proceeds) {
            best.proceeds = val;
            best.positions = w;
        }
    }
    best.strategy = monotone_staircase(p, best.positions);
    return best;
}

/// Refines a K-cell schedule onto 2K cells with the same strategy.
inline std::vector<double> refine_schedule(const std::vector<double>& w) {
    std::vector<double> r;
    for (double v : w) {
        r.push_back(v);
        r.push_back(v);
    }
    return r;
}

}  // namespace impactlab

#endif
