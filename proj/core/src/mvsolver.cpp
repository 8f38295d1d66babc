#include "coshare/mvsolver.hpp"

#include "coshare/errors.hpp"
#include "coshare/riskmeasures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

namespace coshare {

namespace {

constexpr double kBreakpointMerge = 1e-12;

double clip(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

void check_sizes(std::size_t n, std::size_t a, std::size_t b, std::size_t c, const char* who) {
    if (n == 0 || a != n || b != n || c != n) throw ContractError(std::string(who) + ": inconsistent agent counts");
}

}  // namespace

std::vector<double> unconstrained_shares(std::span<const double> delta) {
    if (delta.empty()) throw ContractError("unconstrained_shares: no agents");
    double total = 0.0;
    for (double d : delta) {
        if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("unconstrained_shares: delta must be positive");
        total += 1.0 / d;
    }
    std::vector<double> out;
    out.reserve(delta.size());
    for (double d : delta) out.push_back((1.0 / d) / total);
    return out;
}

ShadowPrice::ShadowPrice(std::span<const double> intercepts, std::span<const double> delta,
                         std::span<const double> lower, std::span<const double> upper)
    : c_(intercepts.begin(), intercepts.end()), lower_(lower.begin(), lower.end()), upper_(upper.begin(), upper.end()) {
    const std::size_t n = delta.size();
    check_sizes(n, c_.size(), lower_.size(), upper_.size(), "ShadowPrice");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(delta[i] > 0.0) || !std::isfinite(delta[i])) throw DomainError("ShadowPrice: delta must be positive");
        if (!std::isfinite(c_[i])) throw DomainError("ShadowPrice: intercepts must be finite");
        if (lower_[i] > upper_[i]) throw InfeasibleError("ShadowPrice: empty box for agent " + std::to_string(i + 1));
        inv_delta_.push_back(1.0 / delta[i]);
        if (std::isfinite(lower_[i])) kinks_.push_back(delta[i] * (lower_[i] - c_[i]));
        if (std::isfinite(upper_[i])) kinks_.push_back(delta[i] * (upper_[i] - c_[i]));
        if (lower_[i] == -INFINITY) slope_left_ += inv_delta_[i];
        if (upper_[i] == INFINITY) slope_right_ += inv_delta_[i];
        min_total_ += lower_[i];
        max_total_ += upper_[i];
    }
    std::sort(kinks_.begin(), kinks_.end());
    kinks_.erase(std::unique(kinks_.begin(), kinks_.end()), kinks_.end());
    for (double k : kinks_) kink_totals_.push_back(total(k));
    // H is monotone; rounding must not make the table look otherwise.
    for (std::size_t j = 1; j < kink_totals_.size(); ++j)
        kink_totals_[j] = std::max(kink_totals_[j], kink_totals_[j - 1]);
}

double ShadowPrice::total(double eta) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) sum += clip(c_[i] + eta * inv_delta_[i], lower_[i], upper_[i]);
    return sum;
}

std::vector<double> ShadowPrice::shares(double eta) const {
    std::vector<double> x(c_.size());
    for (std::size_t i = 0; i < c_.size(); ++i) x[i] = clip(c_[i] + eta * inv_delta_[i], lower_[i], upper_[i]);
    return x;
}

std::vector<std::size_t> ShadowPrice::active(double eta) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        double v = c_[i] + eta * inv_delta_[i];
        if (v > lower_[i] && v < upper_[i]) out.push_back(i);
    }
    return out;
}

std::pair<double, double> ShadowPrice::solution_interval(double s) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(s));
    if (!(s >= min_total_ - slack) || !(s <= max_total_ + slack))
        throw InfeasibleError("ShadowPrice: level outside [sum of floors, sum of caps]");
    s = clip(s, min_total_, max_total_);

    if (kinks_.empty()) {
        double c_sum = std::accumulate(c_.begin(), c_.end(), 0.0);
        double eta = (s - c_sum) / slope_left_;
        return {eta, eta};
    }

    const std::size_t m = kinks_.size();
    auto interp = [&](std::size_t j, double target) {
        return kinks_[j] + (target - kink_totals_[j]) * (kinks_[j + 1] - kinks_[j]) /
                               (kink_totals_[j + 1] - kink_totals_[j]);
    };

    double lo;
    auto first_ge = std::lower_bound(kink_totals_.begin(), kink_totals_.end(), s);
    if (first_ge == kink_totals_.begin()) {
        lo = slope_left_ > 0.0 ? kinks_[0] - (kink_totals_[0] - s) / slope_left_ : -INFINITY;
    } else if (first_ge == kink_totals_.end()) {
        lo = slope_right_ > 0.0 ? kinks_[m - 1] + (s - kink_totals_[m - 1]) / slope_right_ : kinks_[m - 1];
    } else {
        lo = interp(static_cast<std::size_t>(first_ge - kink_totals_.begin()) - 1, s);
    }

    double hi;
    auto first_gt = std::upper_bound(kink_totals_.begin(), kink_totals_.end(), s);
    if (first_gt == kink_totals_.begin()) {
        hi = slope_left_ > 0.0 ? kinks_[0] - (kink_totals_[0] - s) / slope_left_ : kinks_[0];
    } else if (first_gt == kink_totals_.end()) {
        hi = slope_right_ > 0.0 ? kinks_[m - 1] + (s - kink_totals_[m - 1]) / slope_right_ : INFINITY;
    } else {
        hi = interp(static_cast<std::size_t>(first_gt - kink_totals_.begin()) - 1, s);
    }
    if (hi < lo) hi = lo;
    return {lo, hi};
}

double ShadowPrice::solve(double s) const {
    auto [lo, hi] = solution_interval(s);
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
}

StatewiseSolution statewise_projection(std::span<const double> intercepts, std::span<const double> delta,
                                       std::span<const double> lower, std::span<const double> upper, double s) {
    ShadowPrice h(intercepts, delta, lower, upper);
    StatewiseSolution out;
    out.eta = h.solve(s);
    out.shares = h.shares(out.eta);

    double residual = s - stable_sum(out.shares);
    if (residual != 0.0) {
        auto act = h.active(out.eta);
        double weight = 0.0;
        for (std::size_t i : act) weight += 1.0 / delta[i];
        for (std::size_t i : act)
            out.shares[i] = clip(out.shares[i] + residual * (1.0 / delta[i]) / weight, lower[i], upper[i]);
        residual = s - stable_sum(out.shares);
        // Whatever is left goes to the agent with the most room.
        if (residual != 0.0) {
            std::size_t best = 0;
            double room = -1.0;
            for (std::size_t i = 0; i < out.shares.size(); ++i) {
                double r = residual > 0.0 ? upper[i] - out.shares[i] : out.shares[i] - lower[i];
                if (r > room) {
                    room = r;
                    best = i;
                }
            }
            out.shares[best] = clip(out.shares[best] + residual, lower[best], upper[best]);
        }
    }
    return out;
}

std::vector<double> RegimeReport::shares_at(double s) const {
    return statewise_projection(intercepts, delta, lower, upper, s).shares;
}

RegimeReport regime_report(std::span<const double> intercepts, std::span<const double> delta,
                           std::span<const double> lower, std::span<const double> upper, double s_from, double s_to) {
    ShadowPrice h(intercepts, delta, lower, upper);
    RegimeReport rep;
    rep.intercepts.assign(intercepts.begin(), intercepts.end());
    rep.delta.assign(delta.begin(), delta.end());
    rep.lower.assign(lower.begin(), lower.end());
    rep.upper.assign(upper.begin(), upper.end());
    if (std::isfinite(h.max_total())) rep.terminal_level = h.max_total();

    s_from = std::max(s_from, h.min_total());
    s_to = std::min(s_to, h.max_total());
    if (s_from > s_to) throw ContractError("regime_report: empty range of aggregate levels");

    for (double k : h.kinks()) {
        double level = h.total(k);
        if (level <= s_from || level >= s_to) continue;
        if (!rep.breakpoints.empty() && level - rep.breakpoints.back() <= kBreakpointMerge * std::max(1.0, level))
            continue;
        rep.breakpoints.push_back(level);
    }

    std::vector<double> edges{s_from};
    edges.insert(edges.end(), rep.breakpoints.begin(), rep.breakpoints.end());
    edges.push_back(s_to);
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        double a = edges[j], b = edges[j + 1];
        if (!(a < b)) continue;
        double mid;
        if (std::isfinite(a) && std::isfinite(b))
            mid = 0.5 * (a + b);
        else if (std::isfinite(b))
            mid = b - 1.0;
        else if (std::isfinite(a))
            mid = a + 1.0;
        else
            mid = 0.0;
        Regime reg{a, b, h.active(h.solve(mid)), std::vector<double>(delta.size(), 0.0)};
        double weight = 0.0;
        for (std::size_t i : reg.active) weight += 1.0 / delta[i];
        for (std::size_t i : reg.active) reg.slopes[i] = (1.0 / delta[i]) / weight;
        rep.regimes.push_back(std::move(reg));
    }
    return rep;
}

RegimeReport saturation_curve(std::span<const double> delta, std::span<const double> upper) {
    std::vector<double> zero(delta.size(), 0.0);
    std::vector<double> floor(delta.size(), -INFINITY);
    return regime_report(zero, delta, floor, upper, -INFINITY, INFINITY);
}

MVSolution solve_capped_mv(const MVProblem& problem, const FixedPointOptions& options) {
    const std::size_t n = problem.delta.size();
    std::vector<double> lower = problem.lower.empty() ? std::vector<double>(n, -INFINITY) : problem.lower;
    std::vector<double> upper = problem.upper.empty() ? std::vector<double>(n, INFINITY) : problem.upper;
    check_sizes(n, n, lower.size(), upper.size(), "solve_capped_mv");
    if (!(options.damping > 0.0 && options.damping <= 1.0))
        throw DomainError("solve_capped_mv: damping must lie in (0, 1]");

    const auto& s = problem.aggregate;
    auto levels = aggregate_levels(s);
    double floor_sum = 0.0, cap_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        floor_sum += lower[i];
        cap_sum += upper[i];
    }
    if (levels.front().value < floor_sum - kClearingTolerance || levels.back().value > cap_sum + kClearingTolerance)
        throw InfeasibleError("solve_capped_mv: the bounds cannot absorb every level of S");

    auto quota = unconstrained_shares(problem.delta);
    double mean_s = moments(s).mean;
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = quota[i] * mean_s;

    auto expected_shares = [&](const std::vector<double>& intercepts) {
        std::vector<double> e(n, 0.0);
        for (const auto& lvl : levels) {
            auto x = statewise_projection(intercepts, problem.delta, lower, upper, lvl.value).shares;
            for (std::size_t i = 0; i < n; ++i) e[i] += lvl.prob * x[i];
        }
        return e;
    };

    std::size_t iter = 0;
    double residual = INFINITY;
    for (; iter < options.max_iterations; ++iter) {
        auto e = expected_shares(c);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(e[i] - c[i]));
        if (!std::isfinite(residual)) throw NonConvergenceError("solve_capped_mv: iteration diverged", residual, iter);
        if (residual < options.tol) break;
        for (std::size_t i = 0; i < n; ++i) c[i] = (1.0 - options.damping) * c[i] + options.damping * e[i];
    }
    if (residual >= options.tol)
        throw NonConvergenceError("solve_capped_mv: intercept iteration did not converge", residual, iter);

    std::vector<std::vector<double>> vals(n, std::vector<double>(s.size()));
    for (std::size_t k = 0; k < s.size(); ++k) {
        auto x = statewise_projection(c, problem.delta, lower, upper, s[k]).shares;
        for (std::size_t i = 0; i < n; ++i) vals[i][k] = x[i];
    }
    std::vector<RandomVariable> shares;
    for (auto& v : vals) shares.emplace_back(s.space(), std::move(v));
    Allocation alloc(s, std::move(shares));

    MVSolution out{std::move(alloc), regime_report(c, problem.delta, lower, upper, levels.front().value,
                                                   levels.back().value),
                   0.0, iter};
    out.regimes.fixed_point_residual = residual;
    for (std::size_t i = 0; i < n; ++i) out.objective += mean_variance(out.allocation.share(i), problem.delta[i]);
    return out;
}

double two_agent_residual(double a, double cap, std::span<const Mass> law, double beta) {
    double e = 0.0, mean = 0.0;
    for (const auto& m : law) {
        e += m.prob * clip(a * m.value + beta, 0.0, cap);
        mean += m.prob * m.value;
    }
    return e - a * mean - beta;
}

std::pair<double, double> two_agent_fixed_point(double a, double cap, std::span<const Mass> law) {
    if (law.empty()) throw ContractError("two_agent_fixed_point: empty law");
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("two_agent_fixed_point: slope must be nonnegative");
    if (!(cap >= 0.0) || !std::isfinite(cap)) throw DomainError("two_agent_fixed_point: cap must be nonnegative");

    std::vector<double> kinks;
    for (const auto& m : law) {
        kinks.push_back(-a * m.value);
        kinks.push_back(cap - a * m.value);
    }
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
    double scale = cap;
    for (const auto& m : law) scale = std::max(scale, std::abs(a * m.value));
    const double zero = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
    std::vector<double> r;
    for (double b : kinks) {
        double v = two_agent_residual(a, cap, law, b);
        r.push_back(std::abs(v) <= zero ? 0.0 : v);
    }
    const std::size_t m = kinks.size();

    // Outside the kinks R has slope -1; between kinks it is affine.
    auto interp = [&](std::size_t j) { return kinks[j] + r[j] * (kinks[j + 1] - kinks[j]) / (r[j] - r[j + 1]); };

    double lo;
    std::size_t j = 0;
    while (j < m && r[j] > 0.0) ++j;
    if (j == 0)
        lo = kinks[0] + r[0];
    else if (j == m)
        lo = kinks[m - 1] + r[m - 1];
    else
        lo = r[j] == 0.0 ? kinks[j] : interp(j - 1);

    double hi;
    std::size_t last = m;
    for (std::size_t t = 0; t < m; ++t)
        if (r[t] >= 0.0) last = t;
    if (last == m)
        hi = kinks[0] + r[0];
    else if (last == m - 1)
        hi = kinks[m - 1] + r[m - 1];
    else
        hi = r[last] == 0.0 ? kinks[last] : interp(last);
    return {lo, std::max(lo, hi)};
}

// ---------------------------------------------------------------------------

double PiecewiseAffineRule::operator()(double s) const {
    if (pieces.empty()) throw ContractError("PiecewiseAffineRule: no pieces");
    for (const auto& p : pieces)
        if (s <= p.hi) return p.intercept + p.slope * s;
    const auto& p = pieces.back();
    return p.intercept + p.slope * s;
}

PiecewiseAffineRule PiecewiseAffineRule::complement() const {
    PiecewiseAffineRule out;
    for (const auto& p : pieces) out.pieces.push_back({p.lo, p.hi, -p.intercept, 1.0 - p.slope});
    return out;
}

namespace {

// e^{-x} sum_{j<k} x^j / j!, the regularised upper incomplete gamma for integer k.
double upper_gamma_q(int k, double x) {
    if (x == INFINITY) return 0.0;
    if (x <= 0.0) return 1.0;
    double term = 1.0, sum = 1.0;
    for (int j = 1; j < k; ++j) {
        term *= x / j;
        sum += term;
    }
    return std::exp(-x) * sum;
}

// int_u^v s^n s e^{-s} ds for n = 0, 1, 2.
double gamma_partial_moment(int n, double u, double v) {
    double factorial = n == 0 ? 1.0 : n == 1 ? 2.0 : 6.0;
    return factorial * (upper_gamma_q(n + 2, u) - upper_gamma_q(n + 2, v));
}

void check_rule(const PiecewiseAffineRule& rule) {
    if (rule.pieces.empty() || rule.pieces.front().lo != 0.0 || rule.pieces.back().hi != INFINITY)
        throw ContractError("PiecewiseAffineRule: pieces must cover [0, inf)");
    for (std::size_t j = 1; j < rule.pieces.size(); ++j)
        if (rule.pieces[j].lo != rule.pieces[j - 1].hi)
            throw ContractError("PiecewiseAffineRule: pieces must be contiguous");
}

}  // namespace

Moments gamma_rule_moments(const PiecewiseAffineRule& rule) {
    check_rule(rule);
    double mean = 0.0;
    for (const auto& p : rule.pieces)
        mean += p.intercept * gamma_partial_moment(0, p.lo, p.hi) + p.slope * gamma_partial_moment(1, p.lo, p.hi);
    double var = 0.0;
    for (const auto& p : rule.pieces) {
        double a = p.intercept - mean, b = p.slope;
        var += a * a * gamma_partial_moment(0, p.lo, p.hi) + 2.0 * a * b * gamma_partial_moment(1, p.lo, p.hi) +
               b * b * gamma_partial_moment(2, p.lo, p.hi);
    }
    return {mean, std::max(0.0, var)};
}

Moments gamma_rule_moments_quadrature(const PiecewiseAffineRule& rule, double tol) {
    check_rule(rule);
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto integrate = [&](auto&& f) {
        double total = 0.0;
        for (const auto& p : rule.pieces) {
            if (!(p.lo < p.hi)) continue;
            auto g = [&](double s) { return f(p, s) * s * std::exp(-s); };
            total += Quad::integrate(g, p.lo, p.hi, 15, tol);
        }
        return total;
    };
    double mean = integrate([](const AffinePiece& p, double s) { return p.intercept + p.slope * s; });
    double var = integrate([mean](const AffinePiece& p, double s) {
        double d = p.intercept + p.slope * s - mean;
        return d * d;
    });
    return {mean, var};
}

double var_scenario_objective(const VarScenarioParams& params, const PiecewiseAffineRule& agent2) {
    auto x2 = gamma_rule_moments(agent2);
    auto x1 = gamma_rule_moments(agent2.complement());
    return x1.mean + x2.mean + params.delta1 * x1.variance + params.delta2 * x2.variance;
}

namespace {

void push_piece(PiecewiseAffineRule& rule, double lo, double hi, double intercept, double slope) {
    if (lo < hi) rule.pieces.push_back({lo, hi, intercept, slope});
}

double quota_of(const VarScenarioParams& p) { return p.delta1 / (p.delta1 + p.delta2); }

}  // namespace

PiecewiseAffineRule var_scenario_rule(const VarScenarioParams& params, double q, double m) {
    const double lambda = quota_of(params);
    const double c = params.ceiling;
    const double a = m / (1.0 - lambda);
    const double r = (c + m) / (1.0 - lambda);
    if (m < 0.0 || r > q * (1.0 + 1e-15))
        throw DomainError("var_scenario_rule: centre outside [0, q(1-lambda) - ceiling]");
    PiecewiseAffineRule f;
    push_piece(f, 0.0, a, 0.0, 1.0);
    push_piece(f, a, std::min(r, q), m, lambda);
    push_piece(f, std::min(r, q), q, -c, 1.0);
    push_piece(f, q, INFINITY, m, lambda);
    if (f.pieces.front().lo != 0.0) f.pieces.front().lo = 0.0;
    return f;
}

PiecewiseAffineRule comonotone_rule(double q, const ComonotoneRuleParams& p) {
    const double k = p.slope, m = p.intercept;
    double s0 = q, s1 = q;
    if (k > 0.0) {
        s0 = clip(m / k, 0.0, q);
        s1 = clip((p.cap + m) / k, s0, q);
    }
    const double g_q = std::min(p.cap, std::max(0.0, k * q - m));
    PiecewiseAffineRule g;
    push_piece(g, 0.0, s0, 0.0, 0.0);
    push_piece(g, s0, s1, -m, k);
    push_piece(g, s1, q, p.cap, 0.0);
    push_piece(g, q, INFINITY, g_q - p.tail_slope * q, p.tail_slope);
    return g;
}

VarScenarioReport var_scenario(const VarScenarioParams& params) {
    if (!(params.delta1 > 0.0) || !(params.delta2 > 0.0)) throw DomainError("var_scenario: delta must be positive");
    if (!(params.level > 0.0 && params.level < 1.0)) throw DomainError("var_scenario: level must lie in (0, 1)");

    VarScenarioReport rep;
    rep.params = params;
    rep.lambda = quota_of(params);
    rep.q = gamma_quantile(GammaAggregate{}, params.level);
    rep.endowment_var = -std::log1p(-params.level);
    const double c = params.ceiling;
    const double lambda = rep.lambda;
    const double q = rep.q;
    if (rep.endowment_var > c) throw InfeasibleError("var_scenario: autarky violates the VaR ceiling");

    rep.autarky = 2.0 + params.delta1 + params.delta2;

    PiecewiseAffineRule proportional{{{0.0, INFINITY, 0.0, lambda}}};
    rep.unconstrained = var_scenario_objective(params, proportional);
    rep.unconstrained_closed_form =
        2.0 + GammaAggregate{}.variance() * (params.delta1 * (1.0 - lambda) * (1.0 - lambda) +
                                             params.delta2 * lambda * lambda);

    const double m_hi = q * (1.0 - lambda) - c;
    if (m_hi < 0.0) throw InfeasibleError("var_scenario: ceiling too loose for the four-regime rule");
    auto best = bracketed_minimum(
        [&](double m) { return var_scenario_objective(params, var_scenario_rule(params, q, m)); }, 0.0, m_hi, 52);
    rep.m_star = best.x;
    rep.constrained = best.value;
    rep.a = rep.m_star / (1.0 - lambda);
    rep.r = (c + rep.m_star) / (1.0 - lambda);
    rep.constrained_agent2 = var_scenario_rule(params, q, rep.m_star);

    rep.jump_agent1 = (1.0 - lambda) * q - rep.m_star - c;
    rep.jump_agent2 = (rep.m_star + lambda * q) - (q - c);
    const double eps = std::min(1e-3, 0.5 * (q - rep.r));
    rep.witness = {q - eps, q + eps};

    auto x2 = rep.constrained_agent2;
    auto x1 = x2.complement();
    for (const auto* rule : {&x1, &x2}) {
        auto exact = gamma_rule_moments(*rule);
        auto quad = gamma_rule_moments_quadrature(*rule);
        rep.quadrature_gap = std::max({rep.quadrature_gap, std::abs(exact.mean - quad.mean),
                                       std::abs(exact.variance - quad.variance)});
    }
    if (rep.quadrature_gap > 1e-6)
        throw NonConvergenceError("var_scenario: closed-form and quadrature moments disagree", rep.quadrature_gap, 0);

    // Comonotone family for agent 1. The objective is quadratic in the tail
    // slope, so that level is solved from three evaluations.
    const double floor_cap = q - c;
    auto value_at = [&](const ComonotoneRuleParams& p) {
        return var_scenario_objective(params, comonotone_rule(q, p).complement());
    };
    auto best_tail = [&](ComonotoneRuleParams p) {
        p.tail_slope = 0.0;
        double f0 = value_at(p);
        p.tail_slope = 0.5;
        double fh = value_at(p);
        p.tail_slope = 1.0;
        double f1 = value_at(p);
        double curv = 2.0 * (f0 - 2.0 * fh + f1);
        double lin = f1 - f0 - curv / 2.0;
        double t = curv > 0.0 ? clip(-lin / curv, 0.0, 1.0) : (f1 < f0 ? 1.0 : 0.0);
        p.tail_slope = t;
        return std::pair{p, value_at(p)};
    };
    auto best_intercept = [&](double cap, double k) {
        ComonotoneRuleParams p{0.0, k, cap, 0.0};
        double m_max = std::max(0.0, k * q - floor_cap);
        auto r = bracketed_minimum(
            [&](double m) {
                p.intercept = m;
                return best_tail(p).second;
            },
            0.0, m_max, 30);
        p.intercept = r.x;
        return best_tail(p);
    };
    auto best_slope = [&](double cap) {
        double k_min = floor_cap / q;
        auto r = bracketed_minimum([&](double k) { return best_intercept(cap, k).second; }, k_min, 1.0, 30);
        return best_intercept(cap, r.x);
    };
    auto cap_opt = bracketed_minimum([&](double cap) { return best_slope(cap).second; }, floor_cap, c, 30);
    auto [params_star, value_star] = best_slope(cap_opt.x);
    rep.comonotone_params = params_star;
    rep.comonotone = value_star;
    rep.comonotone_agent1 = comonotone_rule(q, params_star);
    return rep;
}

}  // namespace coshare
