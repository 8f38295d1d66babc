#pragma once

#include "coshare/allocation.hpp"
#include "coshare/numeric.hpp"
#include "coshare/probspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace coshare {

/// Proportional quota shares delta_i^{-1} / sum_j delta_j^{-1}.
std::vector<double> unconstrained_shares(std::span<const double> delta);

/// H(eta) = sum_i clip_[L_i,U_i](c_i + eta / delta_i), the total allocated at
/// shadow price eta. H is continuous, nondecreasing and piecewise linear with
/// kinks where some clip activates; the inverse is computed exactly over
/// the sorted kinks.
class ShadowPrice {
public:
    ShadowPrice(std::span<const double> intercepts, std::span<const double> delta, std::span<const double> lower,
                std::span<const double> upper);

    double total(double eta) const;
    std::vector<double> shares(double eta) const;

    /// {eta : H(eta) = s} as a closed interval, possibly unbounded on one side.
    /// Throws InfeasibleError when s lies outside [sum L, sum U].
    std::pair<double, double> solution_interval(double s) const;

    /// Midpoint of the solution interval, or its finite end when unbounded.
    double solve(double s) const;

    double min_total() const noexcept { return min_total_; }
    double max_total() const noexcept { return max_total_; }
    const std::vector<double>& kinks() const noexcept { return kinks_; }
    std::size_t agents() const noexcept { return c_.size(); }

    /// Agents strictly inside their box at eta.
    std::vector<std::size_t> active(double eta) const;

private:
    std::vector<double> c_, inv_delta_, lower_, upper_;
    std::vector<double> kinks_;
    std::vector<double> kink_totals_;
    double slope_left_ = 0.0;   ///< dH/deta below every kink
    double slope_right_ = 0.0;  ///< dH/deta above every kink
    double min_total_ = 0.0;
    double max_total_ = 0.0;
};

struct StatewiseSolution {
    double eta = 0.0;
    std::vector<double> shares;
};

/// Minimises sum_i delta_i (x_i - c_i)^2 subject to sum_i x_i = s and
/// L_i <= x_i <= U_i. Shares are rebalanced on the interior agents so they
/// clear s to the last bit the arithmetic allows.
StatewiseSolution statewise_projection(std::span<const double> intercepts, std::span<const double> delta,
                                       std::span<const double> lower, std::span<const double> upper, double s);

struct Regime {
    double from = 0.0;
    double to = 0.0;
    std::vector<std::size_t> active;
    std::vector<double> slopes;  ///< d x_i / d s
};

/// Piecewise-linear structure of s -> x(s) for fixed intercepts.
struct RegimeReport {
    std::vector<double> breakpoints;
    std::vector<Regime> regimes;
    std::vector<double> intercepts;
    std::vector<double> delta, lower, upper;
    double fixed_point_residual = 0.0;
    /// sum_i U_i when every agent is capped: the curve stops there.
    std::optional<double> terminal_level;

    std::vector<double> shares_at(double s) const;
};

RegimeReport regime_report(std::span<const double> intercepts, std::span<const double> delta,
                           std::span<const double> lower, std::span<const double> upper, double s_from, double s_to);

/// Zero-intercept clipped quota-share curve with upper caps only: slopes
/// renormalise over the unsaturated agents after each breakpoint.
RegimeReport saturation_curve(std::span<const double> delta, std::span<const double> upper);

template <class T>
struct SaturationBreakpoint {
    T level;
    std::vector<T> shares;
    std::vector<std::size_t> saturating;  ///< agents hitting their cap at this level
};

template <class T>
struct ExactSaturationCurve {
    std::vector<SaturationBreakpoint<T>> breakpoints;
    /// slopes[k] applies after breakpoints[k-1] (slopes[0]: before the first).
    std::vector<std::vector<T>> slopes;
    std::optional<T> terminal_level;
};

/// Same curve in any field type (e.g. Rational), walking the saturation
/// thresholds delta_i U_i in increasing order. An empty cap means +infinity.
template <class T>
ExactSaturationCurve<T> exact_saturation_curve(std::span<const T> delta, std::span<const std::optional<T>> caps) {
    const std::size_t n = delta.size();
    std::map<T, std::vector<std::size_t>> thresholds;
    for (std::size_t i = 0; i < n; ++i)
        if (caps[i]) thresholds[delta[i] * *caps[i]].push_back(i);

    std::vector<bool> saturated(n, false);
    auto slopes_now = [&] {
        T tolerance_sum(0);
        for (std::size_t i = 0; i < n; ++i)
            if (!saturated[i]) tolerance_sum += T(1) / delta[i];
        std::vector<T> out(n, T(0));
        if (tolerance_sum == T(0)) return out;
        for (std::size_t i = 0; i < n; ++i)
            if (!saturated[i]) out[i] = (T(1) / delta[i]) / tolerance_sum;
        return out;
    };

    ExactSaturationCurve<T> curve;
    curve.slopes.push_back(slopes_now());
    for (const auto& [eta, who] : thresholds) {
        SaturationBreakpoint<T> bp{T(0), std::vector<T>(n, T(0)), who};
        for (std::size_t i = 0; i < n; ++i) {
            T free_value = eta / delta[i];
            bp.shares[i] = (caps[i] && *caps[i] < free_value) ? *caps[i] : free_value;
            bp.level += bp.shares[i];
        }
        for (std::size_t i : who) saturated[i] = true;
        curve.breakpoints.push_back(std::move(bp));
        curve.slopes.push_back(slopes_now());
    }
    if (std::all_of(saturated.begin(), saturated.end(), [](bool b) { return b; }))
        curve.terminal_level = curve.breakpoints.back().level;
    return curve;
}

struct MVProblem {
    std::vector<double> delta;
    std::vector<double> lower;  ///< -inf for no floor
    std::vector<double> upper;  ///< +inf for no cap
    RandomVariable aggregate;
};

struct FixedPointOptions {
    double damping = 0.5;
    double tol = 1e-10;
    std::size_t max_iterations = 10'000;
};

struct MVSolution {
    Allocation allocation;
    RegimeReport regimes;
    double objective = 0.0;
    std::size_t iterations = 0;
};

/// Capped mean-variance optimum X_i = clip_i(c_i + eta(S) / delta_i). The
/// intercepts come from the damped fixed point c <- (1-theta) c + theta E[x(S; c)],
/// with x(s; c) the statewise projection at each support point of S.
/// Throws InfeasibleError if the caps cannot absorb S, NonConvergenceError
/// when the iteration stalls.
MVSolution solve_capped_mv(const MVProblem& problem, const FixedPointOptions& options = {});

/// Residual of beta = E[clip_[0,C](a S + beta)] - a E[S].
double two_agent_residual(double a, double cap, std::span<const Mass> law, double beta);

/// The closed solution set [beta_-, beta_+] of the two-agent fixed point.
/// The residual is piecewise linear and nonincreasing in beta, so both ends
/// are found exactly by walking its kinks.
std::pair<double, double> two_agent_fixed_point(double a, double cap, std::span<const Mass> law);

// ---------------------------------------------------------------------------
// Two agents, Gamma(2,1) aggregate, Exp(1) endowments, VaR ceilings.

/// s -> intercept + slope * s on (lo, hi]; the first piece also owns lo.
struct AffinePiece {
    double lo = 0.0;
    double hi = INFINITY;
    double intercept = 0.0;
    double slope = 0.0;
};

struct PiecewiseAffineRule {
    std::vector<AffinePiece> pieces;

    double operator()(double s) const;
    /// S - rule(S).
    PiecewiseAffineRule complement() const;
};

/// E[X], Var(X) for X = rule(S), S ~ Gamma(2,1), integrated in closed form
/// piece by piece (incomplete gamma with integer shape).
Moments gamma_rule_moments(const PiecewiseAffineRule& rule);
/// The same moments by adaptive Gauss-Kronrod quadrature, for cross-checks.
Moments gamma_rule_moments_quadrature(const PiecewiseAffineRule& rule, double tol = 1e-10);

struct VarScenarioParams {
    double delta1 = 0.01;
    double delta2 = 1.0;
    double level = 0.95;
    double ceiling = 3.0;
};

struct ComonotoneRuleParams {
    double intercept = 0.0;  ///< m in k s - m
    double slope = 0.0;      ///< k, interior slope of agent 1
    double cap = 0.0;        ///< level where agent 1 flattens before q
    double tail_slope = 0.0; ///< agent 1 slope beyond q
};

struct VarScenarioReport {
    VarScenarioParams params;
    double lambda = 0.0;  ///< delta1 / (delta1 + delta2), agent 2's quota
    double q = 0.0;       ///< VaR_level(S)
    double endowment_var = 0.0;
    double m_star = 0.0;
    double a = 0.0;
    double r = 0.0;

    double unconstrained = 0.0;
    double unconstrained_closed_form = 0.0;
    double constrained = 0.0;
    double comonotone = 0.0;
    double autarky = 0.0;

    PiecewiseAffineRule constrained_agent2;  ///< f(s); agent 1 takes s - f(s)
    PiecewiseAffineRule comonotone_agent1;
    ComonotoneRuleParams comonotone_params;

    double jump_agent1 = 0.0;  ///< X_1(q+) - X_1(q)
    double jump_agent2 = 0.0;  ///< X_2(q+) - X_2(q)
    std::pair<double, double> witness{0.0, 0.0};  ///< s < q < s' with X_1 up and X_2 down
    double quadrature_gap = 0.0;
};

VarScenarioReport var_scenario(const VarScenarioParams& params = {});

/// Objective E[S] + delta1 Var(S - f(S)) + delta2 Var(f(S)) for agent 2's rule f.
double var_scenario_objective(const VarScenarioParams& params, const PiecewiseAffineRule& agent2);

/// Agent 2's four-regime rule for a given centre m.
PiecewiseAffineRule var_scenario_rule(const VarScenarioParams& params, double q, double m);

/// Agent 1's comonotone rule: min(cap, max(0, k s - m)) up to q, then
/// rising with the tail slope.
PiecewiseAffineRule comonotone_rule(double q, const ComonotoneRuleParams& p);

}  // namespace coshare
