#include "coshare/constraints.hpp"

#include "coshare/stochorder.hpp"
#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace coshare {

using detail::Overloaded;

namespace {

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

const char* relation_symbol(Relation r) {
    switch (r) {
        case Relation::LessEqual: return "<=";
        case Relation::Equal: return "=";
        case Relation::GreaterEqual: return ">=";
    }
    return "?";
}

std::vector<std::size_t> scope_of(const Constraint& c, std::size_t agents) {
    if (c.agent) {
        if (*c.agent >= agents) throw ContractError("constraint refers to agent " + std::to_string(*c.agent + 1) +
                                                    " but the allocation has " + std::to_string(agents));
        return {*c.agent};
    }
    std::vector<std::size_t> all(agents);
    for (std::size_t i = 0; i < agents; ++i) all[i] = i;
    return all;
}

/// Shared evaluation for check_feasible / is_feasible. `sink` receives each
/// violation and returns false to stop early.
template <class Sink>
void evaluate_constraints(const Allocation& a, std::span<const Constraint> constraints, double tol, Sink&& sink) {
    const auto& s = a.aggregate();
    for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
        const auto& c = constraints[ci];
        for (std::size_t i : scope_of(c, a.agents())) {
            const auto& x = a.share(i);
            auto report = [&](std::optional<std::size_t> atom, double magnitude, auto&& message) {
                return sink(Violation{ci, i, atom, magnitude, message()});
            };
            bool keep_going = std::visit(
                Overloaded{
                    [&](const PathwiseBounds& b) {
                        for (std::size_t k = 0; k < x.size(); ++k) {
                            if (x[k] < b.lower - tol &&
                                !report(k, b.lower - x[k], [&] { return "below lower bound " + num(b.lower); }))
                                return false;
                            if (x[k] > b.upper + tol &&
                                !report(k, x[k] - b.upper, [&] { return "above upper bound " + num(b.upper); }))
                                return false;
                        }
                        return true;
                    },
                    [&](const ExpectationConstraint& e) {
                        const double mean = moments(x).mean;
                        double excess = 0.0;
                        switch (e.relation) {
                            case Relation::LessEqual: excess = mean - e.bound; break;
                            case Relation::GreaterEqual: excess = e.bound - mean; break;
                            case Relation::Equal: excess = std::abs(mean - e.bound); break;
                        }
                        if (excess > tol)
                            return report(std::nullopt, excess, [&] {
                                return "E[X] = " + num(mean) + " violates " + relation_symbol(e.relation) + " " +
                                       num(e.bound);
                            });
                        return true;
                    },
                    [&](const OrliczBound& o) {
                        const double v = expected_convex_loss(x, o.phi);
                        if (v > o.bound + tol)
                            return report(std::nullopt, v - o.bound,
                                          [&] { return "E[phi(X)] = " + num(v) + " exceeds " + num(o.bound); });
                        return true;
                    },
                    [&](const RiskCeiling& r) {
                        const double v = evaluate(r.measure, x);
                        if (v > r.bound + tol)
                            return report(std::nullopt, v - r.bound, [&] {
                                return describe(r.measure) + " = " + num(v) + " exceeds ceiling " + num(r.bound);
                            });
                        return true;
                    },
                    [&](const RiskFloor& r) {
                        const double v = evaluate(r.measure, x);
                        if (v < r.bound - tol)
                            return report(std::nullopt, r.bound - v, [&] {
                                return describe(r.measure) + " = " + num(v) + " is below floor " + num(r.bound);
                            });
                        return true;
                    },
                    [&](const IdiosyncraticRetention& r) {
                        if (r.endowment.size() != x.size())
                            throw ContractError("IdiosyncraticRetention: endowment lives on a different space");
                        for (std::size_t k = 0; k < x.size(); ++k) {
                            const double z = r.endowment[k];
                            if (z < r.deductible) {
                                if (std::abs(x[k] - z) > tol &&
                                    !report(k, std::abs(x[k] - z), [&] {
                                        return "retention requires X = " + num(z) + " below the deductible, got " +
                                               num(x[k]);
                                    }))
                                    return false;
                            } else if (x[k] < r.deductible - tol &&
                                       !report(k, r.deductible - x[k], [&] {
                                           return "retention requires X >= " + num(r.deductible) + ", got " + num(x[k]);
                                       })) {
                                return false;
                            }
                        }
                        return true;
                    },
                    [&](const AggregateEnvelope& e) {
                        for (std::size_t k = 0; k < x.size(); ++k) {
                            const double lo = e.lower(s[k]);
                            const double hi = e.upper(s[k]);
                            if (x[k] < lo - tol && !report(k, lo - x[k], [&] {
                                    return "below envelope " + num(lo) + " at S=" + num(s[k]);
                                }))
                                return false;
                            if (x[k] > hi + tol && !report(k, x[k] - hi, [&] {
                                    return "above envelope " + num(hi) + " at S=" + num(s[k]);
                                }))
                                return false;
                        }
                        return true;
                    },
                },
                c.kind);
            if (!keep_going) return;
        }
    }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double PiecewiseLinear::operator()(double x) const {
    if (points.empty()) throw ContractError("PiecewiseLinear: no breakpoints");
    if (x <= points.front().first) return points.front().second;
    if (x >= points.back().first) return points.back().second;
    auto it = std::upper_bound(points.begin(), points.end(), x,
                               [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& [x1, y1] = *it;
    const auto& [x0, y0] = *(it - 1);
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

std::string describe(const Constraint& c) {
    std::string scope = c.agent ? "X_" + std::to_string(*c.agent + 1) : "every X_i";
    return std::visit(
        Overloaded{
            [&](const PathwiseBounds& b) { return num(b.lower) + " <= " + scope + " <= " + num(b.upper); },
            [&](const ExpectationConstraint& e) {
                return "E[" + scope + "] " + relation_symbol(e.relation) + " " + num(e.bound);
            },
            [&](const OrliczBound& o) { return "E[phi(" + scope + ")] <= " + num(o.bound); },
            [&](const RiskCeiling& r) { return describe(r.measure) + "(" + scope + ") <= " + num(r.bound); },
            [&](const RiskFloor& r) { return describe(r.measure) + "(" + scope + ") >= " + num(r.bound); },
            [&](const IdiosyncraticRetention& r) { return "retention of " + scope + " with deductible " + num(r.deductible); },
            [&](const AggregateEnvelope&) { return "l(S) <= " + scope + " <= u(S)"; },
        },
        c.kind);
}

FeasibilityReport check_feasible(const Allocation& a, std::span<const Constraint> constraints, double tol) {
    FeasibilityReport out;
    evaluate_constraints(a, constraints, tol, [&](Violation v) {
        out.violations.push_back(std::move(v));
        return true;
    });
    out.feasible = out.violations.empty();
    return out;
}

bool is_feasible(const Allocation& a, std::span<const Constraint> constraints, double tol) {
    bool ok = true;
    evaluate_constraints(a, constraints, tol, [&](const Violation&) {
        ok = false;
        return false;
    });
    return ok;
}

std::string to_string(Solidity s) {
    switch (s) {
        case Solidity::Solid: return "Solid";
        case Solidity::NotSolid: return "NotSolid";
        case Solidity::Unknown: return "Unknown";
    }
    return "?";
}

Solidity meet(Solidity a, Solidity b) {
    if (a == Solidity::NotSolid || b == Solidity::NotSolid) return Solidity::NotSolid;
    if (a == Solidity::Unknown || b == Solidity::Unknown) return Solidity::Unknown;
    return Solidity::Solid;
}

SolidityVerdict classify_solidity(std::span<const Constraint> constraints, const RandomVariable* aggregate) {
    std::vector<double> support;
    if (aggregate)
        for (const auto& m : distribution_of(*aggregate)) support.push_back(m.value);

    SolidityVerdict verdict;
    std::vector<std::string> reasons;
    for (std::size_t ci = 0; ci < constraints.size(); ++ci) {
        const auto& c = constraints[ci];
        auto [status, why] = std::visit(
            Overloaded{
                [](const PathwiseBounds&) { return std::pair{Solidity::Solid, std::string("deterministic pathwise bounds")}; },
                [](const ExpectationConstraint&) {
                    return std::pair{Solidity::Solid, std::string("linear expectation constraint")};
                },
                [](const OrliczBound&) { return std::pair{Solidity::Solid, std::string("Orlicz-type bound")}; },
                [](const RiskCeiling& r) {
                    if (cx_consistency_flag(r.measure) == Consistency::Consistent)
                        return std::pair{Solidity::Solid, "ceiling on convex-order-consistent " + describe(r.measure)};
                    return std::pair{Solidity::NotSolid,
                                     "ceiling on " + describe(r.measure) + ", which is not convex-order consistent"};
                },
                [](const RiskFloor& r) {
                    if (cx_consistency_flag(r.measure) == Consistency::Consistent)
                        return std::pair{Solidity::NotSolid, "floor on convex-order-consistent " + describe(r.measure) +
                                                                 "; contractions lower it"};
                    return std::pair{Solidity::Unknown, "floor on " + describe(r.measure) + " is outside the certified families"};
                },
                [](const IdiosyncraticRetention&) {
                    return std::pair{Solidity::NotSolid,
                                     std::string("retention couples the share to an endowment outside sigma(S)")};
                },
                [&](const AggregateEnvelope& e) {
                    for (std::size_t k = 0; k + 1 < support.size(); ++k) {
                        const double s0 = support[k], s1 = support[k + 1];
                        const double slope = (e.upper(s1) - e.upper(s0)) / (s1 - s0);
                        if (slope > 1.0 + 1e-12)
                            return std::pair{Solidity::NotSolid,
                                             "upper envelope rises with slope " + num(slope) + " > 1 between S=" +
                                                 num(s0) + " and S=" + num(s1)};
                    }
                    return std::pair{Solidity::Unknown,
                                     std::string("aggregate-indexed envelope without a solidity argument")};
                },
            },
            c.kind);
        verdict.status = meet(verdict.status, status);
        if (status != Solidity::Solid) reasons.push_back("[" + std::to_string(ci) + "] " + describe(c) + ": " + why);
    }
    if (reasons.empty()) {
        verdict.reason = constraints.empty() ? "no constraints" : "every constraint belongs to a solid family";
    } else {
        for (std::size_t k = 0; k < reasons.size(); ++k) verdict.reason += (k ? "; " : "") + reasons[k];
    }
    return verdict;
}

WitnessCheck verify_witness(std::span<const Constraint> constraints, const SolidityWitness& w, double tol) {
    WitnessCheck out;
    out.x_feasible = check_feasible(w.feasible, constraints, tol).feasible;
    out.y_clears = w.reduced.aggregate().values().size() == w.feasible.aggregate().values().size() &&
                   check_clearing(w.reduced).clears;
    for (std::size_t k = 0; out.y_clears && k < w.feasible.aggregate().size(); ++k)
        if (std::abs(w.reduced.aggregate()[k] - w.feasible.aggregate()[k]) > kClearingTolerance) out.y_clears = false;
    out.convex_order = w.reduced.agents() == w.feasible.agents();
    for (std::size_t i = 0; out.convex_order && i < w.feasible.agents(); ++i)
        out.convex_order = convex_order_leq(w.reduced.share(i), w.feasible.share(i));
    out.y_infeasible = !check_feasible(w.reduced, constraints, tol).feasible;
    return out;
}

std::optional<SolidityWitness> falsify_solidity(std::span<const Constraint> constraints, const Allocation& x,
                                                const FalsifyOptions& options) {
    if (!check_clearing(x).clears) throw ContractError("falsify_solidity: seed allocation does not clear S");
    if (!is_feasible(x, constraints, options.tol))
        throw ContractError("falsify_solidity: seed allocation is infeasible");

    auto accept = [&](Allocation y, std::string origin) -> std::optional<SolidityWitness> {
        if (is_feasible(y, constraints, options.tol)) return std::nullopt;
        SolidityWitness w{x, std::move(y), std::move(origin)};
        if (!verify_witness(constraints, w, options.tol).ok()) return std::nullopt;
        return w;
    };

    if (auto w = accept(comonotonic_improvement(x).allocation, "comonotonic improvement")) return w;
    if (auto w = accept(condition_on_aggregate(x), "conditional expectation on S")) return w;

    const std::size_t n = x.agents();
    const std::size_t atoms = x.aggregate().size();
    if (n < 2 || atoms < 2) return std::nullopt;

    const auto& space = x.aggregate().domain();
    std::mt19937_64 rng(options.seed);
    constexpr std::size_t kChainLength = 32;
    std::vector<std::vector<double>> y;
    auto reset = [&] {
        y.clear();
        for (const auto& share : x.shares()) y.emplace_back(share.values().begin(), share.values().end());
    };
    reset();

    for (std::size_t iter = 0; iter < options.budget; ++iter) {
        if (iter % kChainLength == 0) reset();
        std::size_t w0 = rng() % atoms;
        std::size_t w1 = rng() % (atoms - 1);
        if (w1 >= w0) ++w1;
        std::size_t i = rng() % n;
        std::size_t j = rng() % (n - 1);
        if (j >= i) ++j;
        // Agent i sheds mass at w0 and gains at w1; agent j mirrors it.
        double gap_i = y[i][w0] - y[i][w1];
        double gap_j = y[j][w1] - y[j][w0];
        if (gap_i <= 0.0 || gap_j <= 0.0) continue;
        const double p0 = space.prob(w0), p1 = space.prob(w1);
        const double reach = (p0 + p1) / std::max(p0, p1);
        const double t_max = std::min(gap_i, gap_j) * reach;
        const double u = (rng() % 4 == 0) ? 1.0 : uniform01(rng);
        const double t = u * t_max;
        if (!(t > 0.0)) continue;
        const double down = t * p1 / (p0 + p1);
        const double up = t * p0 / (p0 + p1);
        y[i][w0] -= down;
        y[i][w1] += up;
        y[j][w0] += down;
        y[j][w1] -= up;

        std::vector<RandomVariable> shares;
        shares.reserve(n);
        for (const auto& v : y) shares.emplace_back(x.space(), v);
        if (auto w = accept(Allocation(x.aggregate(), std::move(shares)), "random Pigou-Dalton chain")) return w;
    }
    return std::nullopt;
}

}  // namespace coshare
