#include "coshare/allocation.hpp"

#include "coshare/stochorder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace coshare {

namespace {

constexpr double kLevelMergeTolerance = 1e-12;

std::string fmt_level(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", s);
    return buf;
}

}  // namespace

Allocation::Allocation(RandomVariable aggregate, std::vector<RandomVariable> shares)
    : aggregate_(std::move(aggregate)), shares_(std::move(shares)) {
    if (shares_.empty()) throw ContractError("Allocation: need at least one agent");
    for (const auto& x : shares_)
        if (!x.same_space(aggregate_)) throw ContractError("Allocation: shares and aggregate on different spaces");
}

Allocation Allocation::autarky(const std::vector<RandomVariable>& endowments) {
    if (endowments.empty()) throw ContractError("Allocation::autarky: no endowments");
    RandomVariable s = endowments.front();
    for (std::size_t i = 1; i < endowments.size(); ++i) s = s + endowments[i];
    return Allocation(std::move(s), endowments);
}

double Allocation::total_risk(const std::vector<RiskMeasureSpec>& measures) const {
    if (measures.size() != shares_.size())
        throw ContractError("Allocation::total_risk: one measure per agent required");
    double total = 0.0;
    for (std::size_t i = 0; i < shares_.size(); ++i) total += evaluate(measures[i], shares_[i]);
    return total;
}

std::vector<AggregateLevel> aggregate_levels(const RandomVariable& aggregate) {
    const auto& space = aggregate.domain();
    std::vector<std::size_t> order(aggregate.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return aggregate[a] < aggregate[b]; });
    std::vector<AggregateLevel> levels;
    for (std::size_t k : order) {
        if (!levels.empty() && aggregate[k] - levels.back().value <= kLevelMergeTolerance) {
            levels.back().prob += space.prob(k);
            levels.back().atoms.push_back(k);
        } else {
            levels.push_back({aggregate[k], space.prob(k), {k}});
        }
    }
    return levels;
}

ClearingCheck check_clearing(const Allocation& a, double tol) {
    ClearingCheck out;
    const auto& s = a.aggregate();
    for (std::size_t k = 0; k < s.size(); ++k) {
        double sum = 0.0;
        for (const auto& x : a.shares()) sum += x[k];
        double r = std::abs(sum - s[k]);
        if (r > out.residual) {
            out.residual = r;
            out.worst_atom = k;
        }
    }
    out.clears = out.residual <= tol;
    return out;
}

ComonotonicityVerdict check_comonotonic(const Allocation& a, double tol) {
    ComonotonicityVerdict v;
    v.measurable = true;
    v.monotone = true;
    auto levels = aggregate_levels(a.aggregate());

    for (std::size_t i = 0; i < a.agents() && v.measurable; ++i) {
        const auto& x = a.share(i);
        for (const auto& lvl : levels) {
            auto [lo, hi] = std::minmax_element(lvl.atoms.begin(), lvl.atoms.end(),
                                                [&](std::size_t p, std::size_t q) { return x[p] < x[q]; });
            if (x[*hi] - x[*lo] > tol) {
                v.measurable = false;
                v.agent = i;
                v.level = lvl.value;
                v.reason = "share " + std::to_string(i + 1) + " is not constant on the level set {S=" +
                           fmt_level(lvl.value) + "}";
                break;
            }
        }
    }

    for (std::size_t i = 0; i < a.agents() && v.monotone; ++i) {
        const auto& x = a.share(i);
        double running_max = -INFINITY;
        double running_level = 0.0;
        for (const auto& lvl : levels) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t k : lvl.atoms) {
                lo = std::min(lo, x[k]);
                hi = std::max(hi, x[k]);
            }
            if (lo < running_max - tol) {
                v.monotone = false;
                if (v.measurable) {
                    v.agent = i;
                    v.level = running_level;
                    v.next_level = lvl.value;
                    v.reason = "share " + std::to_string(i + 1) + " decreases from S=" + fmt_level(running_level) +
                               " to S=" + fmt_level(lvl.value);
                }
                break;
            }
            if (hi > running_max) {
                running_max = hi;
                running_level = lvl.value;
            }
        }
    }
    v.comonotonic = v.measurable && v.monotone;
    return v;
}

bool is_comonotonic(const Allocation& a, double tol) { return check_comonotonic(a, tol).comonotonic; }

Allocation condition_on_aggregate(const Allocation& a) {
    auto levels = aggregate_levels(a.aggregate());
    const auto& space = a.aggregate().domain();
    std::vector<RandomVariable> out;
    out.reserve(a.agents());
    for (const auto& x : a.shares()) {
        std::vector<double> vals(x.values().begin(), x.values().end());
        for (const auto& lvl : levels) {
            const double first = x[lvl.atoms.front()];
            bool flat = std::all_of(lvl.atoms.begin(), lvl.atoms.end(), [&](std::size_t k) { return x[k] == first; });
            if (flat) continue;
            double num = 0.0;
            for (std::size_t k : lvl.atoms) num += space.prob(k) * x[k];
            const double mean = num / lvl.prob;
            for (std::size_t k : lvl.atoms) vals[k] = mean;
        }
        out.emplace_back(x.space(), std::move(vals));
    }
    return Allocation(a.aggregate(), std::move(out));
}

bool ImprovementCertificate::verified() const {
    return comonotonic && clearing_residual <= kClearingTolerance &&
           std::all_of(convex_order.begin(), convex_order.end(), [](bool b) { return b; });
}

Improvement comonotonic_improvement(const Allocation& input, const ImprovementOptions& options) {
    auto clearing = check_clearing(input);
    if (!clearing.clears) throw ContractError("comonotonic_improvement: input allocation does not clear S");
    if (!options.measures.empty() && options.measures.size() != input.agents())
        throw ContractError("comonotonic_improvement: one measure per agent required");

    Allocation conditioned = condition_on_aggregate(input);
    auto levels = aggregate_levels(conditioned.aggregate());
    const std::size_t n = conditioned.agents();
    const std::size_t m = levels.size();

    // x[i][k]: agent i's value on level k.
    std::vector<std::vector<double>> x(n, std::vector<double>(m));
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            x[i][k] = conditioned.share(i)[levels[k].atoms.front()];
            scale = std::max(scale, std::abs(x[i][k]));
        }
    const double violation_tol = 1e-13 * scale;

    auto potential = [&] {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            for (std::size_t k = 0; k < m; ++k) mean += levels[k].prob * x[i][k];
            for (std::size_t k = 0; k < m; ++k) total += levels[k].prob * (x[i][k] - mean) * (x[i][k] - mean);
        }
        return total;
    };

    ImprovementCertificate cert;
    cert.potential_before = potential();

    std::size_t transfers = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t l = k + 1; l < m; ++l) {
                const double pk = levels[k].prob;
                const double pl = levels[l].prob;
                for (std::size_t i = 0; i < n; ++i) {
                    double gap_i = x[i][k] - x[i][l];
                    if (gap_i <= violation_tol) continue;

                    std::size_t j = n;
                    double gap_j = 0.0;
                    for (std::size_t c = 0; c < n; ++c) {
                        double g = x[c][l] - x[c][k];
                        if (g > gap_j) {
                            gap_j = g;
                            j = c;
                        }
                    }
                    if (j == n) throw ContractError("comonotonic_improvement: no partner gap; allocation does not clear");

                    const double t = std::min(gap_i * (pk + pl) / std::max(pk, pl), gap_j);
                    const double down = t * pl / (pk + pl);
                    const double up = t * pk / (pk + pl);
                    // Change in sum_i Var(X_i); strictly negative by the choice of t.
                    const double d_potential = pk * down * (t - 2.0 * gap_i) + pk * down * (t - 2.0 * gap_j);
                    if (!(d_potential < 0.0))
                        throw ContractError("comonotonic_improvement: transfer failed to lower the variance potential");

                    x[i][k] -= down;
                    x[i][l] += up;
                    x[j][k] += down;
                    x[j][l] -= up;
                    changed = true;
                    if (++transfers > options.max_transfers)
                        throw NonterminationError("comonotonic_improvement: transfer cap exceeded", potential(),
                                                  transfers, x);
                }
            }
        }
    }

    std::vector<RandomVariable> shares;
    shares.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> vals(conditioned.aggregate().size());
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t atom : levels[k].atoms) vals[atom] = x[i][k];
        shares.emplace_back(conditioned.space(), std::move(vals));
    }
    Allocation improved(input.aggregate(), std::move(shares));

    cert.potential_after = potential();
    cert.transfers = transfers;
    cert.comonotonic = is_comonotonic(improved);
    cert.clearing_residual = check_clearing(improved).residual;
    for (std::size_t i = 0; i < n; ++i) cert.convex_order.push_back(convex_order_leq(improved.share(i), input.share(i)));
    for (std::size_t i = 0; i < options.measures.size(); ++i) {
        cert.objective_before.push_back(evaluate(options.measures[i], input.share(i)));
        cert.objective_after.push_back(evaluate(options.measures[i], improved.share(i)));
    }
    return {std::move(improved), std::move(cert)};
}

}  // namespace coshare
