#include "properties.hpp"

#include "fixtures.hpp"
#include "reference.hpp"

#include "coshare/allocation.hpp"
#include "coshare/constraints.hpp"
#include "coshare/errors.hpp"
#include "coshare/mvsolver.hpp"
#include "coshare/oracle.hpp"
#include "coshare/riskmeasures.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <random>
#include <sstream>

namespace coshare::properties {

namespace {

const double inf = INFINITY;

class Recorder {
public:
    explicit Recorder(std::string name) { out_.name = std::move(name); }

    void instance() { ++out_.instances; }

    bool check(bool ok, const std::string& what) {
        if (!ok) fail(what);
        return ok;
    }

    void fail(const std::string& what) {
        ++out_.failures;
        if (out_.messages.size() < 5) out_.messages.push_back("instance " + std::to_string(out_.instances) + ": " + what);
    }

    Outcome done() { return std::move(out_); }

private:
    Outcome out_;
};

std::string str(double x) {
    std::ostringstream s;
    s.precision(17);
    s << x;
    return s.str();
}

std::vector<double> copy(std::span<const double> v) { return {v.begin(), v.end()}; }

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Equal weights, short decimals, or arbitrary doubles.
SpacePtr mixed_space(std::mt19937_64& rng, std::size_t m) {
    switch (rng() % 3) {
        case 0: return FiniteSpace::uniform(m);
        case 1: {
            std::vector<int> w(m);
            int total = 0;
            for (auto& x : w) total += (x = 1 + static_cast<int>(rng() % 5));
            std::vector<double> p(m);
            for (std::size_t k = 0; k < m; ++k) p[k] = static_cast<double>(w[k]) / total;
            return FiniteSpace::from_probs(p);
        }
        default: return reference::random_space(rng, m);
    }
}

RiskMeasureSpec consistent_measure(std::mt19937_64& rng) {
    switch (rng() % 3) {
        case 0: return ExpectedShortfall{uniform(rng, 0.05, 0.95)};
        case 1: return MeanVariance{uniform(rng, 0.1, 2.0)};
        default: {
            double lo = uniform(rng, 0.0, 1.0);
            return ExpectedConvexLoss{ConvexLadder{lo, lo + uniform(rng, 0.0, 1.0), uniform(rng, -1.0, 2.0),
                                                   uniform(rng, 0.0, 2.0)}};
        }
    }
}

}  // namespace

Outcome improvement_postconditions(std::uint64_t seed, std::size_t instances) {
    Recorder rec("improvement postconditions");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t n = pick(rng, 2, 4), m = pick(rng, 2, 6);
        auto space = mixed_space(rng, m);
        auto probs = space->probs();
        RandomVariable s(space, reference::lattice_values(rng, m, 0.0, 0.5, 6));
        std::vector<RandomVariable> shares;
        RandomVariable rest = s;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            RandomVariable x(space, reference::lattice_values(rng, m, -2.0, 0.25, 24));
            rest = rest - x;
            shares.push_back(x);
        }
        shares.push_back(rest);
        Allocation before(s, shares);
        std::vector<RiskMeasureSpec> rho;
        for (std::size_t i = 0; i < n; ++i) rho.push_back(consistent_measure(rng));

        Improvement imp = comonotonic_improvement(before, ImprovementOptions{1'000'000, rho});
        const Allocation& after = imp.allocation;
        rec.check(check_clearing(after).residual <= 1e-9, "clearing residual " + str(check_clearing(after).residual));
        rec.check(is_comonotonic(after), "not comonotonic: " + check_comonotonic(after).reason);
        for (std::size_t i = 0; i < n; ++i)
            rec.check(reference::convex_leq(copy(after.share(i).values()), probs, copy(before.share(i).values()), probs),
                      "share " + std::to_string(i) + " not dominated in convex order");
        rec.check(imp.certificate.verified(), "certificate not verified");
        rec.check(imp.certificate.potential_after <= imp.certificate.potential_before + 1e-12,
                  "variance potential increased");
        double r_before = 0, r_after = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r_before += evaluate(rho[i], before.share(i));
            r_after += evaluate(rho[i], after.share(i));
        }
        rec.check(r_after <= r_before + 1e-9, "total risk rose from " + str(r_before) + " to " + str(r_after));

        Improvement again = comonotonic_improvement(after);
        rec.check(again.certificate.transfers == 0, "second pass moved mass");
        double drift = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < m; ++k)
                drift = std::max(drift, std::abs(again.allocation.share(i)[k] - after.share(i)[k]));
        rec.check(drift <= 1e-12, "second pass changed shares by " + str(drift));
    }
    return rec.done();
}

Outcome consistent_monotonicity(std::uint64_t seed, std::size_t instances) {
    Recorder rec("convex-order consistency");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t m = pick(rng, 2, 7);
        auto space = mixed_space(rng, m);
        auto probs = space->probs();
        auto x = reference::random_values(rng, m, -3.0, 5.0);
        // Y: averages over random blocks of atoms, then a partial mean-preserving squeeze.
        std::vector<double> y = x;
        std::size_t a = pick(rng, 0, m - 1), b = pick(rng, 0, m - 1);
        if (a != b) {
            double mass = probs[a] + probs[b];
            double avg = (probs[a] * y[a] + probs[b] * y[b]) / mass;
            double keep = uniform(rng, 0.0, 1.0);
            y[a] = avg + keep * (y[a] - avg);
            y[b] = avg + keep * (y[b] - avg);
        }
        if (rng() % 2) {
            double mu = reference::mean(y, probs);
            double lambda = uniform(rng, 0.0, 1.0);
            for (auto& v : y) v = mu + lambda * (v - mu);
        }
        if (!reference::convex_leq(y, probs, x, probs)) {
            rec.fail("constructed pair is not ordered");
            continue;
        }
        RandomVariable xr(space, x), yr(space, y);
        for (int k = 0; k < 3; ++k) {
            RiskMeasureSpec rho = consistent_measure(rng);
            double ry = evaluate(rho, yr), rx = evaluate(rho, xr);
            rec.check(ry <= rx + 1e-10, describe(rho) + ": " + str(ry) + " > " + str(rx));
        }
    }
    return rec.done();
}

Outcome es_dominates_var(std::uint64_t seed, std::size_t instances) {
    Recorder rec("ES dominates VaR");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t m = pick(rng, 1, 8);
        auto space = mixed_space(rng, m);
        RandomVariable x(space, reference::random_values(rng, m, -5.0, 5.0));
        std::vector<double> levels{uniform(rng, 0.001, 0.999)};
        double cum = 0;
        for (std::size_t k = 0; k + 1 < m; ++k) levels.push_back(cum += space->prob(k));
        for (double alpha : levels) {
            if (alpha <= 0 || alpha >= 1) continue;
            double e = es(x, alpha), v = var(x, alpha);
            rec.check(e >= v - 1e-12, "alpha " + str(alpha) + ": ES " + str(e) + " < VaR " + str(v));
        }
    }
    return rec.done();
}

Outcome projection_kkt(std::uint64_t seed, std::size_t instances) {
    Recorder rec("statewise projection KKT");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t n = pick(rng, 1, 6);
        std::vector<double> c(n), d(n), lo(n), hi(n);
        double min_total = 0, max_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            c[i] = uniform(rng, -3, 3);
            d[i] = uniform(rng, 0.05, 5);
            lo[i] = rng() % 3 == 0 ? -inf : uniform(rng, -4, 0);
            hi[i] = rng() % 3 == 0 ? inf : uniform(rng, 0, 4);
            min_total += lo[i];
            max_total += hi[i];
        }
        double s_lo = std::isfinite(min_total) ? min_total : -20, s_hi = std::isfinite(max_total) ? max_total : 20;
        double s = rng() % 10 == 0 ? (rng() % 2 ? s_lo : s_hi) : uniform(rng, s_lo, s_hi);
        StatewiseSolution sol = statewise_projection(c, d, lo, hi, s);
        const double scale = std::max(1.0, std::abs(s));
        double sum = 0;
        for (double x : sol.shares) sum += x;
        rec.check(std::abs(sum - s) <= 1e-12 * scale, "clears " + str(sum) + " instead of " + str(s));
        for (std::size_t i = 0; i < n; ++i) {
            const double x = sol.shares[i], free = c[i] + sol.eta / d[i];
            const double tol = 1e-12 * std::max({1.0, std::abs(x), std::abs(free)});
            rec.check(x >= lo[i] - tol && x <= hi[i] + tol, "share outside its box");
            if (x > lo[i] + tol && x < hi[i] - tol)
                rec.check(std::abs(x - free) <= 1e-12 * std::max(1.0, std::abs(sol.eta / d[i]) + std::abs(c[i])),
                          "interior share " + str(x) + " vs " + str(free));
            else if (x >= hi[i] - tol)
                rec.check(free >= hi[i] - 1e-9, "capped share whose free value sits below the cap");
            else
                rec.check(free <= lo[i] + 1e-9, "floored share whose free value sits above the floor");
        }
        ShadowPrice h(c, d, lo, hi);
        double eta = h.solve(s);
        rec.check(std::abs(h.total(eta) - s) <= 1e-12 * scale, "H(eta*(s)) = " + str(h.total(eta)));
    }
    return rec.done();
}

Outcome mv_solver_vs_qp(std::uint64_t seed, std::size_t instances) {
    Recorder rec("capped mean-variance vs QP");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t n = pick(rng, 2, 3), m = pick(rng, 1, 4);
        auto space = mixed_space(rng, m);
        auto probs = space->probs();
        auto sv = reference::random_values(rng, m, 0.0, 6.0);
        RandomVariable s(space, sv);
        MVProblem prob{{}, {}, {}, s};
        double cap_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            prob.delta.push_back(uniform(rng, 0.2, 3.0));
            prob.lower.push_back(rng() % 2 ? 0.0 : -inf);
            double u = rng() % 5 < 3 ? uniform(rng, 0.5, 4.0) : inf;
            prob.upper.push_back(u);
            cap_total += u;
        }
        if (cap_total < *std::max_element(sv.begin(), sv.end())) prob.upper.back() = inf;

        std::optional<MVSolution> solved;
        try {
            solved = solve_capped_mv(prob);
        } catch (const std::exception& e) {
            rec.fail(std::string("solver threw: ") + e.what());
            continue;
        }
        const MVSolution& sol = *solved;
        auto qp = reference::mv_qp(prob.delta, prob.lower, prob.upper, sv, probs);
        rec.check(std::abs(sol.objective - qp.objective) <= 1e-6,
                  "objective " + str(sol.objective) + " vs QP " + str(qp.objective));
        double direct = 0;
        for (std::size_t i = 0; i < n; ++i) direct += mean_variance(sol.allocation.share(i), prob.delta[i]);
        rec.check(std::abs(direct - sol.objective) <= 1e-9, "reported objective differs from its allocation");
        rec.check(is_comonotonic(sol.allocation), "solution not comonotonic");
        rec.check(check_clearing(sol.allocation).clears, "solution does not clear");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < m; ++k) {
                double x = sol.allocation.share(i)[k];
                rec.check(x >= prob.lower[i] - 1e-9 && x <= prob.upper[i] + 1e-9, "share outside its bounds");
            }
    }
    return rec.done();
}

namespace {

// Sup-norm Lipschitz constant of rho on shares confined to a range of the given width.
double lipschitz(const RiskMeasureSpec& rho, double width, double h) {
    return std::visit(
        [&](const auto& r) -> double {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ExpectedShortfall>) return 1.0;
            else if constexpr (std::is_same_v<T, ExpectedConvexLoss>) return r.ladder.slope_high;
            else if constexpr (std::is_same_v<T, MeanVariance>) return 1.0 + r.delta * (width / 2 + h / 4);
            else return INFINITY;
        },
        rho);
}

RiskMeasureSpec monotone_consistent(std::mt19937_64& rng) {
    if (rng() % 2) return ExpectedShortfall{uniform(rng, 0.05, 0.95)};
    double lo = uniform(rng, 0.0, 1.0);
    return ExpectedConvexLoss{ConvexLadder{lo, lo + uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 2.0), uniform(rng, 0.0, 1.5)}};
}

}  // namespace

Outcome central_equality(std::uint64_t seed, std::size_t instances) {
    Recorder rec("central equality on solid sets");
    std::mt19937_64 rng(seed);
    const double h = 0.5;
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t m = pick(rng, 2, 4);
        auto space = mixed_space(rng, m);
        auto sv = reference::lattice_values(rng, m, 0.0, h, 6);
        RandomVariable s(space, sv);
        const double s_max = *std::max_element(sv.begin(), sv.end());

        // Lattice-aligned pathwise bounds; agent 1's range is also the grid range.
        double l1 = -h * static_cast<double>(pick(rng, 0, 2)), u1 = h * static_cast<double>(pick(rng, 2, 7));
        double l2 = -h * static_cast<double>(pick(rng, 0, 2)), u2 = s_max - l1 + h * static_cast<double>(pick(rng, 0, 3));
        std::vector<Constraint> cons{{0, PathwiseBounds{l1, u1}}, {1, PathwiseBounds{l2, u2}}};

        std::vector<RiskMeasureSpec> rho;
        for (int i = 0; i < 2; ++i) {
            if (rng() % 3 == 0) rho.push_back(MeanVariance{uniform(rng, 0.05, 1.0)});
            else rho.push_back(monotone_consistent(rng));
        }

        // Monotone ceilings on agent 1 only, anchored at a random feasible grid point.
        std::vector<double> anchor(m);
        bool anchored = false;
        for (int attempt = 0; attempt < 50 && !anchored; ++attempt) {
            for (std::size_t k = 0; k < m; ++k)
                anchor[k] = l1 + h * static_cast<double>(pick(rng, 0, static_cast<std::size_t>((u1 - l1) / h)));
            anchored = true;
            for (std::size_t k = 0; k < m; ++k) anchored = anchored && sv[k] - anchor[k] >= l2 && sv[k] - anchor[k] <= u2;
        }
        if (!anchored) std::fill(anchor.begin(), anchor.end(), l1);
        RandomVariable x1(space, anchor);
        if (rng() % 2) {
            RiskMeasureSpec c = monotone_consistent(rng);
            cons.push_back({0, RiskCeiling{c, evaluate(c, x1) + uniform(rng, 0.0, 0.5)}});
        }
        if (rng() % 2)
            cons.push_back({0, ExpectationConstraint{Relation::LessEqual, moments(x1).mean + uniform(rng, 0.0, 0.5)}});

        if (classify_solidity(cons, &s).status != Solidity::Solid) {
            rec.fail("generated set is not classified Solid");
            continue;
        }

        GridSpec grid = GridSpec::box(1, m, l1, u1, h);
        OracleOptions oo{1, kMaxGridPoints};
        try {
            OracleResult best = grid_minimize(s, rho, cons, grid, oo);
            OracleResult como = comonotone_minimize(s, rho, cons, grid, oo);
            const double resolution =
                (lipschitz(rho[0], u1 - l1, h) + lipschitz(rho[1], u2 - l2, h)) * h;
            const double gap = como.value - best.value;
            rec.check(gap >= -1e-12, "comonotone value below the full grid value");
            rec.check(gap <= resolution + 1e-9,
                      "gap " + str(gap) + " exceeds the grid resolution " + str(resolution));
        } catch (const InfeasibleError& e) {
            rec.fail(std::string("oracle reported infeasible: ") + e.what());
        }
    }
    return rec.done();
}

Outcome central_equality_fails_off_solid() {
    Recorder rec("strict gap on non-solid sets");
    OracleOptions oo{1, kMaxGridPoints};
    {
        rec.instance();
        fixtures::StepUpCase c;
        double gap = comonotone_minimize(c.s, c.rho, c.constraints, c.grid, oo).value -
                     grid_minimize(c.s, c.rho, c.constraints, c.grid, oo).value;
        rec.check(std::abs(gap - 1.0 / 24) <= 1e-12, "step-up gap " + str(gap));
        rec.check(classify_solidity(c.constraints, &c.s).status == Solidity::NotSolid, "step-up set not NotSolid");
    }
    {
        rec.instance();
        fixtures::QuantileCeilingCase c;
        double gap = comonotone_minimize(c.s, c.rho, c.constraints, c.grid, oo).value -
                     grid_minimize(c.s, c.rho, c.constraints, c.grid, oo).value;
        rec.check(std::abs(gap - 1.0 / 6) <= 1e-12, "quantile-ceiling gap " + str(gap));
        rec.check(classify_solidity(c.constraints, &c.s).status == Solidity::NotSolid,
                  "quantile-ceiling set not NotSolid");
    }
    return rec.done();
}

Outcome solid_sets_resist_falsifier(std::uint64_t seed, std::size_t instances) {
    Recorder rec("solid sets resist the falsifier");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const std::size_t n = pick(rng, 2, 3), m = pick(rng, 2, 5);
        auto space = mixed_space(rng, m);
        RandomVariable s(space, reference::random_values(rng, m, 0.0, 4.0));
        std::vector<RandomVariable> shares;
        RandomVariable rest = s;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            RandomVariable x(space, reference::random_values(rng, m, -1.0, 3.0));
            rest = rest - x;
            shares.push_back(x);
        }
        shares.push_back(rest);
        Allocation x(s, shares);
        std::vector<Constraint> cons;
        for (std::size_t i = 0; i < n; ++i) {
            auto v = x.share(i).values();
            double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
            switch (rng() % 4) {
                case 0: cons.push_back({i, PathwiseBounds{lo - uniform(rng, 0, 0.2), hi + uniform(rng, 0, 0.2)}}); break;
                case 1: {
                    Relation rel = static_cast<Relation>(rng() % 3);
                    cons.push_back({i, ExpectationConstraint{rel, moments(x.share(i)).mean}});
                    break;
                }
                case 2: {
                    RiskMeasureSpec c = consistent_measure(rng);
                    cons.push_back({i, RiskCeiling{c, evaluate(c, x.share(i))}});
                    break;
                }
                default: {
                    ConvexLadder phi{0.5, 1.5, uniform(rng, -1, 2), uniform(rng, 0, 1)};
                    cons.push_back({i, OrliczBound{phi, expected_convex_loss(x.share(i), phi)}});
                }
            }
        }
        if (!rec.check(classify_solidity(cons, &s).status == Solidity::Solid, "set not classified Solid")) continue;
        if (!rec.check(is_feasible(x, cons), "seed allocation infeasible")) continue;
        auto w = falsify_solidity(cons, x, FalsifyOptions{1000, seed + t, kFeasibilityTolerance});
        rec.check(!w.has_value(), "falsifier produced a witness on a solid set: " + (w ? w->origin : std::string()));
    }
    return rec.done();
}

Outcome two_agent_interval(std::uint64_t seed, std::size_t instances) {
    Recorder rec("two-agent fixed-point interval");
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < instances; ++t) {
        rec.instance();
        const double a = uniform(rng, 0.01, 0.99), cap = uniform(rng, 0.1, 8.0);
        const std::size_t m = pick(rng, 1, 6);
        auto probs = reference::random_probs(rng, m);
        std::vector<double> values = rng() % 4 == 0 ? reference::lattice_values(rng, m, 0.0, 1.0, 10)
                                                    : reference::random_values(rng, m, 0.0, 10.0);
        std::vector<Mass> law;
        {
            auto space = FiniteSpace::from_probs(probs);
            law = distribution_of(RandomVariable(space, values));
        }
        auto [lo, hi] = two_agent_fixed_point(a, cap, law);
        if (!rec.check(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "bad interval")) continue;
        for (double beta : {lo, 0.5 * (lo + hi), hi}) {
            double r = two_agent_residual(a, cap, law, beta);
            rec.check(std::abs(r) <= 1e-10, "residual " + str(r) + " at beta " + str(beta));
        }
        // No sign change outside: strictly positive to the left, strictly negative to the right.
        bool left = true, right = true;
        for (int k = 1; k <= 400; ++k) {
            double eps = 1e-6 * std::pow(1.05, k);
            left = left && two_agent_residual(a, cap, law, lo - eps) > 0;
            right = right && two_agent_residual(a, cap, law, hi + eps) < 0;
        }
        rec.check(left, "residual not positive left of beta-");
        rec.check(right, "residual not negative right of beta+");
    }
    return rec.done();
}

}  // namespace coshare::properties
