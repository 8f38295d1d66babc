#include "coshare/errors.hpp"
#include "coshare/mvsolver.hpp"
#include "coshare/oracle.hpp"

#include "reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace coshare;
using doctest::Approx;

namespace {

const double inf = INFINITY;

std::vector<Mass> two_point(double lo, double hi) { return {{lo, 0.5}, {hi, 0.5}}; }

}  // namespace

TEST_CASE("unconstrained quota shares") {
    auto a = unconstrained_shares(std::vector<double>{2, 3, 5, 6});
    CHECK(a[0] == Approx(5.0 / 12).epsilon(1e-15));
    CHECK(a[1] == Approx(5.0 / 18).epsilon(1e-15));
    CHECK(a[2] == Approx(1.0 / 6).epsilon(1e-15));
    CHECK(a[3] == Approx(5.0 / 36).epsilon(1e-15));
    CHECK(unconstrained_shares(std::vector<double>{3.0}) == std::vector<double>{1.0});
    auto b = unconstrained_shares(std::vector<double>{0.01, 1});
    CHECK(b[0] == Approx(100.0 / 101));
    CHECK(b[1] == Approx(1.0 / 101));
    CHECK_THROWS_AS(unconstrained_shares(std::vector<double>{1, 0}), DomainError);
    CHECK_THROWS_AS(unconstrained_shares(std::vector<double>{-1, 2}), DomainError);
}

TEST_CASE("shadow price inversion") {
    std::vector<double> c{0, 0, 0, 0}, delta{2, 3, 5, 6}, lo(4, -inf), hi{5, 8, 3, inf};
    ShadowPrice h(c, delta, lo, hi);
    double prev = -inf;
    for (double eta = -50; eta <= 80; eta += 0.37) {
        double t = h.total(eta);
        CHECK(t >= prev);
        prev = t;
    }
    for (double s : {-10.0, 0.0, 3.7, 12.0, 15.5, 19.0, 20.0, 33.3}) CHECK(h.total(h.solve(s)) == Approx(s).epsilon(1e-12));

    // A box with no interior agent above its kinks has a flat H: the solution is an interval.
    std::vector<double> c2{0, 0}, d2{1, 1}, lo2{0, 0}, hi2{1, 1};
    ShadowPrice flat(c2, d2, lo2, hi2);
    auto [a, b] = flat.solution_interval(2.0);
    CHECK(a == Approx(1.0));
    CHECK(b == inf);
    CHECK(flat.solve(2.0) == Approx(1.0));
    CHECK(flat.solution_interval(1.0).first == Approx(0.5));
    CHECK_THROWS_AS(flat.solution_interval(2.5), InfeasibleError);
    CHECK_THROWS_AS(flat.solution_interval(-0.1), InfeasibleError);
}

TEST_CASE("statewise projection") {
    std::vector<double> c{1, -2, 0.5}, delta{1, 2, 4}, lo(3, -inf), hi(3, inf);
    auto sol = statewise_projection(c, delta, lo, hi, 7.0);
    double eta = (7.0 - (1 - 2 + 0.5)) / (1 + 0.5 + 0.25);
    for (std::size_t i = 0; i < 3; ++i) CHECK(sol.shares[i] == Approx(c[i] + eta / delta[i]).epsilon(1e-14));

    std::vector<double> one_c{0}, one_d{3}, one_lo{-inf}, one_hi{inf};
    CHECK(statewise_projection(one_c, one_d, one_lo, one_hi, 4.25).shares[0] == 4.25);

    std::vector<double> c4(4, 0.0), d4{2, 3, 5, 6}, lo4(4, -inf), hi4{5, 8, 3, inf};
    auto x = statewise_projection(c4, d4, lo4, hi4, 12.0).shares;
    CHECK(x[0] == 5.0);
    CHECK(x[1] == Approx(10.0 / 3).epsilon(1e-15));
    CHECK(x[2] == Approx(2.0).epsilon(1e-15));
    CHECK(x[3] == Approx(5.0 / 3).epsilon(1e-15));

    std::vector<double> capped{1, 1};
    CHECK_THROWS_AS(statewise_projection(std::vector<double>{0, 0}, std::vector<double>{1, 1},
                                         std::vector<double>{0, 0}, capped, 2.5),
                    InfeasibleError);
}

TEST_CASE("statewise projection matches a bisection water level") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng() % 5;
        std::vector<double> c(n), d(n), lo(n), hi(n);
        double min_total = 0, max_total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            c[i] = 4 * u(rng) - 2;
            d[i] = 0.1 + 3 * u(rng);
            lo[i] = u(rng) < 0.3 ? -inf : -3 * u(rng);
            hi[i] = u(rng) < 0.3 ? inf : 3 * u(rng);
            min_total += lo[i];
            max_total += hi[i];
        }
        double s_lo = std::isfinite(min_total) ? min_total : -10, s_hi = std::isfinite(max_total) ? max_total : 10;
        double s = s_lo + (s_hi - s_lo) * u(rng);
        auto got = statewise_projection(c, d, lo, hi, s).shares;
        auto want = reference::water_fill(c, d, lo, hi, s);
        for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == Approx(want[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("capped solver without caps is the proportional rule") {
    auto space = FiniteSpace::from_probs(std::vector<double>{0.2, 0.5, 0.3});
    RandomVariable s(space, {1, 4, 9});
    MVProblem prob{{1, 3}, {-inf, -inf}, {inf, inf}, s};
    auto sol = solve_capped_mv(prob);
    auto a = unconstrained_shares(prob.delta);
    double es = moments(s).mean;
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(sol.allocation.share(0)[k] - a[0] * s[k] == Approx(sol.allocation.share(0)[0] - a[0] * s[0]));
        CHECK(sol.allocation.share(0)[k] + sol.allocation.share(1)[k] == Approx(s[k]).epsilon(1e-14));
    }
    CHECK(sol.objective == Approx(es + (1 * a[0] * a[0] + 3 * a[1] * a[1]) * moments(s).variance));
    CHECK(is_comonotonic(sol.allocation));
}

TEST_CASE("capped solver on two equally likely states") {
    auto space = FiniteSpace::uniform(2);
    RandomVariable s(space, {0, 2});
    MVProblem prob{{1, 1}, {-inf, -inf}, {0.5, inf}, s};
    auto sol = solve_capped_mv(prob);
    CHECK(sol.allocation.share(0)[1] == Approx(0.5));
    CHECK(sol.allocation.share(0)[0] < 0.5);

    std::vector<Constraint> cap{{0, PathwiseBounds{-inf, 0.5}}};
    auto grid = GridSpec::box(1, 2, -2.0, 2.0, 0.25);
    auto oracle = grid_minimize(s, {MeanVariance{1}, MeanVariance{1}}, cap, grid);
    CHECK(std::abs(sol.objective - oracle.value) < 1e-6);
    CHECK(sol.objective == Approx(1.5).epsilon(1e-10));
}

TEST_CASE("two-agent solver has the clipped affine form") {
    auto space = FiniteSpace::from_probs(std::vector<double>{0.3, 0.3, 0.2, 0.2});
    RandomVariable s(space, {0, 1, 3, 6});
    const double cap = 1.5;
    MVProblem prob{{1, 2}, {0, -inf}, {cap, inf}, s};
    auto sol = solve_capped_mv(prob);
    const double a = unconstrained_shares(prob.delta)[0];
    auto law = distribution_of(s);
    auto [lo, hi] = two_agent_fixed_point(a, cap, law);
    double beta = 0.5 * (lo + hi);
    CHECK(std::abs(two_agent_residual(a, cap, law, beta)) < 1e-9);
    for (std::size_t k = 0; k < 4; ++k) {
        double want = std::min(cap, std::max(0.0, a * s[k] + beta));
        CHECK(sol.allocation.share(0)[k] == Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("capped solver reports infeasibility and non-convergence") {
    auto space = FiniteSpace::uniform(2);
    RandomVariable s(space, {0, 5});
    CHECK_THROWS_AS(solve_capped_mv(MVProblem{{1, 1}, {-inf, -inf}, {1, 1}, s}), InfeasibleError);
    FixedPointOptions tight{0.5, 1e-30, 1};
    CHECK_THROWS_AS(solve_capped_mv(MVProblem{{1, 2}, {0, -inf}, {1, inf}, s}, tight), NonConvergenceError);
}

TEST_CASE("two-agent fixed point") {
    auto law = two_point(0.0, 10.0);
    auto [lo, hi] = two_agent_fixed_point(0.5, 3.0, law);
    CHECK(lo == Approx(-1.0).epsilon(1e-12));
    CHECK(hi == Approx(-1.0).epsilon(1e-12));
    // A 1e-6 scan sees the residual change sign only there.
    double prev = two_agent_residual(0.5, 3.0, law, -5.0), crossing = NAN;
    bool nonincreasing = true;
    int sign_changes = 0;
    for (int k = 1; k <= 10'000'000; ++k) {
        double beta = -5.0 + 1e-6 * k;
        double r = two_agent_residual(0.5, 3.0, law, beta);
        nonincreasing = nonincreasing && r <= prev + 1e-12;
        if (prev > 0 && r <= 0) {
            crossing = beta;
            ++sign_changes;
        }
        prev = r;
    }
    CHECK(nonincreasing);
    CHECK(sign_changes == 1);
    CHECK(std::abs(crossing - (-1.0)) <= 1e-6);

    // A cap that never binds: beta = 0 solves.
    auto wide = two_agent_fixed_point(0.25, 10.0, two_point(1.0, 4.0));
    CHECK(wide.first <= 1e-12);
    CHECK(wide.second >= -1e-12);

    // Degenerate S: every beta keeping a s0 + beta inside [0, C] solves.
    std::vector<Mass> point{{2.0, 1.0}};
    auto flat = two_agent_fixed_point(0.5, 3.0, point);
    CHECK(flat.first == Approx(-1.0));
    CHECK(flat.second == Approx(2.0));
}

TEST_CASE("shadow price at the extreme totals") {
    ShadowPrice floors(std::vector<double>{1.8055653, 1.5152744}, std::vector<double>{3.8265358, 3.6909831},
                       std::vector<double>{-2.0990577, -1.3151418}, std::vector<double>{2.7562979, inf});
    const double s_min = -2.0990577 + -1.3151418;
    double eta = floors.solve(s_min);
    CHECK(std::isfinite(eta));
    CHECK(floors.total(eta) == Approx(s_min).epsilon(1e-13));

    ShadowPrice caps(std::vector<double>{-2.5907254}, std::vector<double>{4.6569804}, std::vector<double>{-inf},
                     std::vector<double>{3.4774022});
    eta = caps.solve(3.4774022);
    CHECK(std::isfinite(eta));
    CHECK(caps.total(eta) == Approx(3.4774022).epsilon(1e-13));
}

TEST_CASE("two-agent fixed point spans a flat interior stretch") {
    const double a = 0.513189, cap = 6.29255;
    std::vector<Mass> law{{1.50744, 0.334361}, {8.56917, 0.665639}};
    auto [lo, hi] = two_agent_fixed_point(a, cap, law);
    CHECK(lo == Approx(-a * 1.50744).epsilon(1e-12));
    CHECK(hi == Approx(cap - a * 8.56917).epsilon(1e-12));
}

TEST_CASE("saturation curve") {
    std::vector<double> delta{2, 3, 5, 6}, caps{5, 8, 3, inf};
    auto curve = saturation_curve(delta, caps);
    REQUIRE(curve.breakpoints.size() == 3);
    CHECK(curve.breakpoints[0] == Approx(12.0).epsilon(1e-15));
    CHECK(curve.breakpoints[1] == Approx(15.5).epsilon(1e-15));
    CHECK(curve.breakpoints[2] == Approx(20.0).epsilon(1e-15));
    CHECK(curve.shares_at(12.0)[0] == Approx(5.0));
    CHECK(curve.shares_at(15.5)[1] == Approx(5.0));
    CHECK(curve.shares_at(20.0)[3] == Approx(4.0));
    CHECK(curve.shares_at(25.5)[3] == Approx(9.5));
    CHECK_FALSE(curve.terminal_level);
    for (const auto& r : curve.regimes) {
        double sum = 0;
        for (double v : r.slopes) sum += v;
        CHECK(sum == Approx(1.0).epsilon(1e-14));
    }

    auto identity = saturation_curve(std::vector<double>{4.0}, std::vector<double>{inf});
    CHECK(identity.breakpoints.empty());
    CHECK(identity.shares_at(7.5)[0] == Approx(7.5));

    auto pair = saturation_curve(std::vector<double>{1, 1}, std::vector<double>{1, inf});
    REQUIRE(pair.breakpoints.size() == 1);
    CHECK(pair.breakpoints[0] == Approx(2.0));
    REQUIRE(pair.regimes.size() == 2);
    CHECK(pair.regimes[0].slopes == std::vector<double>{0.5, 0.5});
    CHECK(pair.regimes[1].slopes == std::vector<double>{0.0, 1.0});

    auto capped = saturation_curve(std::vector<double>{1, 2}, std::vector<double>{1, 3});
    REQUIRE(capped.terminal_level);
    CHECK(*capped.terminal_level == Approx(4.0));
}

TEST_CASE("exact saturation curve in rationals") {
    std::vector<Rational> delta{2, 3, 5, 6};
    std::vector<std::optional<Rational>> caps{Rational(5), Rational(8), Rational(3), std::nullopt};
    auto curve = exact_saturation_curve<Rational>(delta, caps);
    REQUIRE(curve.breakpoints.size() == 3);
    CHECK(curve.breakpoints[0].level == Rational(12));
    CHECK(curve.breakpoints[1].level == Rational(31, 2));
    CHECK(curve.breakpoints[2].level == Rational(20));
    CHECK(curve.slopes[0] == std::vector<Rational>{Rational(5, 12), Rational(5, 18), Rational(1, 6), Rational(5, 36)});
    CHECK(curve.slopes[3] == std::vector<Rational>{0, 0, 0, 1});

    std::vector<double> dd{2, 3, 5, 6}, cc{5, 8, 3, inf};
    auto floating = saturation_curve(dd, cc);
    REQUIRE(floating.regimes.size() == curve.slopes.size());
    for (std::size_t r = 0; r < curve.slopes.size(); ++r)
        for (std::size_t i = 0; i < 4; ++i) {
            auto q = rationalize(floating.regimes[r].slopes[i], 1000);
            REQUIRE(q);
            CHECK(*q == curve.slopes[r][i]);
        }
}

TEST_CASE("gamma rule moments") {
    PiecewiseAffineRule identity{{AffinePiece{0, inf, 0, 1}}};
    auto m = gamma_rule_moments(identity);
    CHECK(m.mean == Approx(2.0).epsilon(1e-13));
    CHECK(m.variance == Approx(2.0).epsilon(1e-13));

    PiecewiseAffineRule rule{{AffinePiece{0, 1, 0.2, 0.5}, AffinePiece{1, 3, 1.0, 0.0}, AffinePiece{3, inf, -2.0, 1.0}}};
    auto closed = gamma_rule_moments(rule);
    auto quad = gamma_rule_moments_quadrature(rule);
    double mean = reference::gamma_expectation(rule, {1, 3});
    double second = reference::gamma_expectation([&](double s) { return rule(s) * rule(s); }, {1, 3});
    CHECK(closed.mean == Approx(mean).epsilon(1e-9));
    CHECK(closed.variance == Approx(second - mean * mean).epsilon(1e-9));
    CHECK(quad.mean == Approx(closed.mean).epsilon(1e-9));
    CHECK(quad.variance == Approx(closed.variance).epsilon(1e-9));

    auto comp = rule.complement();
    for (double s : {0.5, 2.0, 7.0}) CHECK(comp(s) + rule(s) == Approx(s));
}

TEST_CASE("quantile-ceiling scenario") {
    auto r = var_scenario();
    CHECK(r.lambda == Approx(1.0 / 101));
    CHECK(std::abs(r.q - 4.7439) < 1e-3);
    CHECK(r.endowment_var == Approx(-std::log(0.05)));
    CHECK(r.unconstrained == Approx(2.0 + 202.0 / 10201).epsilon(1e-12));
    CHECK(r.unconstrained_closed_form == Approx(2.0 + 202.0 / 10201).epsilon(1e-12));
    CHECK(std::abs(r.autarky - 3.01) <= 1e-12);
    CHECK(r.unconstrained <= r.constrained);
    CHECK(r.constrained < r.comonotone);
    CHECK(r.comonotone <= r.autarky);
    CHECK(r.quadrature_gap < 1e-6);

    // The constrained rule's objective, recomputed by Simpson on the Gamma density.
    const auto& f = r.constrained_agent2;
    std::vector<double> breaks{r.a, r.r, r.q};
    double m2 = reference::gamma_expectation(f, breaks);
    double v2 = reference::gamma_expectation([&](double s) { return f(s) * f(s); }, breaks) - m2 * m2;
    auto g = f.complement();
    double m1 = reference::gamma_expectation(g, breaks);
    double v1 = reference::gamma_expectation([&](double s) { return g(s) * g(s); }, breaks) - m1 * m1;
    CHECK(m1 + m2 + 0.01 * v1 + 1.0 * v2 == Approx(r.constrained).epsilon(1e-7));
    // Agent 1 stays within the ceiling at the quantile and jumps right after.
    CHECK(g(r.q) <= 3.0 + 1e-9);
    CHECK(r.jump_agent1 > 0);
    CHECK(r.jump_agent2 < 0);
    CHECK(r.jump_agent1 + r.jump_agent2 == Approx(0.0).scale(1.0));
}
