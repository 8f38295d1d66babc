#include "coshare/errors.hpp"
#include "coshare/riskmeasures.hpp"
#include "coshare/stochorder.hpp"

#include "fixtures.hpp"
#include "reference.hpp"

#include <doctest.h>

#include <cmath>

using namespace coshare;
using doctest::Approx;

namespace {

// Twenty equal strata of Exp(1) with the stratum ends as values, so the 0.95 lower quantile is exact.
RandomVariable exponential_strata() {
    std::vector<double> v;
    for (int k = 1; k <= 20; ++k) v.push_back(k < 20 ? -std::log(1.0 - k / 20.0) : 5.0);
    return RandomVariable(FiniteSpace::uniform(20), v);
}

}  // namespace

TEST_CASE("value at risk") {
    fixtures::QuantileCeilingCase rare;
    auto zeta = rare.s * 0.5;
    CHECK(var(zeta, 0.995) == 1.0);
    CHECK(var(exponential_strata(), 0.95) == Approx(-std::log(0.05)).epsilon(1e-14));
    CHECK(var(RandomVariable::constant(rare.space, 2.5), 0.3) == 2.5);
    CHECK_THROWS_AS(var(zeta, 1.0), DomainError);
}

TEST_CASE("expected shortfall") {
    fixtures::QuantileCeilingCase rare;
    CHECK(es(rare.s, 0.99) == Approx(2.0).epsilon(1e-12));

    fixtures::StepUpCase step;
    RandomVariable x1(step.space, {0.25, 0.25, 1.75});
    CHECK(es(x1, 0.2) == Approx(7.0 / 8).epsilon(1e-14));
    CHECK(es(step.s - x1, 1.0 / 3) == Approx(1.5).epsilon(1e-14));
    CHECK(es(x1, 0.2) + es(step.s - x1, 1.0 / 3) == Approx(19.0 / 8).epsilon(1e-14));

    CHECK(es(RandomVariable::constant(step.space, -1.0), 0.7) == Approx(-1.0));
    CHECK(es(step.s, 1e-9) == Approx(2.0).epsilon(1e-8));
    CHECK(es(step.s, 1.0 - 1e-9) == Approx(3.0).epsilon(1e-8));
    CHECK_THROWS_AS(es(step.s, 0.0), DomainError);
}

TEST_CASE("expected shortfall agrees with the Rockafellar-Uryasev minimum") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 8;
        auto space = reference::random_space(rng, n);
        auto v = reference::random_values(rng, n, -3.0, 5.0);
        RandomVariable x(space, v);
        std::uniform_real_distribution<double> level(0.01, 0.99);
        double alpha = level(rng);
        CHECK(es(x, alpha) == Approx(reference::es(v, space->probs(), alpha)).epsilon(1e-10));
    }
}

TEST_CASE("mean-variance") {
    auto zeta = exponential_strata();
    auto m = moments(zeta);
    CHECK(mean_variance(zeta, 1.0) == Approx(m.mean + m.variance));
    fixtures::StepUpCase step;
    CHECK(mean_variance(step.s, 1.0) == Approx(8.0 / 3).epsilon(1e-14));
    CHECK(mean_variance(RandomVariable::constant(step.space, 4.0), 3.0) == 4.0);
    CHECK_THROWS_AS(validate(MeanVariance{0.0}), DomainError);
    CHECK_THROWS_AS(validate(MeanVariance{-1.0}), DomainError);
}

TEST_CASE("convex ladder") {
    fixtures::StepUpCase step;
    CHECK(expected_convex_loss(step.s, ConvexLadder{0, 0, 0, 0}) == 0.0);
    CHECK(expected_convex_loss(step.s, ConvexLadder{1, 1, 0, 0}) == Approx(2.0));
    CHECK(expected_convex_loss(RandomVariable::constant(step.space, 3.0), ConvexLadder{1, 2, 1, 1}) == Approx(3.0));
    CHECK(ConvexLadder{1, 2, 1, 1}(0.5) == 0.0);
    CHECK(ConvexLadder{1, 2, 1, 1}(1.5) == 0.5);
    CHECK_THROWS_AS(validate(ExpectedConvexLoss{ConvexLadder{2, 1, 0, 0}}), DomainError);
    CHECK_THROWS_AS(validate(ExpectedConvexLoss{ConvexLadder{1, 1, 0, -1}}), DomainError);
}

TEST_CASE("dispatch and consistency flags") {
    fixtures::StepUpCase step;
    CHECK(evaluate(ExpectedShortfall{0.2}, step.s) == es(step.s, 0.2));
    CHECK(evaluate(ValueAtRisk{0.5}, step.s) == 2.0);
    CHECK(evaluate(MeanVariance{2.0}, step.s) == mean_variance(step.s, 2.0));
    CHECK(cx_consistency_flag(ExpectedShortfall{0.99}) == Consistency::Consistent);
    CHECK(cx_consistency_flag(ValueAtRisk{0.995}) == Consistency::NotConsistent);
    CHECK(cx_consistency_flag(MeanVariance{2.0}) == Consistency::Consistent);
    CHECK(cx_consistency_flag(ExpectedConvexLoss{ConvexLadder{1, 2, 0, 1}}) == Consistency::Consistent);
    CHECK_THROWS_AS(validate(ValueAtRisk{1.0}), DomainError);
    CHECK_FALSE(describe(ExpectedShortfall{0.5}).empty());
}

TEST_CASE("VaR is not convex-order consistent") {
    // Y <=cx X while VaR(Y) > VaR(X): the failure the flag records.
    auto space = FiniteSpace::uniform(4);
    RandomVariable x(space, {0, 0, 0, 4});
    RandomVariable y(space, {1, 1, 1, 1});
    CHECK(convex_order_leq(y, x));
    CHECK(var(y, 0.75) > var(x, 0.75));
}
