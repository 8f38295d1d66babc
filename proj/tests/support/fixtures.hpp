#pragma once

#include "coshare/allocation.hpp"
#include "coshare/constraints.hpp"
#include "coshare/oracle.hpp"
#include "coshare/probspace.hpp"
#include "coshare/riskmeasures.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace coshare::fixtures {

inline RandomVariable rv(const SpacePtr& space, std::vector<double> values) {
    return RandomVariable(space, std::move(values));
}

/// Two fair coins, each agent retaining its own loss below a deductible of 1.
struct RetentionCase {
    SpacePtr space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"z00", 0.25}, {"z01", 0.25}, {"z10", 0.25}, {"z11", 0.25}});
    RandomVariable z1 = rv(space, {0, 0, 1, 1});
    RandomVariable z2 = rv(space, {0, 1, 0, 1});
    std::vector<Constraint> constraints{{0, IdiosyncraticRetention{z1, 1.0}}, {1, IdiosyncraticRetention{z2, 1.0}}};
    Allocation autarky = Allocation::autarky({z1, z2});
};

/// S = 1, 2, 3 equally likely; agent 1 holds 1/4 below the top state and
/// at most 7/4 at the top.
struct StepUpCase {
    SpacePtr space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"s1", 1.0 / 3}, {"s2", 1.0 / 3}, {"s3", 1.0 / 3}});
    RandomVariable s = rv(space, {1, 2, 3});
    std::vector<RiskMeasureSpec> rho{ExpectedShortfall{0.2}, ExpectedShortfall{1.0 / 3}};
    std::vector<Constraint> constraints{
        {0, AggregateEnvelope{PiecewiseLinear{{{1, 0.25}, {3, 0.25}}},
                              PiecewiseLinear{{{1, 0.25}, {2, 0.25}, {3, 1.75}}}}}};
    GridSpec grid = GridSpec::line(AffineFamily{{{0.25, 0.25, 0.0}}, {{0.0, 0.0, 1.0}}, GridAxis{0.25, 1.75, 0.01}});

    Allocation at(double a) const {
        RandomVariable x1 = rv(space, {0.25, 0.25, a});
        return Allocation(s, {x1, s - x1});
    }
};

/// Four atoms with a rare split level {S = 2}; VaR ceilings of 1 at 0.995.
struct QuantileCeilingCase {
    SpacePtr space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"A0", 0.9925}, {"A1a", 0.0025}, {"A1b", 0.0025}, {"A2", 0.0025}});
    RandomVariable s = rv(space, {0, 2, 2, 4});
    std::vector<RiskMeasureSpec> rho{ExpectedShortfall{0.99}, ExpectedShortfall{0.9925}};
    std::vector<Constraint> nonneg{{std::nullopt, PathwiseBounds{0.0, INFINITY}}};
    std::vector<Constraint> constraints = [this] {
        auto c = nonneg;
        c.push_back({std::nullopt, RiskCeiling{ValueAtRisk{0.995}, 1.0}});
        return c;
    }();
    GridSpec grid = GridSpec::box(1, 4, 0.0, 4.0, 0.125);
};

}  // namespace coshare::fixtures
