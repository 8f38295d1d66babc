#pragma once

#include "coshare/allocation.hpp"
#include "coshare/probspace.hpp"
#include "coshare/riskmeasures.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace coshare {

inline constexpr double kFeasibilityTolerance = 1e-9;

/// Piecewise-linear function given by breakpoints (x increasing),
/// interpolated linearly between them and extended flat outside.
struct PiecewiseLinear {
    std::vector<std::pair<double, double>> points;

    double operator()(double x) const;

    friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;
};

/// l <= X_i <= u almost surely; either side may be infinite.
struct PathwiseBounds {
    double lower = -INFINITY;
    double upper = INFINITY;

    friend bool operator==(const PathwiseBounds&, const PathwiseBounds&) = default;
};

enum class Relation { LessEqual, Equal, GreaterEqual };

struct ExpectationConstraint {
    Relation relation = Relation::LessEqual;
    double bound = 0.0;

    friend bool operator==(const ExpectationConstraint&, const ExpectationConstraint&) = default;
};

/// E[phi(X_i)] <= bound for a convex ladder phi.
struct OrliczBound {
    ConvexLadder phi;
    double bound = 0.0;

    friend bool operator==(const OrliczBound&, const OrliczBound&) = default;
};

struct RiskCeiling {
    RiskMeasureSpec measure;
    double bound = 0.0;

    friend bool operator==(const RiskCeiling&, const RiskCeiling&) = default;
};

struct RiskFloor {
    RiskMeasureSpec measure;
    double bound = 0.0;

    friend bool operator==(const RiskFloor&, const RiskFloor&) = default;
};

/// X_i = zeta_i on {zeta_i < d} and X_i >= d on {zeta_i >= d}: a deductible
/// written on the agent's own endowment.
struct IdiosyncraticRetention {
    RandomVariable endowment;
    double deductible = 0.0;
};

/// lower(S) <= X_i <= upper(S).
struct AggregateEnvelope {
    PiecewiseLinear lower;
    PiecewiseLinear upper;

    friend bool operator==(const AggregateEnvelope&, const AggregateEnvelope&) = default;
};

using ConstraintKind = std::variant<PathwiseBounds, ExpectationConstraint, OrliczBound, RiskCeiling, RiskFloor,
                                    IdiosyncraticRetention, AggregateEnvelope>;

struct Constraint {
    std::optional<std::size_t> agent;  ///< empty: applies to every agent
    ConstraintKind kind;
};

std::string describe(const Constraint& c);

struct Violation {
    std::size_t constraint = 0;
    std::size_t agent = 0;
    std::optional<std::size_t> atom;
    double magnitude = 0.0;
    std::string message;
};

struct FeasibilityReport {
    bool feasible = true;
    std::vector<Violation> violations;
};

FeasibilityReport check_feasible(const Allocation& a, std::span<const Constraint> constraints,
                                 double tol = kFeasibilityTolerance);

/// Cheap yes/no variant for inner loops.
bool is_feasible(const Allocation& a, std::span<const Constraint> constraints, double tol = kFeasibilityTolerance);

enum class Solidity { Solid, NotSolid, Unknown };

std::string to_string(Solidity s);

/// Meet in the order Solid > Unknown > NotSolid.
Solidity meet(Solidity a, Solidity b);

struct SolidityWitness {
    Allocation feasible;  ///< X
    Allocation reduced;   ///< Y, with Y_i <=cx X_i for every i
    std::string origin;   ///< which search step produced it
};

struct SolidityVerdict {
    Solidity status = Solidity::Solid;
    std::string reason;
    std::optional<SolidityWitness> witness;
};

/// Syntactic classification over the constraint grammar. Solid means every
/// member belongs to a family certified solid; NotSolid means some member is
/// a known failure mode. Envelope slopes are tested against the support of
/// the aggregate when one is supplied.
SolidityVerdict classify_solidity(std::span<const Constraint> constraints,
                                  const RandomVariable* aggregate = nullptr);

struct FalsifyOptions {
    std::size_t budget = 10'000;
    std::uint64_t seed = 0;
    double tol = kFeasibilityTolerance;
};

/// Looks for Y with Y_i <=cx X_i for all i, Y clearing S, Y infeasible,
/// starting from the feasible allocation X. Tries the comonotonic
/// improvement of X, then E[X | S], then seeded random chains of balanced
/// Pigou-Dalton transfers. An empty result is not a proof of solidity.
std::optional<SolidityWitness> falsify_solidity(std::span<const Constraint> constraints, const Allocation& x,
                                                const FalsifyOptions& options = {});

struct WitnessCheck {
    bool x_feasible = false;
    bool y_clears = false;
    bool convex_order = false;
    bool y_infeasible = false;

    bool ok() const { return x_feasible && y_clears && convex_order && y_infeasible; }
};

/// Re-verifies the three defining properties of a witness independently.
WitnessCheck verify_witness(std::span<const Constraint> constraints, const SolidityWitness& w,
                            double tol = kFeasibilityTolerance);

}  // namespace coshare
