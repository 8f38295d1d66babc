#pragma once

#include "coshare/probspace.hpp"

#include <string>
#include <variant>

namespace coshare {

/// Lower alpha-quantile of the loss.
struct ValueAtRisk {
    double alpha = 0.5;

    friend bool operator==(const ValueAtRisk&, const ValueAtRisk&) = default;
};

/// Average of the worst (1 - alpha) probability mass of the loss.
struct ExpectedShortfall {
    double alpha = 0.5;

    friend bool operator==(const ExpectedShortfall&, const ExpectedShortfall&) = default;
};

/// E[X] + delta * Var(X).
struct MeanVariance {
    double delta = 1.0;

    friend bool operator==(const MeanVariance&, const MeanVariance&) = default;
};

/// phi(x) = slope_low (x - retention)^+ + (slope_high - slope_low)(x - retention - width)^+,
/// a reserve / collateral / fire-sale ladder. Convex and nondecreasing when
/// 0 <= slope_low <= slope_high and width >= 0.
struct ConvexLadder {
    double slope_low = 0.0;
    double slope_high = 0.0;
    double retention = 0.0;
    double width = 0.0;

    double operator()(double x) const;

    friend bool operator==(const ConvexLadder&, const ConvexLadder&) = default;
};

/// E[phi(X)] for a ConvexLadder phi.
struct ExpectedConvexLoss {
    ConvexLadder ladder;

    friend bool operator==(const ExpectedConvexLoss&, const ExpectedConvexLoss&) = default;
};

using RiskMeasureSpec = std::variant<ValueAtRisk, ExpectedShortfall, MeanVariance, ExpectedConvexLoss>;

enum class Consistency { Consistent, NotConsistent };

/// Throws DomainError when a parameter leaves its admissible range.
void validate(const RiskMeasureSpec& spec);
std::string describe(const RiskMeasureSpec& spec);

double var(const RandomVariable& x, double alpha);
double es(const RandomVariable& x, double alpha);
double es(std::span<const Mass> law, double alpha);
double mean_variance(const RandomVariable& x, double delta);
double expected_convex_loss(const RandomVariable& x, const ConvexLadder& phi);

double evaluate(const RiskMeasureSpec& spec, const RandomVariable& x);

/// Whether Y <=cx X implies rho(Y) <= rho(X).
Consistency cx_consistency_flag(const RiskMeasureSpec& spec);

}  // namespace coshare
