#pragma once

#include "coshare/errors.hpp"
#include "coshare/probspace.hpp"
#include "coshare/riskmeasures.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace coshare {

inline constexpr double kClearingTolerance = 1e-9;
inline constexpr double kComonotonicTolerance = 1e-9;

/// n shares of an aggregate S on one space. Clearing (sum of shares == S)
/// is checked by check_clearing rather than enforced here, so infeasible
/// candidates can still be represented and diagnosed.
class Allocation {
public:
    Allocation(RandomVariable aggregate, std::vector<RandomVariable> shares);

    /// Each agent keeps its endowment; S is their sum.
    static Allocation autarky(const std::vector<RandomVariable>& endowments);

    const RandomVariable& aggregate() const noexcept { return aggregate_; }
    const std::vector<RandomVariable>& shares() const noexcept { return shares_; }
    const RandomVariable& share(std::size_t i) const { return shares_.at(i); }
    std::size_t agents() const noexcept { return shares_.size(); }
    const SpacePtr& space() const noexcept { return aggregate_.space(); }

    /// Total risk sum_i rho_i(X_i); one measure per agent.
    double total_risk(const std::vector<RiskMeasureSpec>& measures) const;

private:
    RandomVariable aggregate_;
    std::vector<RandomVariable> shares_;
};

/// Level sets {S = s} of the aggregate, ordered by s.
struct AggregateLevel {
    double value = 0.0;
    double prob = 0.0;
    std::vector<std::size_t> atoms;
};

std::vector<AggregateLevel> aggregate_levels(const RandomVariable& aggregate);

struct ClearingCheck {
    bool clears = false;
    double residual = 0.0;
    std::size_t worst_atom = 0;
};

ClearingCheck check_clearing(const Allocation& a, double tol = kClearingTolerance);

struct ComonotonicityVerdict {
    bool comonotonic = false;
    bool measurable = false;  ///< every share constant on every level set of S
    bool monotone = false;    ///< level values nondecreasing in s
    std::optional<std::size_t> agent;
    std::optional<double> level;       ///< offending level (split level set, or lower of a decreasing pair)
    std::optional<double> next_level;  ///< upper level of a decreasing pair
    std::string reason;
};

ComonotonicityVerdict check_comonotonic(const Allocation& a, double tol = kComonotonicTolerance);
bool is_comonotonic(const Allocation& a, double tol = kComonotonicTolerance);

/// Replaces every share by E[X_i | S]. Shares already constant on a level
/// set are copied through unchanged.
Allocation condition_on_aggregate(const Allocation& a);

struct ImprovementCertificate {
    std::vector<bool> convex_order;  ///< improved share <=cx original share, per agent
    bool comonotonic = false;
    double clearing_residual = 0.0;
    std::vector<double> objective_before;  ///< per supplied measure
    std::vector<double> objective_after;
    std::size_t transfers = 0;
    double potential_before = 0.0;  ///< sum_i Var(X_i) after conditioning
    double potential_after = 0.0;

    bool verified() const;
};

struct ImprovementOptions {
    std::size_t max_transfers = 1'000'000;
    /// Per-agent measures whose before/after values go into the certificate.
    std::vector<RiskMeasureSpec> measures;
};

struct Improvement {
    Allocation allocation;
    ImprovementCertificate certificate;
};

class NonterminationError : public NonConvergenceError {
public:
    NonterminationError(const std::string& what, double residual, std::size_t transfers,
                        std::vector<std::vector<double>> level_shares)
        : NonConvergenceError(what, residual, transfers), level_shares_(std::move(level_shares)) {}

    /// Share values per agent per level of S when the cap was hit.
    const std::vector<std::vector<double>>& level_shares() const noexcept { return level_shares_; }

private:
    std::vector<std::vector<double>> level_shares_;
};

/// Comonotonic allocation clearing the same S whose every share is a
/// mean-preserving contraction of the corresponding input share.
///
/// Runs in two phases. Conditioning on S first makes every share a function
/// of the level of S. The transfer phase then repairs monotonicity pairwise:
/// for levels s < s' where agent i has x_i(s) > x_i(s'), the agent j with the
/// largest opposite gap x_j(s') - x_j(s) takes a balanced transfer
/// (i sheds `a` at s and absorbs `b` at s', j does the reverse, with
/// P(s) a = P(s') b). Total transfer t = a + b is
///     min(gap_i (P(s) + P(s')) / max(P(s), P(s')), gap_j),
/// which keeps both agents' new values inside their old ranges (so each
/// step is a convex-order contraction), leaves j without a new violation,
/// and strictly lowers sum_i Var(X_i). On equal weights, a share whose gap is
/// exhausted is swapped across the two levels.
Improvement comonotonic_improvement(const Allocation& a, const ImprovementOptions& options = {});

}  // namespace coshare
