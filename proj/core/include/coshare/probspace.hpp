#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coshare {

struct Atom {
    std::string label;
    double prob = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// A finite probability space: labelled atoms with strictly positive
/// probabilities summing to one. Immutable once built.
class FiniteSpace {
public:
    static constexpr double kProbTolerance = 1e-12;

    explicit FiniteSpace(std::vector<Atom> atoms);

    /// Convenience: n atoms labelled w0..w{n-1}.
    static std::shared_ptr<const FiniteSpace> from_probs(std::span<const double> probs);
    static std::shared_ptr<const FiniteSpace> uniform(std::size_t n);

    std::size_t size() const noexcept { return atoms_.size(); }
    const Atom& atom(std::size_t k) const { return atoms_.at(k); }
    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    double prob(std::size_t k) const { return atoms_[k].prob; }
    std::vector<double> probs() const;

    /// Index of the atom with this label; throws ContractError if absent.
    std::size_t index_of(const std::string& label) const;

private:
    std::vector<Atom> atoms_;
};

using SpacePtr = std::shared_ptr<const FiniteSpace>;

/// A real value per atom of a FiniteSpace.
class RandomVariable {
public:
    RandomVariable(SpacePtr space, std::vector<double> values);

    static RandomVariable constant(SpacePtr space, double c);

    const SpacePtr& space() const noexcept { return space_; }
    const FiniteSpace& domain() const noexcept { return *space_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }

    bool same_space(const RandomVariable& other) const noexcept { return space_ == other.space_; }

    RandomVariable operator+(const RandomVariable& other) const;
    RandomVariable operator-(const RandomVariable& other) const;
    RandomVariable operator*(double c) const;

private:
    SpacePtr space_;
    std::vector<double> values_;
};

struct Mass {
    double value = 0.0;
    double prob = 0.0;

    friend bool operator==(const Mass&, const Mass&) = default;
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Law of X: values strictly increasing, probabilities of values within
/// 1e-12 of each other merged.
std::vector<Mass> distribution_of(const RandomVariable& x);

/// Lower quantile inf{x : P(X <= x) >= u}. Throws DomainError unless 0 < u < 1.
double quantile(const RandomVariable& x, double u);
double quantile(std::span<const Mass> law, double u);

Moments moments(const RandomVariable& x);
Moments moments(std::span<const Mass> law);

/// Gamma law with shape 2 and rate 1, the sum of two independent Exp(1).
struct GammaAggregate {
    static constexpr double shape = 2.0;
    static constexpr double rate = 1.0;

    double cdf(double q) const;
    double pdf(double s) const;
    double mean() const { return 2.0; }
    double variance() const { return 2.0; }
};

double gamma_quantile(const GammaAggregate& g, double u);

/// n equal-mass strata; atom k sits at the midpoint quantile (k + 1/2) / n.
std::pair<SpacePtr, RandomVariable> discretize_gamma(const GammaAggregate& g, std::size_t n);

struct Refinement {
    SpacePtr space;
    std::vector<std::size_t> parent;  ///< new atom -> original atom

    /// Pushes a variable on the original space onto the refined one.
    RandomVariable push(const RandomVariable& x) const;
};

inline constexpr long long kRefinementDenominatorCap = 1'000'000;

/// Splits every atom into equal-probability pieces. Throws RefinementError
/// if some probability is not a rational with denominator <= the cap, or the
/// common denominator exceeds it.
Refinement equal_weight_refinement(const FiniteSpace& space,
                                   long long denominator_cap = kRefinementDenominatorCap);

}  // namespace coshare
