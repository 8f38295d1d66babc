#include "coshare/probspace.hpp"

#include "coshare/errors.hpp"
#include "coshare/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace coshare {

namespace {

constexpr double kMergeTolerance = 1e-12;
// Cumulative sums of atom probabilities carry round-off; a quantile level
// within this distance of a cumulative boundary counts as reached.
constexpr double kCumulativeSlack = 1e-12;

}  // namespace

FiniteSpace::FiniteSpace(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ContractError("FiniteSpace: no atoms");
    std::set<std::string> seen;
    std::vector<double> ps;
    ps.reserve(atoms_.size());
    for (const auto& a : atoms_) {
        if (!(a.prob > 0.0) || a.prob > 1.0 || !std::isfinite(a.prob))
            throw ContractError("FiniteSpace: atom '" + a.label + "' has probability outside (0,1]");
        if (!seen.insert(a.label).second)
            throw ContractError("FiniteSpace: duplicate atom label '" + a.label + "'");
        ps.push_back(a.prob);
    }
    double total = stable_sum(ps);
    if (std::abs(total - 1.0) > kProbTolerance)
        throw ContractError("FiniteSpace: probabilities sum to " + std::to_string(total));
}

SpacePtr FiniteSpace::from_probs(std::span<const double> probs) {
    std::vector<Atom> atoms;
    atoms.reserve(probs.size());
    for (std::size_t k = 0; k < probs.size(); ++k) atoms.push_back({"w" + std::to_string(k), probs[k]});
    return std::make_shared<const FiniteSpace>(std::move(atoms));
}

SpacePtr FiniteSpace::uniform(std::size_t n) {
    std::vector<double> probs(n, 1.0 / static_cast<double>(n));
    return from_probs(probs);
}

std::vector<double> FiniteSpace::probs() const {
    std::vector<double> out;
    out.reserve(atoms_.size());
    for (const auto& a : atoms_) out.push_back(a.prob);
    return out;
}

std::size_t FiniteSpace::index_of(const std::string& label) const {
    for (std::size_t k = 0; k < atoms_.size(); ++k)
        if (atoms_[k].label == label) return k;
    throw ContractError("FiniteSpace: no atom labelled '" + label + "'");
}

RandomVariable::RandomVariable(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw ContractError("RandomVariable: null space");
    if (values_.size() != space_->size())
        throw ContractError("RandomVariable: " + std::to_string(values_.size()) + " values for " +
                            std::to_string(space_->size()) + " atoms");
    for (double v : values_)
        if (!std::isfinite(v)) throw ContractError("RandomVariable: non-finite value");
}

RandomVariable RandomVariable::constant(SpacePtr space, double c) {
    std::size_t n = space->size();
    return RandomVariable(std::move(space), std::vector<double>(n, c));
}

RandomVariable RandomVariable::operator+(const RandomVariable& other) const {
    if (!same_space(other)) throw ContractError("RandomVariable: operands live on different spaces");
    std::vector<double> out(values_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += other.values_[k];
    return RandomVariable(space_, std::move(out));
}

RandomVariable RandomVariable::operator-(const RandomVariable& other) const {
    if (!same_space(other)) throw ContractError("RandomVariable: operands live on different spaces");
    std::vector<double> out(values_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= other.values_[k];
    return RandomVariable(space_, std::move(out));
}

RandomVariable RandomVariable::operator*(double c) const {
    std::vector<double> out(values_);
    for (double& v : out) v *= c;
    return RandomVariable(space_, std::move(out));
}

std::vector<Mass> distribution_of(const RandomVariable& x) {
    const auto& space = x.domain();
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    std::vector<Mass> law;
    for (std::size_t k : order) {
        if (!law.empty() && x[k] - law.back().value <= kMergeTolerance)
            law.back().prob += space.prob(k);
        else
            law.push_back({x[k], space.prob(k)});
    }
    return law;
}

double quantile(std::span<const Mass> law, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: level must lie in (0,1)");
    double cum = 0.0;
    for (const auto& m : law) {
        cum += m.prob;
        if (cum >= u - kCumulativeSlack) return m.value;
    }
    return law.back().value;
}

double quantile(const RandomVariable& x, double u) {
    auto law = distribution_of(x);
    return quantile(law, u);
}

namespace {

// Mean clamped into the value range so constants come back exact; the
// corrected two-pass form removes the first-order error of the mean.
template <class Prob, class Value>
Moments weighted_moments(std::size_t n, Prob prob, Value value) {
    double mean = 0.0, lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
        mean += prob(k) * value(k);
        lo = std::min(lo, value(k));
        hi = std::max(hi, value(k));
    }
    mean = std::clamp(mean, lo, hi);
    double sq = 0.0, lin = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = value(k) - mean;
        sq += prob(k) * d * d;
        lin += prob(k) * d;
    }
    return {mean, std::max(0.0, sq - lin * lin)};
}

}  // namespace

Moments moments(std::span<const Mass> law) {
    return weighted_moments(law.size(), [&](std::size_t k) { return law[k].prob; },
                            [&](std::size_t k) { return law[k].value; });
}

Moments moments(const RandomVariable& x) {
    const auto& space = x.domain();
    return weighted_moments(x.size(), [&](std::size_t k) { return space.prob(k); }, [&](std::size_t k) { return x[k]; });
}

double GammaAggregate::cdf(double q) const {
    if (q <= 0.0) return 0.0;
    return -std::expm1(-q) - q * std::exp(-q);
}

double GammaAggregate::pdf(double s) const { return s <= 0.0 ? 0.0 : s * std::exp(-s); }

double gamma_quantile(const GammaAggregate& g, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("gamma_quantile: level must lie in (0,1)");
    double hi = 1.0;
    while (g.cdf(hi) < u) hi *= 2.0;
    return bracketed_root([&](double q) { return g.cdf(q) - u; }, 0.0, hi, 1e-12);
}

std::pair<SpacePtr, RandomVariable> discretize_gamma(const GammaAggregate& g, std::size_t n) {
    if (n < 2) throw DomainError("discretize_gamma: need at least two strata");
    std::vector<Atom> atoms;
    std::vector<double> values;
    atoms.reserve(n);
    values.reserve(n);
    const double p = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        atoms.push_back({"g" + std::to_string(k), p});
        values.push_back(gamma_quantile(g, (static_cast<double>(k) + 0.5) * p));
    }
    auto space = std::make_shared<const FiniteSpace>(std::move(atoms));
    return {space, RandomVariable(space, std::move(values))};
}

RandomVariable Refinement::push(const RandomVariable& x) const {
    std::vector<double> out(parent.size());
    for (std::size_t k = 0; k < parent.size(); ++k) out[k] = x[parent[k]];
    return RandomVariable(space, std::move(out));
}

Refinement equal_weight_refinement(const FiniteSpace& space, long long denominator_cap) {
    std::vector<Rational> ps;
    ps.reserve(space.size());
    long long common = 1;
    for (const auto& a : space.atoms()) {
        auto r = rationalize(a.prob, denominator_cap, 1e-12);
        if (!r) throw RefinementError("equal_weight_refinement: probability of '" + a.label +
                                      "' is not a rational with denominator <= cap");
        common = std::lcm(common, r->denominator());
        if (common > denominator_cap)
            throw RefinementError("equal_weight_refinement: common denominator exceeds cap");
        ps.push_back(*r);
    }
    std::vector<long long> counts;
    long long total = 0;
    for (const auto& r : ps) {
        counts.push_back(r.numerator() * (common / r.denominator()));
        total += counts.back();
    }
    if (total != common) throw RefinementError("equal_weight_refinement: rationalized probabilities do not sum to 1");

    std::vector<Atom> atoms;
    std::vector<std::size_t> parent;
    atoms.reserve(static_cast<std::size_t>(common));
    const double p = 1.0 / static_cast<double>(common);
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (long long j = 0; j < counts[k]; ++j) {
            atoms.push_back({space.atom(k).label + "#" + std::to_string(j), p});
            parent.push_back(k);
        }
    }
    return {std::make_shared<const FiniteSpace>(std::move(atoms)), std::move(parent)};
}

}  // namespace coshare
