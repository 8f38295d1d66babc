#include "coshare/riskmeasures.hpp"

#include "coshare/errors.hpp"
#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace coshare {

namespace {

using detail::Overloaded;

void require_level(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError(std::string(who) + ": level must lie in (0,1)");
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

}  // namespace

double ConvexLadder::operator()(double x) const {
    return slope_low * std::max(x - retention, 0.0) +
           (slope_high - slope_low) * std::max(x - retention - width, 0.0);
}

void validate(const RiskMeasureSpec& spec) {
    std::visit(Overloaded{
                   [](const ValueAtRisk& m) { require_level(m.alpha, "VaR"); },
                   [](const ExpectedShortfall& m) { require_level(m.alpha, "ES"); },
                   [](const MeanVariance& m) {
                       if (!(m.delta > 0.0)) throw DomainError("MeanVariance: delta must be positive");
                   },
                   [](const ExpectedConvexLoss& m) {
                       const auto& l = m.ladder;
                       if (!(l.slope_low >= 0.0 && l.slope_low <= l.slope_high))
                           throw DomainError("ExpectedConvexLoss: need 0 <= slope_low <= slope_high");
                       if (!(l.width >= 0.0)) throw DomainError("ExpectedConvexLoss: width must be >= 0");
                   },
               },
               spec);
}

std::string describe(const RiskMeasureSpec& spec) {
    return std::visit(Overloaded{
                          [](const ValueAtRisk& m) { return fmt("VaR(%.12g)", m.alpha); },
                          [](const ExpectedShortfall& m) { return fmt("ES(%.12g)", m.alpha); },
                          [](const MeanVariance& m) { return fmt("MeanVariance(%.12g)", m.delta); },
                          [](const ExpectedConvexLoss& m) {
                              const auto& l = m.ladder;
                              return fmt("ExpectedConvexLoss(%.12g,%.12g,%.12g,%.12g)", l.slope_low,
                                         l.slope_high, l.retention, l.width);
                          },
                      },
                      spec);
}

double var(const RandomVariable& x, double alpha) {
    require_level(alpha, "VaR");
    return quantile(x, alpha);
}

double es(std::span<const Mass> law, double alpha) {
    require_level(alpha, "ES");
    // Walk down from the largest value, taking the top (1 - alpha) mass and
    // splitting the boundary atom.
    const double tail = 1.0 - alpha;
    double remaining = tail;
    double acc = 0.0;
    for (auto it = law.rbegin(); it != law.rend() && remaining > 0.0; ++it) {
        double take = std::min(it->prob, remaining);
        acc += take * it->value;
        remaining -= take;
    }
    // Round-off can leave a sliver of tail mass once every atom is used.
    if (remaining > 0.0) acc += remaining * law.front().value;
    return acc / tail;
}

double es(const RandomVariable& x, double alpha) {
    auto law = distribution_of(x);
    return es(law, alpha);
}

double mean_variance(const RandomVariable& x, double delta) {
    if (!(delta > 0.0)) throw DomainError("MeanVariance: delta must be positive");
    auto m = moments(x);
    return m.mean + delta * m.variance;
}

double expected_convex_loss(const RandomVariable& x, const ConvexLadder& phi) {
    const auto& space = x.domain();
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) sum += space.prob(k) * phi(x[k]);
    return sum;
}

double evaluate(const RiskMeasureSpec& spec, const RandomVariable& x) {
    return std::visit(Overloaded{
                          [&](const ValueAtRisk& m) { return var(x, m.alpha); },
                          [&](const ExpectedShortfall& m) { return es(x, m.alpha); },
                          [&](const MeanVariance& m) { return mean_variance(x, m.delta); },
                          [&](const ExpectedConvexLoss& m) { return expected_convex_loss(x, m.ladder); },
                      },
                      spec);
}

Consistency cx_consistency_flag(const RiskMeasureSpec& spec) {
    return std::holds_alternative<ValueAtRisk>(spec) ? Consistency::NotConsistent : Consistency::Consistent;
}

}  // namespace coshare
