#pragma once

#include <boost/rational.hpp>

#include <functional>
#include <optional>
#include <span>
#include <utility>

namespace coshare {

using Rational = boost::rational<long long>;

/// Best rational approximation with denominator <= max_den (continued
/// fractions); empty unless it lies within tol of x.
std::optional<Rational> rationalize(double x, long long max_den, double tol = 1e-12);

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs);

/// Root of a continuous function on [lo, hi] with f(lo) and f(hi) of
/// opposite sign (or zero). Stops when the bracket is narrower than abs_tol.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      double abs_tol = 1e-12);

struct Minimum {
    double x = 0.0;
    double value = 0.0;
};

/// Brent minimisation of a unimodal function on [lo, hi].
Minimum bracketed_minimum(const std::function<double(double)>& f, double lo, double hi,
                          int bits = 40);

}  // namespace coshare
