#include "coshare/numeric.hpp"

#include "coshare/errors.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <limits>

namespace coshare {

std::optional<Rational> rationalize(double x, long long max_den, double tol) {
    if (!std::isfinite(x) || max_den < 1) return std::nullopt;
    // Convergents h/k of the continued fraction of x.
    long long h_prev = 1, h = static_cast<long long>(std::floor(x));
    long long k_prev = 0, k = 1;
    double frac = x - std::floor(x);
    std::optional<Rational> best;
    if (std::abs(x - static_cast<double>(h)) <= tol) return Rational(h, 1);
    for (int iter = 0; iter < 64 && frac > 0.0; ++iter) {
        double inv = 1.0 / frac;
        if (inv > 9.0e15) break;
        long long a = static_cast<long long>(std::floor(inv));
        frac = inv - static_cast<double>(a);
        long long k_next = a * k + k_prev;
        if (k_next > max_den || k_next <= 0) break;
        long long h_next = a * h + h_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol) {
            best = Rational(h, k);
            break;
        }
    }
    return best;
}

double stable_sum(std::span<const double> xs) {
    double sum = 0.0;
    double c = 0.0;
    for (double x : xs) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    return sum + c;
}

double bracketed_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw ContractError("bracketed_root: endpoints do not bracket a sign change");
    std::uintmax_t max_iter = 500;
    auto stop = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, max_iter);
    return 0.5 * (a + b);
}

Minimum bracketed_minimum(const std::function<double(double)>& f, double lo, double hi, int bits) {
    std::uintmax_t max_iter = 500;
    auto [x, v] = boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
    return {x, v};
}

}  // namespace coshare
