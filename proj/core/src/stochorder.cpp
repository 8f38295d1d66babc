#include "coshare/stochorder.hpp"

#include "coshare/errors.hpp"

#include <algorithm>
#include <cmath>

namespace coshare {

double stop_loss(std::span<const Mass> law, double t) {
    double sum = 0.0;
    for (const auto& m : law)
        if (m.value > t) sum += m.prob * (m.value - t);
    return sum;
}

double stop_loss(const RandomVariable& x, double t) {
    const auto& space = x.domain();
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] > t) sum += space.prob(k) * (x[k] - t);
    return sum;
}

StopLossCurve stop_loss_curve(const RandomVariable& x) {
    auto law = distribution_of(x);
    StopLossCurve curve;
    for (const auto& m : law) {
        curve.breakpoints.push_back(m.value);
        curve.values.push_back(stop_loss(law, m.value));
    }
    return curve;
}

bool convex_order_leq(std::span<const Mass> y, std::span<const Mass> x, double tol) {
    if (std::abs(moments(y).mean - moments(x).mean) > tol) return false;
    std::vector<double> grid;
    grid.reserve(y.size() + x.size());
    for (const auto& m : y) grid.push_back(m.value);
    for (const auto& m : x) grid.push_back(m.value);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double t : grid)
        if (stop_loss(y, t) > stop_loss(x, t) + tol) return false;
    return true;
}

bool convex_order_leq(const RandomVariable& y, const RandomVariable& x, double tol) {
    auto ly = distribution_of(y);
    auto lx = distribution_of(x);
    return convex_order_leq(ly, lx, tol);
}

RandomVariable pigou_dalton_transfer(const RandomVariable& x, std::size_t from, std::size_t to,
                                     double down, double up) {
    const auto& space = x.domain();
    if (from >= x.size() || to >= x.size()) throw ContractError("pigou_dalton_transfer: atom out of range");
    if (down < 0.0 || up < 0.0) throw ContractError("pigou_dalton_transfer: negative transfer");
    const double pf = space.prob(from);
    const double pt = space.prob(to);
    if (std::abs(pf * down - pt * up) > 1e-12)
        throw ContractError("pigou_dalton_transfer: transfer is not mean preserving");
    if (down == 0.0 && up == 0.0) return x;
    if (from == to) throw ContractError("pigou_dalton_transfer: atoms must differ");
    const double gap = x[from] - x[to];
    if (!(gap > 0.0)) throw ContractError("pigou_dalton_transfer: mass must move from the higher value");
    const double limit = gap * pt / (pf + pt);
    if (down > limit * (1.0 + 1e-12) + 1e-15)
        throw ContractError("pigou_dalton_transfer: transfer overshoots and reverses the two values");
    std::vector<double> out(x.values().begin(), x.values().end());
    out[from] -= down;
    out[to] += up;
    return RandomVariable(x.space(), std::move(out));
}

}  // namespace coshare
