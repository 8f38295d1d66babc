#pragma once

#include "coshare/probspace.hpp"

#include <cstddef>
#include <vector>

namespace coshare {

inline constexpr double kConvexOrderTolerance = 1e-9;

/// E[(X - t)^+] sampled at the support points of X. Piecewise linear in t
/// with kinks only at those points, so the samples determine the curve.
struct StopLossCurve {
    std::vector<double> breakpoints;
    std::vector<double> values;
};

double stop_loss(const RandomVariable& x, double t);
double stop_loss(std::span<const Mass> law, double t);
StopLossCurve stop_loss_curve(const RandomVariable& x);

/// Y <=cx X: equal means and dominated stop-loss transforms. Compares laws
/// only, so Y and X may live on different spaces. Checking the stop-loss
/// inequality on the union of both supports is exact: between consecutive
/// support points both transforms are affine.
bool convex_order_leq(const RandomVariable& y, const RandomVariable& x,
                      double tol = kConvexOrderTolerance);
bool convex_order_leq(std::span<const Mass> y, std::span<const Mass> x,
                      double tol = kConvexOrderTolerance);

/// Mean-preserving contraction between two atoms: lowers X(from) by `down`
/// and raises X(to) by `up`. Requires p_from * down == p_to * up and
/// X(from) > X(to) with no strict reversal of the two values.
RandomVariable pigou_dalton_transfer(const RandomVariable& x, std::size_t from, std::size_t to,
                                     double down, double up);

}  // namespace coshare
