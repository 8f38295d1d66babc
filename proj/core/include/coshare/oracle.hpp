#pragma once

#include "coshare/allocation.hpp"
#include "coshare/constraints.hpp"
#include "coshare/riskmeasures.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace coshare {

inline constexpr std::size_t kMaxGridPoints = 10'000'000;

/// Evenly spaced values lo, lo + step, ..., hi. (hi - lo) / step must be
/// an integer up to 1e-9; points are formed as ((K - k) lo + k hi) / K so
/// dyadic steps land exactly.
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::size_t points() const;
    double value(std::size_t k) const;

    friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

/// X_i = base_i + t * direction_i for the free agents, t on an axis.
struct AffineFamily {
    std::vector<std::vector<double>> base;       ///< [free agent][atom]
    std::vector<std::vector<double>> direction;  ///< [free agent][atom]
    GridAxis parameter;

    friend bool operator==(const AffineFamily&, const AffineFamily&) = default;
};

/// Grid over the shares of agents 1..n-1; the last agent takes the rest.
/// Either a full per-agent, per-atom product grid or a one-parameter family.
struct GridSpec {
    std::vector<std::vector<GridAxis>> axes;  ///< [free agent][atom]
    std::optional<AffineFamily> family;

    static GridSpec box(std::size_t free_agents, std::size_t atoms, double lo, double hi, double step);
    static GridSpec line(AffineFamily family);

    std::size_t size() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct OracleOptions {
    /// 0: COSHARE_THREADS if set, else the hardware concurrency.
    unsigned threads = 0;
    std::size_t max_points = kMaxGridPoints;
};

struct OracleResult {
    Allocation allocation;
    double value = 0.0;
    std::size_t grid_points = 0;
    std::size_t feasible_points = 0;
    std::size_t best_index = 0;         ///< lexicographic grid position
    std::optional<double> parameter;    ///< family parameter at the optimum
};

/// Exhaustive minimum of sum_i rho_i(X_i) over feasible grid points. Ties
/// (within 1e-12) go to the lexicographically first point, independent of the
/// thread count. Throws InfeasibleError when no grid point is feasible.
OracleResult grid_minimize(const RandomVariable& aggregate, const std::vector<RiskMeasureSpec>& objectives,
                           std::span<const Constraint> constraints, const GridSpec& grid,
                           const OracleOptions& options = {});

/// As grid_minimize, restricted to comonotonic grid points.
OracleResult comonotone_minimize(const RandomVariable& aggregate, const std::vector<RiskMeasureSpec>& objectives,
                                 std::span<const Constraint> constraints, const GridSpec& grid,
                                 const OracleOptions& options = {});

/// Worker count used by the oracle for the given options.
unsigned oracle_threads(const OracleOptions& options);

}  // namespace coshare
