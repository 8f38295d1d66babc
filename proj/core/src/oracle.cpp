#include "coshare/oracle.hpp"

#include "coshare/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace coshare {

namespace {

constexpr std::size_t kChunk = 4096;
constexpr double kTieMargin = 1e-12;

struct Candidate {
    double value = std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    std::size_t feasible = 0;
    bool found = false;
};

class Enumerator {
public:
    Enumerator(const RandomVariable& s, const GridSpec& grid) : s_(s), grid_(grid), atoms_(s.size()) {
        if (grid.family) {
            const auto& f = *grid.family;
            if (f.base.empty() || f.base.size() != f.direction.size())
                throw ContractError("GridSpec: family needs base and direction per free agent");
            free_ = f.base.size();
            for (std::size_t i = 0; i < free_; ++i)
                if (f.base[i].size() != atoms_ || f.direction[i].size() != atoms_)
                    throw ContractError("GridSpec: family vectors must have one entry per atom");
        } else {
            free_ = grid.axes.size();
            if (free_ == 0) throw ContractError("GridSpec: no free agents");
            for (const auto& row : grid.axes) {
                if (row.size() != atoms_) throw ContractError("GridSpec: one axis per atom required");
                for (const auto& ax : row) radix_.push_back(ax.points());
            }
        }
    }

    std::size_t free_agents() const { return free_; }

    /// Fills shares[i][k] for point `index`.
    void fill(std::size_t index, std::vector<std::vector<double>>& shares, double* parameter) const {
        shares.assign(free_ + 1, std::vector<double>(atoms_));
        if (grid_.family) {
            const auto& f = *grid_.family;
            const double t = f.parameter.value(index);
            if (parameter) *parameter = t;
            for (std::size_t i = 0; i < free_; ++i)
                for (std::size_t k = 0; k < atoms_; ++k) shares[i][k] = f.base[i][k] + t * f.direction[i][k];
        } else {
            // Last axis varies fastest.
            std::size_t rem = index;
            for (std::size_t a = radix_.size(); a-- > 0;) {
                std::size_t digit = rem % radix_[a];
                rem /= radix_[a];
                shares[a / atoms_][a % atoms_] = grid_.axes[a / atoms_][a % atoms_].value(digit);
            }
        }
        for (std::size_t k = 0; k < atoms_; ++k) {
            double rest = s_[k];
            for (std::size_t i = 0; i < free_; ++i) rest -= shares[i][k];
            shares[free_][k] = rest;
        }
    }

    Allocation build(const std::vector<std::vector<double>>& shares) const {
        std::vector<RandomVariable> xs;
        xs.reserve(shares.size());
        for (const auto& v : shares) xs.emplace_back(s_.space(), v);
        return Allocation(s_, std::move(xs));
    }

private:
    const RandomVariable& s_;
    const GridSpec& grid_;
    std::size_t atoms_;
    std::size_t free_ = 0;
    std::vector<std::size_t> radix_;
};

OracleResult run(const RandomVariable& aggregate, const std::vector<RiskMeasureSpec>& objectives,
                 std::span<const Constraint> constraints, const GridSpec& grid, const OracleOptions& options,
                 bool comonotone_only) {
    for (const auto& m : objectives) validate(m);
    Enumerator en(aggregate, grid);
    if (objectives.size() != en.free_agents() + 1)
        throw ContractError("oracle: one objective per agent required (free agents + 1)");
    const std::size_t total = grid.size();
    if (total > options.max_points)
        throw ContractError("oracle: grid has " + std::to_string(total) + " points, above the cap of " +
                            std::to_string(options.max_points));

    const std::size_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<Candidate> per_chunk(chunks);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        std::vector<std::vector<double>> shares;
        for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
            Candidate best;
            const std::size_t end = std::min(total, (c + 1) * kChunk);
            for (std::size_t idx = c * kChunk; idx < end; ++idx) {
                en.fill(idx, shares, nullptr);
                Allocation a = en.build(shares);
                if (!is_feasible(a, constraints)) continue;
                if (comonotone_only && !is_comonotonic(a)) continue;
                ++best.feasible;
                double v = a.total_risk(objectives);
                if (!best.found || v < best.value - kTieMargin) {
                    best.value = v;
                    best.index = idx;
                    best.found = true;
                }
            }
            per_chunk[c] = best;
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(oracle_threads(options), static_cast<unsigned>(chunks)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    Candidate best;
    for (const auto& c : per_chunk) {
        best.feasible += c.feasible;
        if (c.found && (!best.found || c.value < best.value - kTieMargin)) {
            best.value = c.value;
            best.index = c.index;
            best.found = true;
        }
    }
    if (!best.found)
        throw InfeasibleError(comonotone_only ? "oracle: no feasible comonotonic grid point"
                                              : "oracle: no feasible grid point");

    std::vector<std::vector<double>> shares;
    double t = 0.0;
    en.fill(best.index, shares, &t);
    OracleResult out{en.build(shares), best.value, total, best.feasible, best.index, std::nullopt};
    if (grid.family) out.parameter = t;
    return out;
}

}  // namespace

std::size_t GridAxis::points() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw ContractError("GridAxis: need finite lo <= hi");
    if (hi == lo) return 1;
    if (!(step > 0.0)) throw ContractError("GridAxis: step must be positive");
    const double ratio = (hi - lo) / step;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw ContractError("GridAxis: range is not a whole number of steps");
    if (k > static_cast<double>(kMaxGridPoints)) throw ContractError("GridAxis: too many points");
    return static_cast<std::size_t>(k) + 1;
}

double GridAxis::value(std::size_t k) const {
    const std::size_t n = points();
    if (n == 1) return lo;
    const double steps = static_cast<double>(n - 1);
    const double kd = static_cast<double>(k);
    return ((steps - kd) * lo + kd * hi) / steps;
}

GridSpec GridSpec::box(std::size_t free_agents, std::size_t atoms, double lo, double hi, double step) {
    GridSpec g;
    g.axes.assign(free_agents, std::vector<GridAxis>(atoms, GridAxis{lo, hi, step}));
    return g;
}

GridSpec GridSpec::line(AffineFamily family) {
    GridSpec g;
    g.family = std::move(family);
    return g;
}

std::size_t GridSpec::size() const {
    if (family) return family->parameter.points();
    std::size_t total = 1;
    for (const auto& row : axes)
        for (const auto& ax : row) {
            std::size_t p = ax.points();
            if (total > kMaxGridPoints * 10 / p) return kMaxGridPoints * 10;
            total *= p;
        }
    return total;
}

unsigned oracle_threads(const OracleOptions& options) {
    if (options.threads > 0) return options.threads;
    if (const char* env = std::getenv("COSHARE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

OracleResult grid_minimize(const RandomVariable& aggregate, const std::vector<RiskMeasureSpec>& objectives,
                           std::span<const Constraint> constraints, const GridSpec& grid,
                           const OracleOptions& options) {
    return run(aggregate, objectives, constraints, grid, options, false);
}

OracleResult comonotone_minimize(const RandomVariable& aggregate, const std::vector<RiskMeasureSpec>& objectives,
                                 std::span<const Constraint> constraints, const GridSpec& grid,
                                 const OracleOptions& options) {
    return run(aggregate, objectives, constraints, grid, options, true);
}

}  // namespace coshare
