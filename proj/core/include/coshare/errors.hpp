#pragma once

#include <stdexcept>
#include <string>

namespace coshare {

/// Argument outside the mathematical domain of an operation (u outside (0,1), delta <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A caller-side precondition was violated (mean identity, overshooting transfer, shape mismatch).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// The requested problem has no feasible point.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method stopped without meeting its tolerance.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class RefinementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace coshare
