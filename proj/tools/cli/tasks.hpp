#pragma once

#include "problem_file.hpp"
#include "report.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace coshare::cli {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitInfeasible = 2, kExitMismatch = 3 };

struct RunOptions {
    std::optional<std::uint64_t> seed;  ///< falsifier seed override
    std::optional<double> tol;          ///< fixed-point / falsifier tolerance override
    unsigned threads = 0;
};

Report run_problem(const ProblemFile& problem, const RunOptions& options = {});

const std::vector<std::string>& reproduce_cases();

/// Runs a canonical case, compares against the reference values and
/// attaches figure-data CSVs. exit_code is kExitMismatch on any failed check.
Report reproduce(const std::string& case_id, const RunOptions& options = {});

}  // namespace coshare::cli
