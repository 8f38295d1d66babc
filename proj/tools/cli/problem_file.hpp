#pragma once

#include "coshare/constraints.hpp"
#include "coshare/oracle.hpp"
#include "coshare/probspace.hpp"
#include "coshare/riskmeasures.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace coshare::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// All schema violations found in one pass.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Deductible on an endowment, referenced by index or given per atom.
struct RetentionDoc {
    std::optional<std::size_t> endowment_index;
    std::vector<double> endowment_values;
    double deductible = 0.0;

    friend bool operator==(const RetentionDoc&, const RetentionDoc&) = default;
};

using ConstraintDocKind = std::variant<PathwiseBounds, ExpectationConstraint, OrliczBound, RiskCeiling, RiskFloor,
                                       RetentionDoc, AggregateEnvelope>;

struct ConstraintDoc {
    std::optional<std::size_t> agent;  ///< zero-based
    ConstraintDocKind kind;

    friend bool operator==(const ConstraintDoc&, const ConstraintDoc&) = default;
};

struct SolveMVParams {
    double damping = 0.5;
    double tol = 1e-10;
    std::size_t max_iterations = 10'000;

    friend bool operator==(const SolveMVParams&, const SolveMVParams&) = default;
};

struct ImproveParams {
    std::size_t max_transfers = 1'000'000;

    friend bool operator==(const ImproveParams&, const ImproveParams&) = default;
};

struct OracleParams {
    GridSpec grid;
    bool comonotone = true;

    friend bool operator==(const OracleParams&, const OracleParams&) = default;
};

struct SolidityParams {
    std::size_t budget = 10'000;
    std::uint64_t seed = 0;

    friend bool operator==(const SolidityParams&, const SolidityParams&) = default;
};

struct ReproduceParams {
    std::string case_id;

    friend bool operator==(const ReproduceParams&, const ReproduceParams&) = default;
};

using TaskParams = std::variant<SolveMVParams, ImproveParams, OracleParams, SolidityParams, ReproduceParams>;

struct ProblemFile {
    int schema_version = kSchemaVersion;
    std::vector<Atom> atoms;
    std::optional<std::size_t> gamma_atoms;  ///< discretised Gamma(2,1) aggregate instead of atoms
    std::vector<std::vector<double>> endowments;
    std::optional<std::vector<double>> aggregate;
    std::vector<RiskMeasureSpec> agents;
    std::vector<ConstraintDoc> constraints;
    std::optional<std::vector<std::vector<double>>> allocation;
    TaskParams task;

    friend bool operator==(const ProblemFile&, const ProblemFile&) = default;
};

std::string task_name(const TaskParams& task);

/// Reads a number given as a JSON number or a string: "inf", "-inf", an
/// exact "p/q" rational, or a decimal literal.
std::optional<double> parse_number(const Json& j);

ProblemFile parse_problem(const Json& doc);
ProblemFile parse_problem_file(const std::string& path);

/// Canonical JSON form; parse_problem(to_json(p)) == p.
Json to_json(const ProblemFile& p);

/// Core objects built from a parsed file.
struct Instance {
    SpacePtr space;
    RandomVariable aggregate;
    std::vector<RandomVariable> endowments;
    std::vector<Constraint> constraints;
    std::optional<Allocation> allocation;
};

Instance instantiate(const ProblemFile& p);

}  // namespace coshare::cli
