#pragma once

#include "coshare/allocation.hpp"
#include "coshare/mvsolver.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace coshare::cli {

using Json = nlohmann::ordered_json;

enum class Format { Json, Csv, Text };

Format parse_format(const std::string& name);

/// Rounds to 12 significant digits, so emitted numbers are stable across
/// platforms whose last-bit arithmetic differs.
double round12(double v);
std::string fmt12(double v);
/// round12 as a JSON value; infinities become "inf" / "-inf".
Json num12(double v);
Json nums12(std::span<const double> v);

/// Per-atom view of one or more allocations.
struct AllocationTable {
    std::vector<std::string> atoms;
    std::vector<double> probs;
    std::vector<double> aggregate;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  ///< [column][atom]

    static AllocationTable of(const Allocation& a, const std::string& prefix = "X_");
    void append(const Allocation& a, const std::string& prefix);

    std::string csv() const;
    Json json() const;
};

struct Artifact {
    std::string file_name;
    std::string content;
};

struct Report {
    Json doc;
    std::optional<AllocationTable> table;
    std::vector<Artifact> artifacts;
    int exit_code = 0;
};

Json regime_json(const RegimeReport& r);

std::string emit_report(const Report& report, Format format);

}  // namespace coshare::cli
