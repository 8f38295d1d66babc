#include "problem_file.hpp"
#include "report.hpp"
#include "tasks.hpp"

#include "coshare/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace coshare;
using namespace coshare::cli;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

int emit(const Report& rep, const std::string& format, const std::string& output) {
    const std::string text = emit_report(rep, parse_format(format));
    if (output.empty() || output == "-")
        std::cout << text;
    else
        write_text(output, text);
    return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coshare: constrained risk sharing on finite probability spaces"};
    app.require_subcommand(0, 1);

    std::string file, format = "json", output;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    unsigned threads = 0;

    app.add_option("file", file, "Problem file (JSON)");
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("-o,--output", output, "Write the report here instead of stdout");
    app.add_option("--seed", seed, "Seed for the solidity falsifier");
    app.add_option("--tol", tol, "Tolerance override (fixed point, falsifier)");
    app.add_option("--threads", threads, "Oracle worker threads (default: COSHARE_THREADS or all cores)");

    auto* rep_cmd = app.add_subcommand("reproduce", "Re-run a reference case and check its numbers");
    std::string case_id, out_dir = ".";
    rep_cmd->add_option("case", case_id, "Case id")->required()->check(CLI::IsMember(reproduce_cases()));
    rep_cmd->add_option("--out", out_dir, "Directory for figure-data CSV files");
    rep_cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
    rep_cmd->add_option("-o,--output", output, "Write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    RunOptions opts{seed, tol, threads};
    try {
        if (*rep_cmd) {
            Report rep = reproduce(case_id, opts);
            std::filesystem::create_directories(out_dir);
            for (const auto& a : rep.artifacts) write_text(std::filesystem::path(out_dir) / a.file_name, a.content);
            int code = emit(rep, format, output);
            if (code == kExitMismatch) {
                std::cerr << "reproduction mismatch:\n";
                for (const auto& m : rep.doc["mismatches"])
                    std::cerr << "  " << m["name"].get<std::string>() << ": expected " << m["expected"].dump()
                              << ", computed " << m["computed"].dump() << "\n";
            }
            return code;
        }
        if (file.empty()) {
            std::cerr << app.help();
            return kExitError;
        }
        ProblemFile problem = parse_problem_file(file);
        Report rep = run_problem(problem, opts);
        return emit(rep, format, output);
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitError;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (residual " << e.residual() << " after " << e.iterations()
                  << " iterations)\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
