#include "tasks.hpp"

#include "coshare/allocation.hpp"
#include "coshare/constraints.hpp"
#include "coshare/errors.hpp"
#include "coshare/mvsolver.hpp"
#include "coshare/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace coshare::cli {

namespace {

Json shares_json(const Allocation& a) {
    Json rows = Json::array();
    for (const auto& x : a.shares()) rows.push_back(nums12(x.values()));
    return rows;
}

Json header(const std::string& task) { return Json{{"schema_version", kSchemaVersion}, {"task", task}}; }

Json feasibility_json(const FeasibilityReport& f) {
    Json v = Json::array();
    for (const auto& viol : f.violations)
        v.push_back(Json{{"constraint", viol.constraint + 1},
                         {"agent", viol.agent + 1},
                         {"atom", viol.atom ? Json(*viol.atom) : Json(nullptr)},
                         {"magnitude", num12(viol.magnitude)},
                         {"message", viol.message}});
    return Json{{"feasible", f.feasible}, {"violations", v}};
}

Json comonotonicity_json(const ComonotonicityVerdict& v) {
    Json j{{"comonotonic", v.comonotonic}, {"measurable", v.measurable}, {"monotone", v.monotone}};
    if (!v.comonotonic) j["reason"] = v.reason;
    return j;
}

Report solve_mv(const ProblemFile& p, const SolveMVParams& params, const RunOptions& opt) {
    Instance inst = instantiate(p);
    const std::size_t n = p.agents.size();
    MVProblem prob{{}, std::vector<double>(n, -INFINITY), std::vector<double>(n, INFINITY), inst.aggregate};
    for (const auto& r : p.agents) prob.delta.push_back(std::get<MeanVariance>(r).delta);
    for (const auto& c : inst.constraints) {
        const auto& b = std::get<PathwiseBounds>(c.kind);
        for (std::size_t i = 0; i < n; ++i) {
            if (c.agent && *c.agent != i) continue;
            prob.lower[i] = std::max(prob.lower[i], b.lower);
            prob.upper[i] = std::min(prob.upper[i], b.upper);
        }
    }
    FixedPointOptions fp{params.damping, opt.tol.value_or(params.tol), params.max_iterations};
    MVSolution sol = solve_capped_mv(prob, fp);

    Report rep;
    rep.doc = header("solve-mv");
    Json res;
    res["objective"] = num12(sol.objective);
    res["shares"] = shares_json(sol.allocation);
    res["comonotonicity"] = comonotonicity_json(check_comonotonic(sol.allocation));
    res["feasibility"] = feasibility_json(check_feasible(sol.allocation, inst.constraints));
    res["regime_report"] = regime_json(sol.regimes);
    rep.doc["results"] = std::move(res);
    rep.doc["diagnostics"] = Json{{"iterations", sol.iterations},
                                  {"fixed_point_residual", num12(sol.regimes.fixed_point_residual)},
                                  {"clearing_residual", num12(check_clearing(sol.allocation).residual)}};
    rep.table = AllocationTable::of(sol.allocation);
    return rep;
}

Report improve(const ProblemFile& p, const ImproveParams& params) {
    Instance inst = instantiate(p);
    Allocation start = inst.allocation ? *inst.allocation : Allocation::autarky(inst.endowments);
    ImprovementOptions io{params.max_transfers, p.agents};
    Improvement imp = comonotonic_improvement(start, io);
    const auto& c = imp.certificate;

    Report rep;
    rep.doc = header("improve");
    Json res;
    res["improved"] = shares_json(imp.allocation);
    Json cx = Json::array();
    for (bool b : c.convex_order) cx.push_back(b);
    res["certificate"] = Json{{"verified", c.verified()},
                              {"convex_order", cx},
                              {"comonotonic", c.comonotonic},
                              {"clearing_residual", num12(c.clearing_residual)},
                              {"objective_before", nums12(c.objective_before)},
                              {"objective_after", nums12(c.objective_after)}};
    if (!inst.constraints.empty()) {
        res["feasibility_before"] = feasibility_json(check_feasible(start, inst.constraints));
        res["feasibility_after"] = feasibility_json(check_feasible(imp.allocation, inst.constraints));
    }
    rep.doc["results"] = std::move(res);
    rep.doc["diagnostics"] = Json{{"transfers", c.transfers},
                                  {"variance_potential_before", num12(c.potential_before)},
                                  {"variance_potential_after", num12(c.potential_after)}};
    rep.table = AllocationTable::of(start);
    rep.table->append(imp.allocation, "Xbar_");
    return rep;
}

Json oracle_json(const OracleResult& r) {
    Json j{{"value", num12(r.value)}, {"shares", shares_json(r.allocation)}};
    if (r.parameter) j["parameter"] = num12(*r.parameter);
    j["comonotonic"] = is_comonotonic(r.allocation);
    return j;
}

Report oracle(const ProblemFile& p, const OracleParams& params, const RunOptions& opt) {
    Instance inst = instantiate(p);
    OracleOptions oo;
    oo.threads = opt.threads;
    OracleResult best = grid_minimize(inst.aggregate, p.agents, inst.constraints, params.grid, oo);

    Report rep;
    rep.doc = header("oracle");
    Json res;
    res["constrained"] = oracle_json(best);
    rep.table = AllocationTable::of(best.allocation);
    std::size_t comono_feasible = 0;
    if (params.comonotone) {
        try {
            OracleResult co = comonotone_minimize(inst.aggregate, p.agents, inst.constraints, params.grid, oo);
            res["comonotone"] = oracle_json(co);
            res["gap"] = num12(co.value - best.value);
            comono_feasible = co.feasible_points;
            rep.table->append(co.allocation, "C_");
        } catch (const InfeasibleError& e) {
            res["comonotone"] = Json{{"value", nullptr}, {"reason", e.what()}};
        }
    }
    rep.doc["results"] = std::move(res);
    rep.doc["diagnostics"] = Json{{"grid_points", best.grid_points},
                                  {"feasible_points", best.feasible_points},
                                  {"comonotone_feasible_points", comono_feasible},
                                  {"threads", oracle_threads(oo)}};
    return rep;
}

Report check_solidity(const ProblemFile& p, const SolidityParams& params, const RunOptions& opt) {
    Instance inst = instantiate(p);
    SolidityVerdict verdict = classify_solidity(inst.constraints, &inst.aggregate);

    Report rep;
    rep.doc = header("check-solidity");
    Json res;
    res["classification"] = Json{{"status", to_string(verdict.status)}, {"reason", verdict.reason}};
    Json per = Json::array();
    for (std::size_t c = 0; c < inst.constraints.size(); ++c) {
        auto v = classify_solidity(std::span(&inst.constraints[c], 1), &inst.aggregate);
        per.push_back(Json{{"constraint", describe(inst.constraints[c])}, {"status", to_string(v.status)}});
    }
    res["constraints"] = std::move(per);

    std::optional<Allocation> seed_alloc = inst.allocation;
    if (!seed_alloc && !inst.endowments.empty()) seed_alloc = Allocation::autarky(inst.endowments);
    Json fal;
    if (!seed_alloc) {
        fal["skipped"] = "no allocation or endowments to start from";
    } else {
        FalsifyOptions fo{params.budget, opt.seed.value_or(params.seed), opt.tol.value_or(kFeasibilityTolerance)};
        try {
            auto w = falsify_solidity(inst.constraints, *seed_alloc, fo);
            if (w) {
                WitnessCheck chk = verify_witness(inst.constraints, *w, fo.tol);
                fal["witness"] = Json{{"origin", w->origin},
                                      {"feasible", shares_json(w->feasible)},
                                      {"reduced", shares_json(w->reduced)},
                                      {"checks",
                                       Json{{"x_feasible", chk.x_feasible},
                                            {"y_clears", chk.y_clears},
                                            {"convex_order", chk.convex_order},
                                            {"y_infeasible", chk.y_infeasible}}}};
                rep.table = AllocationTable::of(w->feasible);
                rep.table->append(w->reduced, "Y_");
            } else {
                fal["witness"] = nullptr;
                fal["note"] = "no witness within the search budget; this does not prove solidity";
            }
            fal["budget"] = fo.budget;
            fal["seed"] = fo.seed;
        } catch (const ContractError& e) {
            fal["skipped"] = e.what();
        }
    }
    res["falsifier"] = std::move(fal);
    rep.doc["results"] = std::move(res);
    return rep;
}

}  // namespace

Report run_problem(const ProblemFile& problem, const RunOptions& options) {
    return std::visit(
        [&](const auto& t) -> Report {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, SolveMVParams>) return solve_mv(problem, t, options);
            else if constexpr (std::is_same_v<T, ImproveParams>) return improve(problem, t);
            else if constexpr (std::is_same_v<T, OracleParams>) return oracle(problem, t, options);
            else if constexpr (std::is_same_v<T, SolidityParams>) return check_solidity(problem, t, options);
            else return reproduce(t.case_id, options);
        },
        problem.task);
}

}  // namespace coshare::cli
