#include "tasks.hpp"

#include "coshare/allocation.hpp"
#include "coshare/constraints.hpp"
#include "coshare/errors.hpp"
#include "coshare/mvsolver.hpp"
#include "coshare/numeric.hpp"
#include "coshare/oracle.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace coshare::cli {

namespace {

class Checks {
public:
    void value(const std::string& name, double computed, double expected, double tol, const std::string& shown) {
        bool pass = std::abs(computed - expected) <= tol;
        add(name, pass,
            Json{{"name", name}, {"expected", shown}, {"computed", num12(computed)}, {"tolerance", num12(tol)},
                 {"pass", pass}});
    }

    void exact(const std::string& name, double computed, Rational expected) {
        std::string shown = std::to_string(expected.numerator()) +
                            (expected.denominator() == 1 ? "" : "/" + std::to_string(expected.denominator()));
        value(name, computed, to_double(expected), 1e-12, shown);
    }

    void flag(const std::string& name, bool computed, bool expected = true) {
        bool pass = computed == expected;
        add(name, pass, Json{{"name", name}, {"expected", expected}, {"computed", computed}, {"pass", pass}});
    }

    bool ok() const { return ok_; }
    Json json() const { return list_; }
    Json mismatches() const { return failed_; }

private:
    void add(const std::string&, bool pass, Json row) {
        if (!pass) {
            ok_ = false;
            failed_.push_back(row);
        }
        list_.push_back(std::move(row));
    }

    bool ok_ = true;
    Json list_ = Json::array();
    Json failed_ = Json::array();
};

std::string curve_csv(const std::vector<std::string>& head, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t c = 0; c < head.size(); ++c) out += (c ? "," : "") + head[c];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + fmt12(r[c]);
        out += "\n";
    }
    return out;
}

Report finish(const std::string& case_id, Json results, const Checks& checks, std::vector<Artifact> artifacts,
              std::optional<AllocationTable> table = {}) {
    Report rep;
    rep.doc = Json{{"schema_version", kSchemaVersion}, {"task", "reproduce"}, {"case", case_id}};
    rep.doc["results"] = std::move(results);
    rep.doc["checks"] = checks.json();
    rep.doc["status"] = checks.ok() ? "match" : "mismatch";
    if (!checks.ok()) rep.doc["mismatches"] = checks.mismatches();
    Json names = Json::array();
    for (const auto& a : artifacts) names.push_back(a.file_name);
    rep.doc["artifacts"] = names;
    rep.artifacts = std::move(artifacts);
    rep.table = std::move(table);
    rep.exit_code = checks.ok() ? kExitOk : kExitMismatch;
    return rep;
}

// Two independent fair coins; each agent retains its own loss below a deductible of 1.
Report ex_3_1(const RunOptions& opt) {
    auto space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"z00", 0.25}, {"z01", 0.25}, {"z10", 0.25}, {"z11", 0.25}});
    RandomVariable z1(space, {0, 0, 1, 1});
    RandomVariable z2(space, {0, 1, 0, 1});
    std::vector<Constraint> cons{{0, IdiosyncraticRetention{z1, 1.0}}, {1, IdiosyncraticRetention{z2, 1.0}}};
    Allocation autarky = Allocation::autarky({z1, z2});

    Checks chk;
    auto verdict = classify_solidity(cons, &autarky.aggregate());
    chk.flag("classification is NotSolid", verdict.status == Solidity::NotSolid);
    FalsifyOptions fo;
    fo.seed = opt.seed.value_or(0);
    auto w = falsify_solidity(cons, autarky, fo);
    chk.flag("witness found", w.has_value());
    Json res{{"classification", to_string(verdict.status)}, {"reason", verdict.reason}};
    std::optional<AllocationTable> table;
    std::vector<Artifact> art;
    if (w) {
        WitnessCheck wc = verify_witness(cons, *w);
        chk.flag("witness: X feasible", wc.x_feasible);
        chk.flag("witness: Y clears S", wc.y_clears);
        chk.flag("witness: Y_i <=cx X_i", wc.convex_order);
        chk.flag("witness: Y infeasible", wc.y_infeasible);
        bool x_is_autarky = true, y_is_half = true;
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t k = 0; k < 4; ++k) {
                x_is_autarky = x_is_autarky && w->feasible.share(i)[k] == autarky.share(i)[k];
                y_is_half = y_is_half && std::abs(w->reduced.share(i)[k] - autarky.aggregate()[k] / 2.0) <= 1e-12;
            }
        chk.flag("witness X is autarky", x_is_autarky);
        chk.flag("witness Y is (S/2, S/2)", y_is_half);
        res["witness_origin"] = w->origin;
        table = AllocationTable::of(w->feasible);
        table->append(w->reduced, "Y_");
        art.push_back({"ex-3.1_witness.csv", table->csv()});
    }
    return finish("ex-3.1", std::move(res), chk, std::move(art), std::move(table));
}

// S = 1, 2, 3 equally likely; X_1 = 1/4 below the top state, step-up to at most 7/4 at S = 3.
Report ex_4_2(const RunOptions& opt) {
    auto space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"s1", 1.0 / 3}, {"s2", 1.0 / 3}, {"s3", 1.0 / 3}});
    RandomVariable s(space, {1, 2, 3});
    std::vector<RiskMeasureSpec> rho{ExpectedShortfall{0.2}, ExpectedShortfall{1.0 / 3}};
    std::vector<Constraint> cons{
        {0, AggregateEnvelope{PiecewiseLinear{{{1, 0.25}, {3, 0.25}}},
                              PiecewiseLinear{{{1, 0.25}, {2, 0.25}, {3, 1.75}}}}}};
    GridSpec grid = GridSpec::line(AffineFamily{{{0.25, 0.25, 0.0}}, {{0.0, 0.0, 1.0}}, GridAxis{0.25, 1.75, 0.01}});
    OracleOptions oo;
    oo.threads = opt.threads;
    auto best = grid_minimize(s, rho, cons, grid, oo);
    auto como = comonotone_minimize(s, rho, cons, grid, oo);
    auto imp = comonotonic_improvement(best.allocation, ImprovementOptions{1'000'000, rho});
    auto verdict = classify_solidity(cons, &s);

    Checks chk;
    chk.exact("constrained minimum", best.value, Rational(19, 8));
    chk.exact("constrained argmin a", best.parameter.value_or(NAN), Rational(7, 4));
    chk.exact("comonotone minimum", como.value, Rational(29, 12));
    chk.exact("comonotone argmin a", como.parameter.value_or(NAN), Rational(5, 4));
    chk.exact("gap", como.value - best.value, Rational(1, 24));
    chk.exact("improved X_1 at S=1", imp.allocation.share(0)[0], Rational(1, 4));
    chk.exact("improved X_1 at S=2", imp.allocation.share(0)[1], Rational(3, 4));
    chk.exact("improved X_1 at S=3", imp.allocation.share(0)[2], Rational(5, 4));
    chk.flag("improvement certificate verified", imp.certificate.verified());
    chk.flag("improved allocation violates the treaty", !is_feasible(imp.allocation, cons));
    chk.flag("classification is NotSolid", verdict.status == Solidity::NotSolid);

    Json res{{"constrained", Json{{"value", num12(best.value)}, {"a", num12(*best.parameter)}}},
             {"comonotone", Json{{"value", num12(como.value)}, {"a", num12(*como.parameter)}}},
             {"gap", num12(como.value - best.value)},
             {"improved_X_1", nums12(imp.allocation.share(0).values())},
             {"classification", to_string(verdict.status)},
             {"reason", verdict.reason}};

    AllocationTable table = AllocationTable::of(best.allocation);
    table.append(imp.allocation, "Xbar_");
    table.append(como.allocation, "C_");
    std::vector<std::vector<double>> curve;
    for (std::size_t k = 0; k <= 150; ++k) {
        double a = grid.family->parameter.value(k);
        RandomVariable x1(space, {0.25, 0.25, a});
        Allocation alloc(s, {x1, s - x1});
        curve.push_back({a, alloc.total_risk(rho), is_comonotonic(alloc) ? 1.0 : 0.0});
    }
    std::vector<Artifact> art{{"ex-4.2_allocations.csv", table.csv()},
                              {"ex-4.2_total_risk.csv", curve_csv({"a", "total_risk", "comonotonic"}, curve)}};
    return finish("ex-4.2", std::move(res), chk, std::move(art), std::move(table));
}

// Four atoms, VaR_0.995 ceilings of 1 and nonnegative shares.
Report ex_4_3(const RunOptions& opt) {
    auto space = std::make_shared<const FiniteSpace>(
        std::vector<Atom>{{"A0", 0.9925}, {"A1a", 0.0025}, {"A1b", 0.0025}, {"A2", 0.0025}});
    RandomVariable s(space, {0, 2, 2, 4});
    std::vector<RiskMeasureSpec> rho{ExpectedShortfall{0.99}, ExpectedShortfall{0.9925}};
    std::vector<Constraint> nonneg{{std::nullopt, PathwiseBounds{0.0, INFINITY}}};
    std::vector<Constraint> cons = nonneg;
    cons.push_back({std::nullopt, RiskCeiling{ValueAtRisk{0.995}, 1.0}});
    GridSpec grid = GridSpec::box(1, 4, 0.0, 4.0, 0.125);
    OracleOptions oo;
    oo.threads = opt.threads;
    auto free = grid_minimize(s, rho, nonneg, grid, oo);
    auto best = grid_minimize(s, rho, cons, grid, oo);
    auto como = comonotone_minimize(s, rho, cons, grid, oo);
    auto verdict = check_comonotonic(best.allocation);

    Checks chk;
    chk.exact("unconstrained minimum", free.value, Rational(2));
    chk.exact("constrained minimum", best.value, Rational(25, 12));
    chk.exact("comonotone minimum", como.value, Rational(9, 4));
    const auto& x1 = best.allocation.share(0);
    chk.exact("constrained X_1 on A1a", x1[1], Rational(1));
    chk.exact("constrained X_1 on A1b", x1[2], Rational(2));
    chk.exact("constrained X_1 on A2", x1[3], Rational(4));
    chk.flag("constrained optimum is comonotonic", verdict.comonotonic, false);
    chk.flag("split level set is {S=2}", !verdict.measurable && verdict.level && *verdict.level == 2.0);

    Json res{{"unconstrained", num12(free.value)},
             {"constrained", num12(best.value)},
             {"comonotone", num12(como.value)},
             {"constrained_X_1", nums12(x1.values())},
             {"comonotone_X_1", nums12(como.allocation.share(0).values())},
             {"comonotonicity_of_constrained", verdict.reason}};
    AllocationTable table = AllocationTable::of(free.allocation, "U_");
    table.append(best.allocation, "C_");
    table.append(como.allocation, "M_");
    std::vector<Artifact> art{{"ex-4.3_minimizers.csv", table.csv()}};
    Json diag{{"grid_points", best.grid_points}, {"feasible_points", best.feasible_points}};
    res["grid"] = diag;
    return finish("ex-4.3", std::move(res), chk, std::move(art), std::move(table));
}

// Four agents with tolerances 2, 3, 5, 6 and caps 5, 8, 3, none.
Report fig_6_3(const RunOptions&) {
    std::vector<double> delta{2, 3, 5, 6};
    std::vector<double> caps{5, 8, 3, INFINITY};
    RegimeReport curve = saturation_curve(delta, caps);
    std::vector<Rational> delta_q{2, 3, 5, 6};
    std::vector<std::optional<Rational>> caps_q{Rational(5), Rational(8), Rational(3), std::nullopt};
    auto exact = exact_saturation_curve<Rational>(delta_q, caps_q);

    Checks chk;
    const std::vector<Rational> expected{Rational(12), Rational(31, 2), Rational(20)};
    chk.flag("three exact breakpoints", exact.breakpoints.size() == 3);
    chk.flag("three floating breakpoints", curve.breakpoints.size() == 3);
    for (std::size_t j = 0; j < expected.size(); ++j) {
        bool same = j < exact.breakpoints.size() && exact.breakpoints[j].level == expected[j];
        chk.flag("exact breakpoint " + std::to_string(j + 1) + " equals " + std::to_string(expected[j].numerator()) +
                     (expected[j].denominator() == 1 ? "" : "/" + std::to_string(expected[j].denominator())),
                 same);
        if (j < curve.breakpoints.size())
            chk.exact("breakpoint " + std::to_string(j + 1), curve.breakpoints[j], expected[j]);
    }
    chk.exact("agent 1 at s=12", curve.shares_at(12.0)[0], Rational(5));
    chk.exact("agent 2 at s=15.5", curve.shares_at(15.5)[1], Rational(5));
    chk.exact("agent 4 at s=20", curve.shares_at(20.0)[3], Rational(4));
    chk.exact("agent 4 at s=25.5", curve.shares_at(25.5)[3], Rational(19, 2));

    Json bps = Json::array();
    for (const auto& b : exact.breakpoints) {
        Json who = Json::array();
        for (std::size_t i : b.saturating) who.push_back(i + 1);
        bps.push_back(Json{{"level", std::to_string(b.level.numerator()) + "/" + std::to_string(b.level.denominator())},
                           {"saturating", who}});
    }
    Json res{{"breakpoints_exact", bps}, {"regime_report", regime_json(curve)}};

    std::vector<std::vector<double>> rows;
    for (int k = 0; k <= 120; ++k) {
        double s = 0.25 * k;
        auto x = curve.shares_at(s);
        rows.push_back({s, x[0], x[1], x[2], x[3]});
    }
    std::vector<Artifact> art{{"fig-6.3_curve.csv", curve_csv({"s", "X_1", "X_2", "X_3", "X_4"}, rows)}};
    return finish("fig-6.3", std::move(res), chk, std::move(art));
}

Report sec_6_4(const RunOptions&) {
    VarScenarioReport r = var_scenario();
    Checks chk;
    chk.value("q", r.q, 4.7439, 1e-3, "4.7439");
    chk.value("unconstrained value", r.unconstrained, 2.0198, 1e-4, "2.0198");
    chk.value("unconstrained value vs closed form", r.unconstrained, 2.0 + 202.0 / 10201.0, 1e-10, "2 + 202/10201");
    chk.value("autarky value", r.autarky, 3.01, 1e-12, "3.01");
    chk.value("constrained value", r.constrained, 2.0517, 5e-3, "2.0517");
    chk.value("m*", r.m_star, 0.6337, 5e-3, "0.6337");
    chk.value("a", r.a, 0.6400, 5e-3, "0.6400");
    chk.value("r", r.r, 3.6700, 5e-3, "3.6700");
    chk.value("comonotone value", r.comonotone, 2.0972, 1e-2, "2.0972");
    chk.flag("2.0198 < constrained", 2.0198 < r.constrained);
    chk.flag("constrained < comonotone", r.constrained < r.comonotone);
    chk.flag("comonotone < 3.01", r.comonotone < 3.01);
    const auto x2 = r.constrained_agent2;
    const auto x1 = x2.complement();
    chk.flag("witness: X_1 rises across q", x1(r.witness.second) > x1(r.witness.first));
    chk.flag("witness: X_2 falls across q", x2(r.witness.second) < x2(r.witness.first));

    Json res{{"lambda", num12(r.lambda)},
             {"q", num12(r.q)},
             {"m_star", num12(r.m_star)},
             {"a", num12(r.a)},
             {"r", num12(r.r)},
             {"values",
              Json{{"unconstrained", num12(r.unconstrained)},
                   {"constrained", num12(r.constrained)},
                   {"comonotone", num12(r.comonotone)},
                   {"autarky", num12(r.autarky)}}},
             {"jumps_at_q", Json{{"X_1", num12(r.jump_agent1)}, {"X_2", num12(r.jump_agent2)}}},
             {"witness", Json{{"s", num12(r.witness.first)}, {"s_prime", num12(r.witness.second)}}},
             {"comonotone_rule",
              Json{{"slope", num12(r.comonotone_params.slope)},
                   {"intercept", num12(r.comonotone_params.intercept)},
                   {"cap", num12(r.comonotone_params.cap)},
                   {"tail_slope", num12(r.comonotone_params.tail_slope)}}},
             {"quadrature_gap", num12(r.quadrature_gap)}};

    std::vector<double> grid;
    for (int k = 0; k <= 800; ++k) grid.push_back(0.01 * k);
    grid.push_back(r.q);
    std::sort(grid.begin(), grid.end());
    const auto c1 = r.comonotone_agent1;
    std::vector<std::vector<double>> rows;
    for (double s : grid)
        rows.push_back({s, x1(s), x2(s), c1(s), s - c1(s), (1.0 - r.lambda) * s, r.lambda * s});
    std::vector<Artifact> art{
        {"sec-6.4_rules.csv", curve_csv({"s", "X_1", "X_2", "comonotone_X_1", "comonotone_X_2", "proportional_X_1",
                                         "proportional_X_2"},
                                        rows)}};
    return finish("sec-6.4", std::move(res), chk, std::move(art));
}

}  // namespace

const std::vector<std::string>& reproduce_cases() {
    static const std::vector<std::string> cases{"ex-3.1", "ex-4.2", "ex-4.3", "fig-6.3", "sec-6.4"};
    return cases;
}

Report reproduce(const std::string& case_id, const RunOptions& options) {
    static const std::map<std::string, std::function<Report(const RunOptions&)>> table{
        {"ex-3.1", ex_3_1}, {"ex-4.2", ex_4_2}, {"ex-4.3", ex_4_3}, {"fig-6.3", fig_6_3}, {"sec-6.4", sec_6_4}};
    auto it = table.find(case_id);
    if (it == table.end()) throw ContractError("unknown reproduction case \"" + case_id + "\"");
    return it->second(options);
}

}  // namespace coshare::cli
