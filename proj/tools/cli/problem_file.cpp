#include "problem_file.hpp"

#include "coshare/errors.hpp"
#include "coshare/numeric.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>

namespace coshare::cli {

namespace {

std::string joined(const std::vector<std::string>& problems) {
    std::string out = "invalid problem file:";
    for (const auto& p : problems) out += "\n  " + p;
    return out;
}

const std::set<std::string> kCases{"ex-3.1", "ex-4.2", "ex-4.3", "fig-6.3", "sec-6.4"};

class Reader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    void keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) return;
        for (const auto& [k, v] : obj.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || k == a;
            if (!ok) fail(path, "unknown key \"" + k + "\"");
        }
    }

    const Json* field(const Json& obj, const char* key, const std::string& path, bool required = true) {
        if (!obj.is_object()) {
            fail(path, "expected an object");
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) fail(path, std::string("missing \"") + key + "\"");
            return nullptr;
        }
        return &*it;
    }

    double number(const Json& j, const std::string& path) {
        auto v = parse_number(j);
        if (!v) {
            fail(path, "expected a number, \"inf\", \"-inf\" or \"p/q\"");
            return 0.0;
        }
        return *v;
    }

    double number_field(const Json& obj, const char* key, const std::string& path, std::optional<double> fallback = {}) {
        const Json* f = field(obj, key, path, !fallback);
        if (!f) return fallback.value_or(0.0);
        return number(*f, path + "." + key);
    }

    std::size_t count(const Json& j, const std::string& path) {
        if (!j.is_number_integer() || j.get<long long>() < 0) {
            fail(path, "expected a nonnegative integer");
            return 0;
        }
        return j.get<std::size_t>();
    }

    std::size_t count_field(const Json& obj, const char* key, const std::string& path, std::optional<std::size_t> fallback = {}) {
        const Json* f = field(obj, key, path, !fallback);
        if (!f) return fallback.value_or(0);
        return count(*f, path + "." + key);
    }

    std::vector<double> vector(const Json& j, const std::string& path) {
        std::vector<double> out;
        if (!j.is_array()) {
            fail(path, "expected an array of numbers");
            return out;
        }
        for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
        return out;
    }

    std::vector<std::vector<double>> matrix(const Json& j, const std::string& path) {
        std::vector<std::vector<double>> out;
        if (!j.is_array()) {
            fail(path, "expected an array of arrays");
            return out;
        }
        for (std::size_t k = 0; k < j.size(); ++k) out.push_back(vector(j[k], path + "[" + std::to_string(k) + "]"));
        return out;
    }

    std::string string_field(const Json& obj, const char* key, const std::string& path) {
        const Json* f = field(obj, key, path);
        if (!f) return {};
        if (!f->is_string()) {
            fail(path + "." + key, "expected a string");
            return {};
        }
        return f->get<std::string>();
    }

    RiskMeasureSpec risk(const Json& j, const std::string& path) {
        std::string type = string_field(j, "type", path);
        RiskMeasureSpec out = ExpectedShortfall{};
        if (type == "VaR") {
            keys(j, path, {"type", "alpha"});
            out = ValueAtRisk{number_field(j, "alpha", path)};
        } else if (type == "ES") {
            keys(j, path, {"type", "alpha"});
            out = ExpectedShortfall{number_field(j, "alpha", path)};
        } else if (type == "MV") {
            keys(j, path, {"type", "delta"});
            out = MeanVariance{number_field(j, "delta", path)};
        } else if (type == "convex_loss") {
            keys(j, path, {"type", "slope_low", "slope_high", "retention", "width"});
            out = ExpectedConvexLoss{ladder(j, path)};
        } else if (!type.empty()) {
            fail(path + ".type", "unknown risk measure \"" + type + "\" (VaR, ES, MV, convex_loss)");
            return out;
        }
        try {
            validate(out);
        } catch (const DomainError& e) {
            fail(path, e.what());
        }
        return out;
    }

    ConvexLadder ladder(const Json& j, const std::string& path) {
        return {number_field(j, "slope_low", path), number_field(j, "slope_high", path),
                number_field(j, "retention", path), number_field(j, "width", path)};
    }

    PiecewiseLinear curve(const Json* j, const std::string& path, double missing) {
        PiecewiseLinear out;
        if (!j) {
            out.points.push_back({0.0, missing});
            return out;
        }
        auto m = matrix(*j, path);
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k].size() != 2) {
                fail(path + "[" + std::to_string(k) + "]", "expected an [s, value] pair");
                continue;
            }
            if (!out.points.empty() && !(m[k][0] > out.points.back().first))
                fail(path + "[" + std::to_string(k) + "]", "breakpoints must increase in s");
            out.points.push_back({m[k][0], m[k][1]});
        }
        if (out.points.empty()) fail(path, "needs at least one breakpoint");
        return out;
    }

    GridAxis axis(const Json& j, const std::string& path) {
        keys(j, path, {"lo", "hi", "step"});
        GridAxis ax{number_field(j, "lo", path), number_field(j, "hi", path), number_field(j, "step", path, 1.0)};
        try {
            (void)ax.points();
        } catch (const ContractError& e) {
            fail(path, e.what());
        }
        return ax;
    }
};

}  // namespace

ParseError::ParseError(std::vector<std::string> problems)
    : std::runtime_error(joined(problems)), problems_(std::move(problems)) {}

std::optional<double> parse_number(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) return std::nullopt;
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (auto slash = s.find('/'); slash != std::string::npos) {
        try {
            std::size_t used_p = 0, used_q = 0;
            long long p = std::stoll(s.substr(0, slash), &used_p);
            long long q = std::stoll(s.substr(slash + 1), &used_q);
            if (used_p != slash || used_q != s.size() - slash - 1 || q == 0) return std::nullopt;
            return to_double(Rational(p, q));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string task_name(const TaskParams& task) {
    switch (task.index()) {
    case 0: return "solve-mv";
    case 1: return "improve";
    case 2: return "oracle";
    case 3: return "check-solidity";
    default: return "reproduce";
    }
}

ProblemFile parse_problem(const Json& doc) {
    Reader rd;
    ProblemFile p;
    if (!doc.is_object()) throw ParseError({"$: expected a JSON object"});
    rd.keys(doc, "$", {"schema_version", "space", "endowments", "aggregate", "agents", "constraints", "allocation",
                       "task", "parameters"});

    if (const Json* v = rd.field(doc, "schema_version", "$")) {
        if (!v->is_number_integer() || v->get<int>() != kSchemaVersion)
            rd.fail("$.schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    }

    const std::string task = doc.contains("task") && doc["task"].is_string() ? doc["task"].get<std::string>() : "";
    if (task.empty()) rd.fail("$.task", "expected one of solve-mv, improve, oracle, check-solidity, reproduce");
    const bool reproduce = task == "reproduce";

    // Space.
    std::size_t atoms = 0;
    if (const Json* sp = rd.field(doc, "space", "$", !reproduce)) {
        rd.keys(*sp, "$.space", {"atoms", "uniform", "gamma"});
        int kinds = int(sp->contains("atoms")) + int(sp->contains("uniform")) + int(sp->contains("gamma"));
        if (kinds != 1) rd.fail("$.space", "give exactly one of \"atoms\", \"uniform\", \"gamma\"");
        if (sp->contains("atoms")) {
            const Json& arr = (*sp)["atoms"];
            if (!arr.is_array() || arr.empty()) rd.fail("$.space.atoms", "expected a nonempty array");
            else
                for (std::size_t k = 0; k < arr.size(); ++k) {
                    std::string path = "$.space.atoms[" + std::to_string(k) + "]";
                    rd.keys(arr[k], path, {"label", "prob"});
                    std::string label = arr[k].is_object() && arr[k].contains("label") ? rd.string_field(arr[k], "label", path)
                                                                                      : "w" + std::to_string(k);
                    p.atoms.push_back({label, rd.number_field(arr[k], "prob", path)});
                }
        } else if (sp->contains("uniform")) {
            std::size_t n = rd.count((*sp)["uniform"], "$.space.uniform");
            if (n == 0) rd.fail("$.space.uniform", "needs at least one atom");
            for (std::size_t k = 0; k < n; ++k) p.atoms.push_back({"w" + std::to_string(k), 1.0 / static_cast<double>(n)});
        } else if (sp->contains("gamma")) {
            const Json& g = (*sp)["gamma"];
            rd.keys(g, "$.space.gamma", {"atoms"});
            std::size_t n = rd.count_field(g, "atoms", "$.space.gamma", 2000);
            if (n < 2) rd.fail("$.space.gamma.atoms", "needs at least two atoms");
            p.gamma_atoms = n;
        }
        atoms = p.gamma_atoms ? *p.gamma_atoms : p.atoms.size();
        if (!p.atoms.empty()) {
            try {
                FiniteSpace check(p.atoms);
            } catch (const std::exception& e) {
                rd.fail("$.space.atoms", e.what());
            }
        }
    }

    // Agents.
    if (const Json* ag = rd.field(doc, "agents", "$", !reproduce)) {
        if (!ag->is_array() || ag->empty()) rd.fail("$.agents", "expected a nonempty array");
        else
            for (std::size_t i = 0; i < ag->size(); ++i) {
                std::string path = "$.agents[" + std::to_string(i) + "]";
                rd.keys((*ag)[i], path, {"risk"});
                if (const Json* r = rd.field((*ag)[i], "risk", path)) p.agents.push_back(rd.risk(*r, path + ".risk"));
            }
    }
    const std::size_t n = p.agents.size();

    auto check_shape = [&](const std::vector<std::vector<double>>& m, const std::string& path) {
        if (m.size() != n) rd.fail(path, "expected one row per agent (" + std::to_string(n) + ")");
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i].size() != atoms)
                rd.fail(path + "[" + std::to_string(i) + "]", "expected one value per atom (" + std::to_string(atoms) + ")");
    };

    if (const Json* e = rd.field(doc, "endowments", "$", false)) {
        p.endowments = rd.matrix(*e, "$.endowments");
        check_shape(p.endowments, "$.endowments");
    }
    if (const Json* s = rd.field(doc, "aggregate", "$", false)) {
        p.aggregate = rd.vector(*s, "$.aggregate");
        if (p.aggregate->size() != atoms) rd.fail("$.aggregate", "expected one value per atom");
    }
    if (!reproduce) {
        if (p.gamma_atoms && (!p.endowments.empty() || p.aggregate))
            rd.fail("$", "a gamma space fixes the aggregate; drop \"endowments\" and \"aggregate\"");
        if (!p.gamma_atoms && p.endowments.empty() == !p.aggregate)
            rd.fail("$", "give exactly one of \"endowments\" and \"aggregate\"");
    }
    if (const Json* a = rd.field(doc, "allocation", "$", false)) {
        p.allocation = rd.matrix(*a, "$.allocation");
        check_shape(*p.allocation, "$.allocation");
    }

    // Constraints.
    if (const Json* cs = rd.field(doc, "constraints", "$", false)) {
        if (!cs->is_array()) rd.fail("$.constraints", "expected an array");
        else
            for (std::size_t c = 0; c < cs->size(); ++c) {
                const Json& j = (*cs)[c];
                std::string path = "$.constraints[" + std::to_string(c) + "]";
                ConstraintDoc cd{std::nullopt, PathwiseBounds{}};
                if (const Json* ag = rd.field(j, "agent", path, false)) {
                    std::size_t k = rd.count(*ag, path + ".agent");
                    if (k < 1 || k > n) rd.fail(path + ".agent", "agent index out of range 1.." + std::to_string(n));
                    else cd.agent = k - 1;
                }
                std::string type = rd.string_field(j, "type", path);
                if (type == "bounds") {
                    rd.keys(j, path, {"agent", "type", "lower", "upper"});
                    PathwiseBounds b{rd.number_field(j, "lower", path, -INFINITY), rd.number_field(j, "upper", path, INFINITY)};
                    if (b.lower > b.upper) rd.fail(path, "lower exceeds upper");
                    cd.kind = b;
                } else if (type == "expectation") {
                    rd.keys(j, path, {"agent", "type", "relation", "bound"});
                    std::string rel = rd.string_field(j, "relation", path);
                    Relation r = Relation::LessEqual;
                    if (rel == "==") r = Relation::Equal;
                    else if (rel == ">=") r = Relation::GreaterEqual;
                    else if (rel != "<=") rd.fail(path + ".relation", "expected \"<=\", \"==\" or \">=\"");
                    cd.kind = ExpectationConstraint{r, rd.number_field(j, "bound", path)};
                } else if (type == "orlicz") {
                    rd.keys(j, path, {"agent", "type", "phi", "bound"});
                    ConvexLadder phi;
                    if (const Json* f = rd.field(j, "phi", path)) {
                        rd.keys(*f, path + ".phi", {"slope_low", "slope_high", "retention", "width"});
                        phi = rd.ladder(*f, path + ".phi");
                    }
                    cd.kind = OrliczBound{phi, rd.number_field(j, "bound", path)};
                } else if (type == "risk_ceiling" || type == "risk_floor") {
                    rd.keys(j, path, {"agent", "type", "risk", "bound"});
                    RiskMeasureSpec m = ExpectedShortfall{};
                    if (const Json* r = rd.field(j, "risk", path)) m = rd.risk(*r, path + ".risk");
                    double bound = rd.number_field(j, "bound", path);
                    if (type == "risk_ceiling") cd.kind = RiskCeiling{m, bound};
                    else cd.kind = RiskFloor{m, bound};
                } else if (type == "retention") {
                    rd.keys(j, path, {"agent", "type", "endowment", "deductible"});
                    RetentionDoc r;
                    r.deductible = rd.number_field(j, "deductible", path);
                    if (const Json* e = rd.field(j, "endowment", path)) {
                        if (e->is_array()) {
                            r.endowment_values = rd.vector(*e, path + ".endowment");
                            if (r.endowment_values.size() != atoms)
                                rd.fail(path + ".endowment", "expected one value per atom");
                        } else {
                            std::size_t k = rd.count(*e, path + ".endowment");
                            if (k < 1 || k > p.endowments.size())
                                rd.fail(path + ".endowment", "endowment index out of range");
                            else r.endowment_index = k - 1;
                        }
                    }
                    cd.kind = r;
                } else if (type == "envelope") {
                    rd.keys(j, path, {"agent", "type", "lower", "upper"});
                    cd.kind = AggregateEnvelope{rd.curve(rd.field(j, "lower", path, false), path + ".lower", -INFINITY),
                                                rd.curve(rd.field(j, "upper", path, false), path + ".upper", INFINITY)};
                } else if (!type.empty()) {
                    rd.fail(path + ".type", "unknown constraint \"" + type +
                                                "\" (bounds, expectation, orlicz, risk_ceiling, risk_floor, retention, envelope)");
                }
                p.constraints.push_back(std::move(cd));
            }
    }

    // Task parameters.
    static const Json kEmpty = Json::object();
    const Json* params = rd.field(doc, "parameters", "$", false);
    const Json& pj = params ? *params : kEmpty;
    if (params && !params->is_object()) rd.fail("$.parameters", "expected an object");
    if (task == "solve-mv") {
        rd.keys(pj, "$.parameters", {"damping", "tol", "max_iterations"});
        SolveMVParams sp;
        sp.damping = rd.number_field(pj, "damping", "$.parameters", sp.damping);
        sp.tol = rd.number_field(pj, "tol", "$.parameters", sp.tol);
        sp.max_iterations = rd.count_field(pj, "max_iterations", "$.parameters", sp.max_iterations);
        for (std::size_t i = 0; i < n; ++i)
            if (!std::holds_alternative<MeanVariance>(p.agents[i]))
                rd.fail("$.agents[" + std::to_string(i) + "].risk", "solve-mv needs an MV risk measure for every agent");
        for (std::size_t c = 0; c < p.constraints.size(); ++c)
            if (!std::holds_alternative<PathwiseBounds>(p.constraints[c].kind))
                rd.fail("$.constraints[" + std::to_string(c) + "]", "solve-mv accepts only \"bounds\" constraints");
        p.task = sp;
    } else if (task == "improve") {
        rd.keys(pj, "$.parameters", {"max_transfers"});
        ImproveParams ip;
        ip.max_transfers = rd.count_field(pj, "max_transfers", "$.parameters", ip.max_transfers);
        if (!p.allocation && p.endowments.empty())
            rd.fail("$", "improve needs an \"allocation\" or \"endowments\" to start from");
        p.task = ip;
    } else if (task == "oracle") {
        rd.keys(pj, "$.parameters", {"grid", "axes", "family", "comonotone"});
        OracleParams op;
        const std::size_t free_agents = n > 0 ? n - 1 : 0;
        int kinds = int(pj.contains("grid")) + int(pj.contains("axes")) + int(pj.contains("family"));
        if (kinds != 1) rd.fail("$.parameters", "give exactly one of \"grid\", \"axes\", \"family\"");
        if (free_agents == 0) rd.fail("$.agents", "the oracle needs at least two agents");
        if (pj.contains("grid")) {
            GridAxis ax = rd.axis(pj["grid"], "$.parameters.grid");
            op.grid.axes.assign(free_agents, std::vector<GridAxis>(atoms, ax));
        } else if (pj.contains("axes")) {
            const Json& ax = pj["axes"];
            if (!ax.is_array() || ax.size() != free_agents)
                rd.fail("$.parameters.axes", "expected one row per free agent (" + std::to_string(free_agents) + ")");
            else
                for (std::size_t i = 0; i < ax.size(); ++i) {
                    std::string path = "$.parameters.axes[" + std::to_string(i) + "]";
                    std::vector<GridAxis> row;
                    if (!ax[i].is_array() || ax[i].size() != atoms) rd.fail(path, "expected one axis per atom");
                    else
                        for (std::size_t k = 0; k < ax[i].size(); ++k)
                            row.push_back(rd.axis(ax[i][k], path + "[" + std::to_string(k) + "]"));
                    op.grid.axes.push_back(std::move(row));
                }
        } else if (pj.contains("family")) {
            const Json& f = pj["family"];
            const std::string path = "$.parameters.family";
            rd.keys(f, path, {"base", "direction", "parameter"});
            AffineFamily fam;
            if (const Json* b = rd.field(f, "base", path)) fam.base = rd.matrix(*b, path + ".base");
            if (const Json* d = rd.field(f, "direction", path)) fam.direction = rd.matrix(*d, path + ".direction");
            if (const Json* t = rd.field(f, "parameter", path)) fam.parameter = rd.axis(*t, path + ".parameter");
            for (const auto* m : {&fam.base, &fam.direction}) {
                if (m->size() != free_agents) rd.fail(path, "base and direction need one row per free agent");
                for (const auto& row : *m)
                    if (row.size() != atoms) rd.fail(path, "base and direction rows need one value per atom");
            }
            op.grid.family = std::move(fam);
        }
        if (const Json* c = rd.field(pj, "comonotone", "$.parameters", false)) {
            if (!c->is_boolean()) rd.fail("$.parameters.comonotone", "expected true or false");
            else op.comonotone = c->get<bool>();
        }
        if (rd.errors.empty() && op.grid.size() > kMaxGridPoints)
            rd.fail("$.parameters", "grid exceeds " + std::to_string(kMaxGridPoints) + " points");
        p.task = op;
    } else if (task == "check-solidity") {
        rd.keys(pj, "$.parameters", {"budget", "seed"});
        SolidityParams sp;
        sp.budget = rd.count_field(pj, "budget", "$.parameters", sp.budget);
        sp.seed = rd.count_field(pj, "seed", "$.parameters", 0);
        p.task = sp;
    } else if (task == "reproduce") {
        rd.keys(pj, "$.parameters", {"case"});
        ReproduceParams rp;
        rp.case_id = rd.string_field(pj, "case", "$.parameters");
        if (!rp.case_id.empty() && !kCases.count(rp.case_id))
            rd.fail("$.parameters.case", "unknown case \"" + rp.case_id + "\"");
        p.task = rp;
    } else if (!task.empty()) {
        rd.fail("$.task", "unknown task \"" + task + "\"");
    }

    if (!rd.errors.empty()) throw ParseError(rd.errors);
    return p;
}

ProblemFile parse_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError({path + ": cannot open file"});
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError({path + ": " + e.what()});
    }
    return parse_problem(doc);
}

namespace {

Json num(double v) {
    if (v == INFINITY) return "inf";
    if (v == -INFINITY) return "-inf";
    return v;
}

Json nums(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

Json rows(const std::vector<std::vector<double>>& m) {
    Json a = Json::array();
    for (const auto& r : m) a.push_back(nums(r));
    return a;
}

Json ladder_json(const ConvexLadder& l) {
    return Json{{"slope_low", num(l.slope_low)},
                {"slope_high", num(l.slope_high)},
                {"retention", num(l.retention)},
                {"width", num(l.width)}};
}

Json risk_json(const RiskMeasureSpec& r) {
    return std::visit(
        [](const auto& m) -> Json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ValueAtRisk>) return Json{{"type", "VaR"}, {"alpha", num(m.alpha)}};
            else if constexpr (std::is_same_v<T, ExpectedShortfall>) return Json{{"type", "ES"}, {"alpha", num(m.alpha)}};
            else if constexpr (std::is_same_v<T, MeanVariance>) return Json{{"type", "MV"}, {"delta", num(m.delta)}};
            else {
                Json j{{"type", "convex_loss"}};
                j.update(ladder_json(m.ladder));
                return j;
            }
        },
        r);
}

Json curve_json(const PiecewiseLinear& c) {
    Json a = Json::array();
    for (const auto& [x, y] : c.points) a.push_back(Json::array({num(x), num(y)}));
    return a;
}

Json axis_json(const GridAxis& a) { return Json{{"lo", num(a.lo)}, {"hi", num(a.hi)}, {"step", num(a.step)}}; }

}  // namespace

Json to_json(const ProblemFile& p) {
    Json j;
    j["schema_version"] = p.schema_version;
    j["task"] = task_name(p.task);
    if (!p.atoms.empty() || p.gamma_atoms) {
        Json space;
        if (p.gamma_atoms) {
            space["gamma"] = Json{{"atoms", *p.gamma_atoms}};
        } else {
            Json atoms = Json::array();
            for (const auto& a : p.atoms) atoms.push_back(Json{{"label", a.label}, {"prob", num(a.prob)}});
            space["atoms"] = std::move(atoms);
        }
        j["space"] = std::move(space);
    }
    if (!p.endowments.empty()) j["endowments"] = rows(p.endowments);
    if (p.aggregate) j["aggregate"] = nums(*p.aggregate);
    if (!p.agents.empty()) {
        Json agents = Json::array();
        for (const auto& r : p.agents) agents.push_back(Json{{"risk", risk_json(r)}});
        j["agents"] = std::move(agents);
    }
    if (!p.constraints.empty()) {
        Json cs = Json::array();
        for (const auto& c : p.constraints) {
            Json cj;
            if (c.agent) cj["agent"] = *c.agent + 1;
            std::visit(
                [&](const auto& k) {
                    using T = std::decay_t<decltype(k)>;
                    if constexpr (std::is_same_v<T, PathwiseBounds>) {
                        cj["type"] = "bounds";
                        cj["lower"] = num(k.lower);
                        cj["upper"] = num(k.upper);
                    } else if constexpr (std::is_same_v<T, ExpectationConstraint>) {
                        cj["type"] = "expectation";
                        cj["relation"] = k.relation == Relation::LessEqual ? "<=" : k.relation == Relation::Equal ? "==" : ">=";
                        cj["bound"] = num(k.bound);
                    } else if constexpr (std::is_same_v<T, OrliczBound>) {
                        cj["type"] = "orlicz";
                        cj["phi"] = ladder_json(k.phi);
                        cj["bound"] = num(k.bound);
                    } else if constexpr (std::is_same_v<T, RiskCeiling> || std::is_same_v<T, RiskFloor>) {
                        cj["type"] = std::is_same_v<T, RiskCeiling> ? "risk_ceiling" : "risk_floor";
                        cj["risk"] = risk_json(k.measure);
                        cj["bound"] = num(k.bound);
                    } else if constexpr (std::is_same_v<T, RetentionDoc>) {
                        cj["type"] = "retention";
                        if (k.endowment_index) cj["endowment"] = *k.endowment_index + 1;
                        else cj["endowment"] = nums(k.endowment_values);
                        cj["deductible"] = num(k.deductible);
                    } else {
                        cj["type"] = "envelope";
                        cj["lower"] = curve_json(k.lower);
                        cj["upper"] = curve_json(k.upper);
                    }
                },
                c.kind);
            cs.push_back(std::move(cj));
        }
        j["constraints"] = std::move(cs);
    }
    if (p.allocation) j["allocation"] = rows(*p.allocation);

    Json params = std::visit(
        [](const auto& t) -> Json {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, SolveMVParams>)
                return Json{{"damping", num(t.damping)}, {"tol", num(t.tol)}, {"max_iterations", t.max_iterations}};
            else if constexpr (std::is_same_v<T, ImproveParams>)
                return Json{{"max_transfers", t.max_transfers}};
            else if constexpr (std::is_same_v<T, OracleParams>) {
                Json o;
                if (t.grid.family) {
                    o["family"] = Json{{"base", rows(t.grid.family->base)},
                                       {"direction", rows(t.grid.family->direction)},
                                       {"parameter", axis_json(t.grid.family->parameter)}};
                } else {
                    Json axes = Json::array();
                    for (const auto& row : t.grid.axes) {
                        Json r = Json::array();
                        for (const auto& ax : row) r.push_back(axis_json(ax));
                        axes.push_back(std::move(r));
                    }
                    o["axes"] = std::move(axes);
                }
                o["comonotone"] = t.comonotone;
                return o;
            } else if constexpr (std::is_same_v<T, SolidityParams>)
                return Json{{"budget", t.budget}, {"seed", t.seed}};
            else
                return Json{{"case", t.case_id}};
        },
        p.task);
    j["parameters"] = std::move(params);
    return j;
}

Instance instantiate(const ProblemFile& p) {
    if (std::holds_alternative<ReproduceParams>(p.task))
        throw ContractError("instantiate: reproduce files carry no instance");
    SpacePtr space;
    std::optional<RandomVariable> aggregate;
    if (p.gamma_atoms) {
        auto [sp, s] = discretize_gamma(GammaAggregate{}, *p.gamma_atoms);
        space = sp;
        aggregate = s;
    } else {
        space = std::make_shared<const FiniteSpace>(p.atoms);
    }
    std::vector<RandomVariable> endowments;
    for (const auto& e : p.endowments) endowments.emplace_back(space, e);
    if (!aggregate) {
        if (p.aggregate) {
            aggregate = RandomVariable(space, *p.aggregate);
        } else {
            RandomVariable s = endowments.front();
            for (std::size_t i = 1; i < endowments.size(); ++i) s = s + endowments[i];
            aggregate = s;
        }
    }

    std::vector<Constraint> constraints;
    for (const auto& c : p.constraints) {
        Constraint out{c.agent, PathwiseBounds{}};
        std::visit(
            [&](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, RetentionDoc>) {
                    RandomVariable e = k.endowment_index ? endowments.at(*k.endowment_index)
                                                         : RandomVariable(space, k.endowment_values);
                    out.kind = IdiosyncraticRetention{std::move(e), k.deductible};
                } else {
                    out.kind = k;
                }
            },
            c.kind);
        constraints.push_back(std::move(out));
    }

    std::optional<Allocation> allocation;
    if (p.allocation) {
        std::vector<RandomVariable> xs;
        for (const auto& row : *p.allocation) xs.emplace_back(space, row);
        allocation = Allocation(*aggregate, std::move(xs));
    }
    return {space, *aggregate, std::move(endowments), std::move(constraints), std::move(allocation)};
}

}  // namespace coshare::cli
