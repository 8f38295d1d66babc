#include "report.hpp"

#include "coshare/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace coshare::cli {

Format parse_format(const std::string& name) {
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    if (name == "text") return Format::Text;
    throw ContractError("unknown format \"" + name + "\" (json, csv, text)");
}

double round12(double v) {
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt12(double v) {
    if (v == INFINITY) return "inf";
    if (v == -INFINITY) return "-inf";
    if (v == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Json num12(double v) {
    if (v == INFINITY) return "inf";
    if (v == -INFINITY) return "-inf";
    if (std::isnan(v)) return nullptr;
    return round12(v);
}

Json nums12(std::span<const double> v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num12(x));
    return a;
}

AllocationTable AllocationTable::of(const Allocation& a, const std::string& prefix) {
    AllocationTable t;
    const auto& space = a.aggregate().domain();
    for (std::size_t k = 0; k < space.size(); ++k) {
        t.atoms.push_back(space.atom(k).label);
        t.probs.push_back(space.prob(k));
        t.aggregate.push_back(a.aggregate()[k]);
    }
    t.append(a, prefix);
    return t;
}

void AllocationTable::append(const Allocation& a, const std::string& prefix) {
    for (std::size_t i = 0; i < a.agents(); ++i) {
        columns.push_back(prefix + std::to_string(i + 1));
        const auto v = a.share(i).values();
        values.emplace_back(v.begin(), v.end());
    }
}

std::string AllocationTable::csv() const {
    std::string out = "atom,prob,S";
    for (const auto& c : columns) out += "," + c;
    out += "\n";
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        out += atoms[k] + "," + fmt12(probs[k]) + "," + fmt12(aggregate[k]);
        for (const auto& col : values) out += "," + fmt12(col[k]);
        out += "\n";
    }
    return out;
}

Json AllocationTable::json() const {
    Json rows = Json::array();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        Json r;
        r["atom"] = atoms[k];
        r["prob"] = num12(probs[k]);
        r["S"] = num12(aggregate[k]);
        for (std::size_t c = 0; c < columns.size(); ++c) r[columns[c]] = num12(values[c][k]);
        rows.push_back(std::move(r));
    }
    return rows;
}

Json regime_json(const RegimeReport& r) {
    Json j;
    j["breakpoints"] = nums12(r.breakpoints);
    j["intercepts"] = nums12(r.intercepts);
    j["fixed_point_residual"] = num12(r.fixed_point_residual);
    j["terminal_level"] = r.terminal_level ? num12(*r.terminal_level) : Json(nullptr);
    Json regs = Json::array();
    for (const auto& g : r.regimes) {
        Json a = Json::array();
        for (std::size_t i : g.active) a.push_back(i + 1);
        regs.push_back(Json{{"from", num12(g.from)}, {"to", num12(g.to)}, {"active", a}, {"slopes", nums12(g.slopes)}});
    }
    j["regimes"] = std::move(regs);
    return j;
}

namespace {

std::string scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return fmt12(v.get<double>());
    return v.dump();
}

bool is_scalar_array(const Json& v) {
    if (!v.is_array()) return false;
    for (const auto& x : v)
        if (x.is_structured()) return false;
    return true;
}

void flatten_csv(const Json& v, const std::string& path, std::string& out) {
    if (v.is_object()) {
        for (const auto& [k, x] : v.items()) flatten_csv(x, path.empty() ? k : path + "." + k, out);
    } else if (v.is_array()) {
        for (std::size_t k = 0; k < v.size(); ++k) flatten_csv(v[k], path + "[" + std::to_string(k) + "]", out);
    } else {
        std::string s = scalar_text(v);
        if (s.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            s = q + "\"";
        }
        out += path + "," + s + "\n";
    }
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

std::string regime_table(const Json& regimes) {
    std::vector<std::vector<std::string>> rows{{"from", "to", "active", "slopes"}};
    for (const auto& g : regimes) {
        std::string active, slopes;
        for (const auto& a : g["active"]) active += (active.empty() ? "" : " ") + a.dump();
        for (const auto& s : g["slopes"]) slopes += (slopes.empty() ? "" : " ") + scalar_text(s);
        rows.push_back({scalar_text(g["from"]), scalar_text(g["to"]), active.empty() ? "-" : active, slopes});
    }
    std::vector<std::size_t> w(4, 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < 4; ++c) w[c] = std::max(w[c], r[c].size());
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < 4; ++c) line += (c ? "  " : "    ") + pad(r[c], w[c]);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

void render_text(const Json& v, const std::string& indent, std::string& out) {
    for (const auto& [k, x] : v.items()) {
        if (k == "regimes" && x.is_array()) {
            out += indent + "regimes:\n" + regime_table(x);
        } else if (k == "allocation" && x.is_array()) {
            continue;  // rendered as a table below
        } else if (x.is_object()) {
            out += indent + k + ":\n";
            render_text(x, indent + "  ", out);
        } else if (is_scalar_array(x)) {
            std::string line;
            for (const auto& e : x) line += (line.empty() ? "" : ", ") + scalar_text(e);
            out += indent + k + ": [" + line + "]\n";
        } else if (x.is_array()) {
            out += indent + k + ":\n";
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i].is_object()) {
                    out += indent + "  - [" + std::to_string(i) + "]\n";
                    render_text(x[i], indent + "    ", out);
                } else {
                    out += indent + "  - " + scalar_text(x[i]) + "\n";
                }
            }
        } else {
            out += indent + k + ": " + scalar_text(x) + "\n";
        }
    }
}

std::string table_text(const AllocationTable& t) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"atom", "prob", "S"};
    head.insert(head.end(), t.columns.begin(), t.columns.end());
    rows.push_back(head);
    for (std::size_t k = 0; k < t.atoms.size(); ++k) {
        std::vector<std::string> r{t.atoms[k], fmt12(t.probs[k]), fmt12(t.aggregate[k])};
        for (const auto& col : t.values) r.push_back(fmt12(col[k]));
        rows.push_back(std::move(r));
    }
    std::vector<std::size_t> w(head.size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    std::string out = "allocation:\n";
    for (const auto& r : rows) {
        std::string line = "   ";
        for (std::size_t c = 0; c < r.size(); ++c) line += " " + pad(r[c], w[c]);
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

}  // namespace

std::string emit_report(const Report& report, Format format) {
    switch (format) {
    case Format::Json: return report.doc.dump(2) + "\n";
    case Format::Csv: {
        if (report.table) return report.table->csv();
        std::string out = "key,value\n";
        flatten_csv(report.doc, "", out);
        return out;
    }
    case Format::Text: {
        std::string out;
        render_text(report.doc, "", out);
        if (report.table) out += table_text(*report.table);
        return out;
    }
    }
    return {};
}

}  // namespace coshare::cli
