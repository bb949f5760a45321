#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tstatlab/classify.hpp"
#include "tstatlab/distribution.hpp"

namespace tstatlab::io {

using nlohmann::json;

// Shortest round-trippable decimal form; keeps CSV/JSON output byte-stable.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json dist_to_json(const DistributionSpec& d) {
    struct V {
        json operator()(const DistributionSpec::Discrete& x) const {
            json atoms = json::array();
            for (const auto& a : x.atoms) atoms.push_back(json::array({a.point, a.prob}));
            return json{{"kind", "discrete"}, {"atoms", atoms}};
        }
        json operator()(const DistributionSpec::Normal& x) const {
            return json{{"kind", "normal"}, {"mean", x.mean}, {"stddev", x.stddev}};
        }
        json operator()(const DistributionSpec::Cauchy& x) const {
            return json{{"kind", "cauchy"}, {"location", x.location}, {"scale", x.scale}};
        }
        json operator()(const DistributionSpec::Uniform& x) const {
            return json{{"kind", "uniform"}, {"a", x.a}, {"b", x.b}};
        }
        json operator()(const DistributionSpec::Pareto& x) const {
            return json{{"kind", "pareto"}, {"shape", x.shape}, {"scale", x.scale}};
        }
        json operator()(const DistributionSpec::PowerSingularity& x) const {
            return json{{"kind", "power_singularity"},
                        {"center", x.center},
                        {"exponent", x.exponent},
                        {"halfwidth", x.halfwidth}};
        }
        json operator()(const DistributionSpec::Mixture& x) const {
            json comps = json::array();
            for (const auto& c : x.components) comps.push_back(dist_to_json(c));
            return json{{"kind", "mixture"}, {"weights", x.weights}, {"components", comps}};
        }
    };
    return std::visit(V{}, d.value());
}

inline DistributionSpec dist_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw std::invalid_argument("distribution spec: expected an object with a \"kind\" field");
    const std::string kind = j["kind"].get<std::string>();
    auto need = [&](const char* field) -> const json& {
        if (!j.contains(field))
            throw std::invalid_argument("distribution spec (" + kind + "): missing field \"" +
                                        field + "\"");
        return j.at(field);
    };
    if (kind == "discrete") {
        std::vector<Atom> atoms;
        for (const auto& row : need("atoms")) {
            if (!row.is_array() || row.size() != 2)
                throw std::invalid_argument("discrete: each atom must be a [point, prob] pair");
            atoms.push_back({row[0].get<double>(), row[1].get<double>()});
        }
        return DistributionSpec::discrete(std::move(atoms));
    }
    if (kind == "normal")
        return DistributionSpec::normal(need("mean").get<double>(), need("stddev").get<double>());
    if (kind == "cauchy")
        return DistributionSpec::cauchy(need("location").get<double>(), need("scale").get<double>());
    if (kind == "uniform")
        return DistributionSpec::uniform(need("a").get<double>(), need("b").get<double>());
    if (kind == "pareto")
        return DistributionSpec::pareto(need("shape").get<double>(), need("scale").get<double>());
    if (kind == "power_singularity")
        return DistributionSpec::power_singularity(need("center").get<double>(),
                                                   need("exponent").get<double>(),
                                                   need("halfwidth").get<double>());
    if (kind == "mixture") {
        std::vector<double> weights = need("weights").get<std::vector<double>>();
        std::vector<DistributionSpec> comps;
        for (const auto& c : need("components")) comps.push_back(dist_from_json(c));
        return DistributionSpec::mixture(std::move(weights), std::move(comps));
    }
    throw std::invalid_argument("distribution spec: unknown kind \"" + kind + "\"");
}

inline DistributionSpec parse_dist_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open distribution file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
    }
    return dist_from_json(j);
}

inline json verdict_to_json(const ClassificationVerdict& v) {
    json ev = json::array();
    for (const auto& e : v.evidence)
        ev.push_back(json{{"rule", e.rule}, {"statement", e.statement}, {"inputs", e.inputs}});
    json out{{"schema", "tstatlab.classify.v1"},
             {"n", v.n},
             {"r", v.r},
             {"verdict", verdict_name(v.verdict)},
             {"evidence", ev}};
    if (v.verdict == Verdict::indeterminate) {
        out["rStarLow"] = v.r_star_low;
        out["rStarHigh"] = v.r_star_high;
    }
    return out;
}

inline ClassificationVerdict verdict_from_json(const json& j) {
    ClassificationVerdict v;
    v.n = j.at("n").get<int>();
    v.r = j.at("r").get<double>();
    const std::string name = j.at("verdict").get<std::string>();
    if (name == "Finite") v.verdict = Verdict::finite;
    else if (name == "Infinite") v.verdict = Verdict::infinite;
    else if (name == "Indeterminate") v.verdict = Verdict::indeterminate;
    else throw std::invalid_argument("verdict_from_json: unknown verdict " + name);
    if (v.verdict == Verdict::indeterminate) {
        v.r_star_low = j.at("rStarLow").get<double>();
        v.r_star_high = j.at("rStarHigh").get<double>();
    }
    for (const auto& e : j.at("evidence"))
        v.evidence.push_back({e.at("rule").get<std::string>(), e.at("statement").get<std::string>(),
                              e.at("inputs").get<std::string>()});
    return v;
}

// Row-oriented table with fixed column order; serializes to CSV bytes or a
// JSON array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }

    std::string to_csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) os << ',';
            os << columns[i];
        }
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                os << row[i];
            }
            os << '\n';
        }
        return os.str();
    }

    json to_json() const {
        json arr = json::array();
        for (const auto& row : rows) {
            json obj;
            for (std::size_t i = 0; i < columns.size() && i < row.size(); ++i)
                obj[columns[i]] = row[i];
            arr.push_back(obj);
        }
        return arr;
    }
};

// Writes via a temp file plus rename so readers never observe a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open output file: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("failed writing output file: " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace tstatlab::io
