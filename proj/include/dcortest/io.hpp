#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcortest/distributions.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/simulation.hpp"

namespace dcortest::io {

/// printf-style %.{digits}g rendering.
inline std::string format_number(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV input

struct DataTable {
    std::vector<std::string> names;
    std::vector<Sample> columns;

    const Sample& column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return columns[i];
        }
        throw DataError("no column named '" + name + "'");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Comma-separated values with a header row. Every field must be a finite
/// number; empty fields are rejected as missing values.
inline DataTable read_csv(std::istream& in) {
    DataTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) break;
    }
    if (line_no == 0 || detail::trim(line).empty()) throw DataError("input is empty");
    for (auto& name : detail::split_csv_line(line)) t.names.push_back(detail::trim(name));
    t.columns.resize(t.names.size());

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != t.names.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(t.names.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string f = detail::trim(fields[c]);
            const std::string where = "line " + std::to_string(line_no) + ", column " + std::to_string(c + 1);
            if (f.empty()) throw DataError(where + ": missing value");
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(f.c_str(), &end);
            if (end != f.c_str() + f.size() || errno == ERANGE) {
                throw DataError(where + ": '" + f + "' is not a number");
            }
            if (!std::isfinite(v)) throw DataError(where + ": non-finite value '" + f + "'");
            t.columns[c].push_back(v);
        }
    }
    return t;
}

inline DataTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// JSON configuration

/// A distribution is either a family label ("Ga", "Gamma") using the default
/// parameters, or an object {"family": ..., "params": [...], "weights": [...]}.
inline DistributionSpec distribution_from_json(const nlohmann::json& j) {
    if (j.is_string()) return default_spec(parse_family(j.get<std::string>()));
    if (!j.is_object() || !j.contains("family")) {
        throw ConfigError("distribution must be a family name or an object with a 'family' key");
    }
    const Family f = parse_family(j.at("family").get<std::string>());
    DistributionSpec s = default_spec(f);
    if (j.contains("params")) s.params = j.at("params").get<std::vector<double>>();
    if (j.contains("weights")) s.weights = j.at("weights").get<std::vector<double>>();
    try {
        validate(s);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline nlohmann::json distribution_to_json(const DistributionSpec& s) {
    nlohmann::json j{{"family", std::string(family_name(s.family))}, {"params", s.params}};
    if (!s.weights.empty()) j["weights"] = s.weights;
    return j;
}

/// Settings shared by the `simulate` and `filter` commands. Unset fields fall
/// back to the per-case defaults.
struct SimulationConfig {
    std::optional<int> case_id;
    std::vector<std::string> scenarios;
    std::optional<DistributionSpec> x_dist, y_dist, z_dist;
    std::optional<std::vector<std::size_t>> n_grid;
    std::optional<std::size_t> replications;
    std::optional<double> alpha;
    std::optional<std::size_t> permutations;
    std::optional<std::uint64_t> base_seed;
    std::optional<std::size_t> threads;
};

inline SimulationConfig config_from_json(const nlohmann::json& j) {
    static const char* known[] = {"case",         "scenarios", "x_dist",    "y_dist",  "z_dist",
                                  "n_grid",       "replications", "alpha",  "permutations",
                                  "base_seed",    "threads"};
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw ConfigError("config: unknown key '" + item.key() + "'");
    }
    SimulationConfig c;
    try {
        if (j.contains("case")) c.case_id = j.at("case").get<int>();
        if (j.contains("scenarios")) c.scenarios = j.at("scenarios").get<std::vector<std::string>>();
        if (j.contains("x_dist")) c.x_dist = distribution_from_json(j.at("x_dist"));
        if (j.contains("y_dist")) c.y_dist = distribution_from_json(j.at("y_dist"));
        if (j.contains("z_dist")) c.z_dist = distribution_from_json(j.at("z_dist"));
        if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
        if (j.contains("replications")) c.replications = j.at("replications").get<std::size_t>();
        if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
        if (j.contains("permutations")) c.permutations = j.at("permutations").get<std::size_t>();
        if (j.contains("base_seed")) c.base_seed = j.at("base_seed").get<std::uint64_t>();
        if (j.contains("threads")) c.threads = j.at("threads").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline SimulationConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    try {
        return config_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

/// Fields set in `over` replace those in `base`.
inline SimulationConfig merge(SimulationConfig base, const SimulationConfig& over) {
    if (over.case_id) base.case_id = over.case_id;
    if (!over.scenarios.empty()) base.scenarios = over.scenarios;
    if (over.x_dist) base.x_dist = over.x_dist;
    if (over.y_dist) base.y_dist = over.y_dist;
    if (over.z_dist) base.z_dist = over.z_dist;
    if (over.n_grid) base.n_grid = over.n_grid;
    if (over.replications) base.replications = over.replications;
    if (over.alpha) base.alpha = over.alpha;
    if (over.permutations) base.permutations = over.permutations;
    if (over.base_seed) base.base_seed = over.base_seed;
    if (over.threads) base.threads = over.threads;
    return base;
}

/// Expands a configuration into the scenarios to run. Explicit distributions
/// override every roster entry; `scenarios` filters the roster by label.
inline std::vector<ScenarioSpec> scenarios_from_config(const SimulationConfig& c) {
    if (!c.case_id) throw ConfigError("simulate: a case (1..5) is required");
    std::vector<ScenarioSpec> roster = case_scenarios(*c.case_id);
    std::vector<ScenarioSpec> out;
    for (auto& s : roster) {
        if (!c.scenarios.empty()) {
            bool wanted = false;
            for (const auto& l : c.scenarios) wanted = wanted || l == scenario_label(s);
            if (!wanted) continue;
        }
        out.push_back(std::move(s));
    }
    if (!c.scenarios.empty() && out.size() != c.scenarios.size()) {
        throw ConfigError("simulate: unknown scenario label for case " + std::to_string(*c.case_id));
    }
    const bool explicit_dists = c.x_dist || c.y_dist || c.z_dist;
    if (explicit_dists && c.scenarios.empty()) {
        // A fully specified single scenario.
        out.resize(1);
    }
    for (auto& s : out) {
        if (c.x_dist) s.x_dist = *c.x_dist;
        if (c.y_dist) s.y_dist = *c.y_dist;
        if (c.z_dist) s.z_dist = *c.z_dist;
        if (c.n_grid) s.n_grid = *c.n_grid;
        if (c.replications) s.replications = *c.replications;
        if (c.alpha) s.alpha = *c.alpha;
        if (c.permutations) s.permutations = *c.permutations;
        if (c.base_seed) s.base_seed = *c.base_seed;
        validate(s);
    }
    return out;
}

inline FilterOptions filter_options_from_config(const SimulationConfig& c) {
    FilterOptions o;
    if (c.n_grid) o.n_grid = *c.n_grid;
    if (c.replications) o.replications = *c.replications;
    if (c.alpha) o.alpha = *c.alpha;
    if (c.permutations) o.permutations = *c.permutations;
    if (c.base_seed) o.base_seed = *c.base_seed;
    if (c.threads) o.threads = *c.threads;
    return o;
}

// ---------------------------------------------------------------------------
// Report output

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("unknown output format '" + s + "' (expected csv or json)");
}

inline constexpr const char* kRateHeader = "case,x_dist,y_dist,method,n,rate,se,replications,seed";

namespace detail {

// Case 4 rows are keyed by the z family; x and y are derived from it.
inline std::pair<std::string, std::string> row_dists(const ScenarioSpec& s) {
    if (s.case_id == 4) {
        return {"f(" + std::string(family_label(s.z_dist->family)) + ")",
                "g(" + std::string(family_label(s.z_dist->family)) + ")"};
    }
    return {std::string(family_label(s.x_dist.family)), std::string(family_label(s.y_dist.family))};
}

}  // namespace detail

inline void write_rate_reports(std::ostream& out, const std::vector<RateReport>& reports,
                               OutputFormat fmt = OutputFormat::csv) {
    if (fmt == OutputFormat::csv) {
        out << kRateHeader << '\n';
        for (const auto& r : reports) {
            const auto [xd, yd] = detail::row_dists(r.spec);
            for (const auto& c : r.cells) {
                out << r.spec.case_id << ',' << xd << ',' << yd << ',' << to_string(c.method) << ','
                    << c.n << ',' << format_number(c.rate(), 6) << ',' << format_number(c.se(), 6) << ','
                    << c.replications << ',' << r.spec.base_seed << '\n';
            }
        }
        return;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : reports) {
        const auto [xd, yd] = detail::row_dists(r.spec);
        for (const auto& c : r.cells) {
            rows.push_back({{"case", r.spec.case_id},
                            {"x_dist", xd},
                            {"y_dist", yd},
                            {"method", std::string(to_string(c.method))},
                            {"n", c.n},
                            {"rate", c.rate()},
                            {"se", c.se()},
                            {"replications", c.replications},
                            {"seed", r.spec.base_seed}});
        }
    }
    out << rows.dump(2) << '\n';
}

inline constexpr const char* kFilterHeader =
    "n,P_T,P_F,A_T,A_F,Pear_T,Pear_F,P_and_A,P_and_Pear,A_and_Pear,replications";

inline void write_filter_report(std::ostream& out, const FilterReport& rep,
                                OutputFormat fmt = OutputFormat::csv) {
    if (fmt == OutputFormat::csv) {
        out << kFilterHeader << '\n';
        for (const auto& r : rep.rows) {
            out << r.n;
            for (double v : {r.p_true, r.p_false, r.a_true, r.a_false, r.pear_true, r.pear_false, r.p_and_a,
                             r.p_and_pear, r.a_and_pear}) {
                out << ',' << format_number(v, 6);
            }
            out << ',' << r.replications << '\n';
        }
        return;
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"n", r.n},
                        {"P_T", r.p_true},
                        {"P_F", r.p_false},
                        {"A_T", r.a_true},
                        {"A_F", r.a_false},
                        {"Pear_T", r.pear_true},
                        {"Pear_F", r.pear_false},
                        {"P_and_A", r.p_and_a},
                        {"P_and_Pear", r.p_and_pear},
                        {"A_and_Pear", r.a_and_pear},
                        {"replications", r.replications}});
    }
    out << nlohmann::json{{"total_predictors", rep.total_predictors},
                          {"true_predictors", rep.true_predictors},
                          {"rows", rows}}
               .dump(2)
        << '\n';
}

}  // namespace dcortest::io
