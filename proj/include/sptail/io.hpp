#pragma once

#include "sptail/bootstrap.hpp"
#include "sptail/errors.hpp"
#include "sptail/estimators.hpp"
#include "sptail/fit.hpp"
#include "sptail/simulate.hpp"
#include "sptail/study.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace sptail {

using json = nlohmann::json;

namespace io {

/// Deterministic double formatting used in every output file (17 significant
/// digits round-trips exactly).
[[nodiscard]] inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// RFC-style CSV escaping: quote when the field holds a comma, quote or
/// newline, doubling embedded quotes.
[[nodiscard]] inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

/// Splits one CSV record, honoring quoted fields with doubled quotes.
[[nodiscard]] inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw Error("cannot open " + path + " for writing");
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_escape(fields[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

[[nodiscard]] inline std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// FNV-1a 64-bit, used to fingerprint the effective configuration in run
/// manifests.
[[nodiscard]] inline std::uint64_t fnv1a(const std::string& data) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace io

// ---------------------------------------------------------------------------
// ModelSpec <-> JSON (the config-file representation of a model)

[[nodiscard]] inline json to_json(const Innovation& innov) {
    json j;
    switch (innov.kind) {
        case Innovation::Kind::standard_normal: j["kind"] = "normal"; break;
        case Innovation::Kind::student_t: j["kind"] = "t"; break;
        case Innovation::Kind::student_t_standardized: j["kind"] = "std-t"; break;
    }
    if (innov.kind != Innovation::Kind::standard_normal) j["nu"] = innov.nu;
    return j;
}

[[nodiscard]] inline Innovation innovation_from_json(const json& j) {
    Innovation innov;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal") innov.kind = Innovation::Kind::standard_normal;
    else if (kind == "t") innov.kind = Innovation::Kind::student_t;
    else if (kind == "std-t") innov.kind = Innovation::Kind::student_t_standardized;
    else throw InvalidParams("unknown innovation kind: " + kind);
    if (innov.kind != Innovation::Kind::standard_normal) innov.nu = j.at("nu").get<double>();
    innov.validate();
    return innov;
}

[[nodiscard]] inline json to_json(const ModelSpec& m) {
    json j;
    j["innovation"] = to_json(m.innovation);
    switch (m.kind) {
        case ModelSpec::Kind::garch11:
            j["kind"] = "garch11";
            j["omega"] = m.garch.omega;
            j["alpha1"] = m.garch.alpha1;
            j["beta1"] = m.garch.beta1;
            break;
        case ModelSpec::Kind::aparch11:
            j["kind"] = "aparch11";
            j["omega"] = m.aparch.omega;
            j["alpha1"] = m.aparch.alpha1;
            j["beta1"] = m.aparch.beta1;
            j["delta"] = m.aparch.delta;
            j["gamma1"] = m.aparch.gamma1;
            break;
        case ModelSpec::Kind::sv:
            j["kind"] = "sv";
            j["phi"] = m.sv.phi;
            j["vol_sd"] = m.sv.vol_sd;
            break;
        case ModelSpec::Kind::iid: j["kind"] = "iid"; break;
        case ModelSpec::Kind::constant_pareto:
            j.erase("innovation");
            j["kind"] = "constant-pareto";
            j["alpha"] = m.pareto_alpha;
            break;
    }
    return j;
}

[[nodiscard]] inline ModelSpec model_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const Innovation innov = j.contains("innovation") ? innovation_from_json(j.at("innovation"))
                                                      : Innovation{};
    ModelSpec m;
    if (kind == "garch11") {
        m = ModelSpec::garch11_spec(j.at("omega").get<double>(), j.at("alpha1").get<double>(),
                                    j.at("beta1").get<double>(), innov);
    } else if (kind == "aparch11") {
        m = ModelSpec::aparch11_spec(j.at("omega").get<double>(), j.at("alpha1").get<double>(),
                                     j.at("beta1").get<double>(), j.at("delta").get<double>(),
                                     j.at("gamma1").get<double>(), innov);
    } else if (kind == "sv") {
        m = ModelSpec::sv_spec(j.at("phi").get<double>(),
                               j.value("vol_sd", 1.0), innov);
    } else if (kind == "iid") {
        m = ModelSpec::iid_spec(innov);
    } else if (kind == "constant-pareto") {
        m = ModelSpec::constant_pareto_spec(j.at("alpha").get<double>());
    } else {
        throw InvalidParams("unknown model kind: " + kind);
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Return-series ingestion

/// Daily log-return series; dates are ISO yyyy-mm-dd strings, strictly
/// increasing, one per return (the date of the later price).
struct ReturnSeries {
    std::vector<std::string> dates;
    std::vector<double> returns;
};

/// Column selection for ingest_prices.
struct ColumnSpec {
    std::string date_column = "date";
    std::string value_column = "price";
    bool values_are_returns = false;  // true: value column already holds returns
};

namespace io {

[[nodiscard]] inline bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (const std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

}  // namespace io

/// Parses a CSV of dated prices (or precomputed returns), sorts by date, and
/// computes log-returns ln(P_t / P_{t-1}). Malformed rows abort with a
/// ParseError carrying the file and line number.
[[nodiscard]] inline ReturnSeries ingest_prices(const std::string& path,
                                                const ColumnSpec& cols = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header row");
    const auto header = io::parse_csv_line(line);
    std::ptrdiff_t date_idx = -1, value_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == cols.date_column) date_idx = static_cast<std::ptrdiff_t>(i);
        if (header[i] == cols.value_column) value_idx = static_cast<std::ptrdiff_t>(i);
    }
    if (date_idx < 0) throw ParseError(path, 1, "no '" + cols.date_column + "' column");
    if (value_idx < 0) throw ParseError(path, 1, "no '" + cols.value_column + "' column");

    std::vector<std::pair<std::string, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = io::parse_csv_line(line);
        if (fields.size() <= static_cast<std::size_t>(std::max(date_idx, value_idx)))
            throw ParseError(path, lineno, "too few columns");
        const std::string& date = fields[static_cast<std::size_t>(date_idx)];
        if (!io::valid_iso_date(date))
            throw ParseError(path, lineno, "bad date '" + date + "' (want yyyy-mm-dd)");
        const auto value = io::parse_double(fields[static_cast<std::size_t>(value_idx)]);
        if (!value)
            throw ParseError(path, lineno,
                             "bad value '" + fields[static_cast<std::size_t>(value_idx)] + "'");
        if (!cols.values_are_returns && !(*value > 0.0))
            throw ParseError(path, lineno, "nonpositive price");
        rows.emplace_back(date, *value);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i - 1].first == rows[i].first)
            throw InvalidParams("duplicate date " + rows[i].first + " in " + path);

    ReturnSeries out;
    if (cols.values_are_returns) {
        out.dates.reserve(rows.size());
        out.returns.reserve(rows.size());
        for (auto& [d, v] : rows) {
            out.dates.push_back(std::move(d));
            out.returns.push_back(v);
        }
        return out;
    }
    if (rows.size() < 2) throw TooShort("need at least 2 prices to form a return");
    out.dates.reserve(rows.size() - 1);
    out.returns.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        out.dates.push_back(rows[i].first);
        out.returns.push_back(std::log(rows[i].second / rows[i - 1].second));
    }
    return out;
}

/// Reads a plain series CSV (header + one value column, default "value").
[[nodiscard]] inline std::vector<double> read_series_csv(const std::string& path,
                                                         const std::string& column = "value") {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header row");
    const auto header = io::parse_csv_line(line);
    std::ptrdiff_t idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) idx = static_cast<std::ptrdiff_t>(i);
    if (idx < 0) throw ParseError(path, 1, "no '" + column + "' column");
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = io::parse_csv_line(line);
        if (fields.size() <= static_cast<std::size_t>(idx))
            throw ParseError(path, lineno, "too few columns");
        const auto v = io::parse_double(fields[static_cast<std::size_t>(idx)]);
        if (!v)
            throw ParseError(path, lineno,
                             "bad value '" + fields[static_cast<std::size_t>(idx)] + "'");
        values.push_back(*v);
    }
    return values;
}

/// Writes a series as index,value rows.
inline void write_series_csv(const std::string& path, std::span<const double> values) {
    io::CsvWriter csv(path);
    csv.row({"index", "value"});
    for (std::size_t i = 0; i < values.size(); ++i)
        csv.row({std::to_string(i + 1), io::format_double(values[i])});
}

// ---------------------------------------------------------------------------
// Result serialization

inline void write_curve_csv(const std::string& path, const EstimateCurve& curve) {
    io::CsvWriter csv(path);
    csv.row({"estimator", "conditioning", "lag", "x", "value", "exceedances", "alpha"});
    for (const auto& c : curve.cells)
        csv.row({to_string(c.estimator), to_string(c.conditioning), std::to_string(c.lag),
                 io::format_double(c.x), io::format_double(c.value),
                 std::to_string(c.exceedance_count),
                 c.alpha_used ? io::format_double(*c.alpha_used) : ""});
}

[[nodiscard]] inline json to_json(const TailEstimate& c) {
    json j;
    j["estimator"] = to_string(c.estimator);
    j["conditioning"] = to_string(c.conditioning);
    j["lag"] = c.lag;
    j["x"] = c.x;
    j["value"] = c.value;
    j["exceedances"] = c.exceedance_count;
    if (c.alpha_used) j["alpha"] = *c.alpha_used;
    return j;
}

[[nodiscard]] inline json to_json(const EstimateCurve& curve) {
    json j;
    j["estimator"] = to_string(curve.estimator);
    j["conditioning"] = to_string(curve.conditioning);
    j["grid"] = curve.grid;
    j["lags"] = curve.lags;
    j["cells"] = json::array();
    for (const auto& c : curve.cells) j["cells"].push_back(to_json(c));
    return j;
}

[[nodiscard]] inline json to_json(const BootstrapCI& ci) {
    json j;
    j["method"] = ci.method == BootstrapCI::Method::reflected ? "reflected" : "rescaled";
    j["level"] = ci.level;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["point"] = ci.point;
    j["replicates_used"] = ci.replicates_used;
    j["discarded"] = ci.discarded;
    if (ci.low_point) j["low_point"] = *ci.low_point;
    if (!ci.draws.empty()) j["draws"] = ci.draws;
    return j;
}

inline constexpr const char* kStudyCsvHeader =
    "study,scheme,estimator,conditioning,statistic,lag,x,threshold_q,truth,bias,sd,rmse,"
    "rmse_ratio,coverage,median_width,replicates,skipped,failed,discarded";

inline void write_study_csv(const std::string& path, const StudyReport& report) {
    io::CsvWriter csv(path);
    csv.row(io::parse_csv_line(kStudyCsvHeader));
    const auto opt = [](const std::optional<double>& v) {
        return v ? io::format_double(*v) : std::string();
    };
    for (const auto& c : report.cells)
        csv.row({c.study, c.scheme, c.estimator, to_string(c.conditioning),
                 to_string(c.statistic), std::to_string(c.lag), io::format_double(c.x),
                 io::format_double(c.threshold_q), io::format_double(c.truth), opt(c.bias),
                 opt(c.sd), opt(c.rmse), opt(c.rmse_ratio), opt(c.coverage), opt(c.median_width),
                 std::to_string(c.replicates), std::to_string(c.skipped),
                 std::to_string(c.failed), std::to_string(c.discarded)});
}

[[nodiscard]] inline json to_json(const StudyReport& report) {
    json j;
    j["model"] = report.model;
    j["reps"] = report.reps;
    j["bootstrap_replicates"] = report.bootstrap_replicates;
    j["n"] = report.n;
    j["seed"] = report.seed;
    j["oracle_replicates"] = report.oracle_replicates;
    j["oracle_length"] = report.oracle_length;
    j["cells"] = json::array();
    for (const auto& c : report.cells) {
        json jc;
        jc["study"] = c.study;
        jc["scheme"] = c.scheme;
        jc["estimator"] = c.estimator;
        jc["conditioning"] = to_string(c.conditioning);
        jc["statistic"] = to_string(c.statistic);
        jc["lag"] = c.lag;
        jc["x"] = c.x;
        jc["threshold_q"] = c.threshold_q;
        jc["truth"] = c.truth;
        if (c.bias) jc["bias"] = *c.bias;
        if (c.sd) jc["sd"] = *c.sd;
        if (c.rmse) jc["rmse"] = *c.rmse;
        if (c.rmse_ratio) jc["rmse_ratio"] = *c.rmse_ratio;
        if (c.coverage) jc["coverage"] = *c.coverage;
        if (c.median_width) jc["median_width"] = *c.median_width;
        jc["replicates"] = c.replicates;
        jc["skipped"] = c.skipped;
        jc["failed"] = c.failed;
        jc["discarded"] = c.discarded;
        j["cells"].push_back(std::move(jc));
    }
    return j;
}

[[nodiscard]] inline json to_json(const FitResult& fit) {
    json j;
    j["kind"] = "garch11";
    j["omega"] = fit.params.omega;
    j["alpha1"] = fit.params.alpha1;
    j["beta1"] = fit.params.beta1;
    if (fit.std_errors) {
        j["std_errors"] = {{"omega", (*fit.std_errors)[0]},
                           {"alpha1", (*fit.std_errors)[1]},
                           {"beta1", (*fit.std_errors)[2]}};
    }
    j["log_likelihood"] = fit.log_likelihood;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace sptail
