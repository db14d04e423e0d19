// sptail: spectral tail process estimation for heavy-tailed time series.
//
// Subcommands: simulate, estimate, ci, study-rmse, study-coverage,
// independence, apply. Every run writes its artifacts plus a manifest.json
// (seed, effective config, config hash) into --out.

#include "sptail/bootstrap.hpp"
#include "sptail/estimators.hpp"
#include "sptail/fit.hpp"
#include "sptail/io.hpp"
#include "sptail/series.hpp"
#include "sptail/simulate.hpp"
#include "sptail/study.hpp"
#include "sptail/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sptail;

namespace {

// ---------------------------------------------------------------------------
// flag parsing helpers

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// "1,3,5" or "1..5" or "-3..3" (zero skipped in ranges, rejected if explicit)
std::vector<int> parse_lags(const std::string& text) {
    std::vector<int> lags;
    for (const auto& tok : split(text, ',')) {
        if (tok.empty()) continue;
        const auto dots = tok.find("..");
        if (dots != std::string::npos) {
            const int lo = std::stoi(tok.substr(0, dots));
            const int hi = std::stoi(tok.substr(dots + 2));
            if (hi < lo) throw InvalidParams("bad lag range: " + tok);
            for (int t = lo; t <= hi; ++t)
                if (t != 0) lags.push_back(t);
        } else {
            const int t = std::stoi(tok);
            if (t == 0) throw InvalidParams("lag 0 is not allowed");
            lags.push_back(t);
        }
    }
    if (lags.empty()) throw InvalidParams("no lags given");
    return lags;
}

// "-2,-1,1,2" or "-2..2:17" (inclusive linspace with 17 points)
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    for (const auto& tok : split(text, ',')) {
        if (tok.empty()) continue;
        const auto dots = tok.find("..");
        if (dots != std::string::npos) {
            const auto colon = tok.find(':', dots);
            if (colon == std::string::npos)
                throw InvalidParams("grid range needs a point count: " + tok);
            const double lo = std::stod(tok.substr(0, dots));
            const double hi = std::stod(tok.substr(dots + 2, colon - dots - 2));
            const int count = std::stoi(tok.substr(colon + 1));
            if (count < 2 || !(hi > lo)) throw InvalidParams("bad grid range: " + tok);
            for (int i = 0; i < count; ++i)
                grid.push_back(lo + (hi - lo) * static_cast<double>(i)
                                        / static_cast<double>(count - 1));
        } else {
            grid.push_back(std::stod(tok));
        }
    }
    if (grid.empty()) throw InvalidParams("no grid points given");
    return grid;
}

Statistic parse_statistic(const std::string& s) {
    if (s == "cdf") return Statistic::cdf;
    if (s == "upper") return Statistic::upper_tail;
    if (s == "abs-upper") return Statistic::abs_upper_tail;
    throw InvalidParams("unknown statistic: " + s);
}

Conditioning parse_conditioning(const std::string& s) {
    if (s == "absolute") return Conditioning::absolute;
    if (s == "positive") return Conditioning::positive_shock;
    if (s == "negative") return Conditioning::negative_shock;
    throw InvalidParams("unknown conditioning: " + s);
}

std::vector<EstimatorKind> parse_estimators(const std::string& s) {
    if (s == "forward") return {EstimatorKind::forward};
    if (s == "backward") return {EstimatorKind::backward};
    if (s == "both") return {EstimatorKind::forward, EstimatorKind::backward};
    throw InvalidParams("unknown estimator: " + s);
}

// ---------------------------------------------------------------------------
// shared option blocks

struct ModelOptions {
    std::string model = "garch11";
    double omega = 0.1, alpha1 = 0.14, beta1 = 0.84;
    double delta = 1.227, gamma1 = 0.874;
    double phi = 0.9, vol_sd = 1.0;
    double pareto_alpha = 2.6;
    std::string innovation = "std-t";
    double nu = 4.0;
    std::string model_json;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--model", model, "garch11|aparch11|sv|iid|constant-pareto")
            ->capture_default_str();
        cmd->add_option("--omega", omega, "garch/aparch omega")->capture_default_str();
        cmd->add_option("--alpha1", alpha1, "garch/aparch alpha1")->capture_default_str();
        cmd->add_option("--beta1", beta1, "garch/aparch beta1")->capture_default_str();
        cmd->add_option("--delta", delta, "aparch power delta")->capture_default_str();
        cmd->add_option("--gamma1", gamma1, "aparch leverage gamma1")->capture_default_str();
        cmd->add_option("--phi", phi, "sv log-volatility AR coefficient")->capture_default_str();
        cmd->add_option("--vol-sd", vol_sd, "sv log-volatility innovation sd")
            ->capture_default_str();
        cmd->add_option("--pareto-alpha", pareto_alpha, "constant-pareto tail index")
            ->capture_default_str();
        cmd->add_option("--innovation", innovation, "normal|t|std-t")->capture_default_str();
        cmd->add_option("--nu", nu, "t degrees of freedom")->capture_default_str();
        cmd->add_option("--model-json", model_json, "read the model from a JSON file instead");
    }

    [[nodiscard]] ModelSpec build() const {
        if (!model_json.empty()) return model_from_json(read_json_file(model_json));
        Innovation innov;
        if (innovation == "normal") innov = {Innovation::Kind::standard_normal, 0.0};
        else if (innovation == "t") innov = {Innovation::Kind::student_t, nu};
        else if (innovation == "std-t") innov = {Innovation::Kind::student_t_standardized, nu};
        else throw InvalidParams("unknown innovation: " + innovation);

        if (model == "garch11") return ModelSpec::garch11_spec(omega, alpha1, beta1, innov);
        if (model == "aparch11")
            return ModelSpec::aparch11_spec(omega, alpha1, beta1, delta, gamma1, innov);
        if (model == "sv") return ModelSpec::sv_spec(phi, vol_sd, innov);
        if (model == "iid") return ModelSpec::iid_spec(innov);
        if (model == "constant-pareto") return ModelSpec::constant_pareto_spec(pareto_alpha);
        throw InvalidParams("unknown model: " + model);
    }
};

struct ThresholdOptions {
    double quantile = 0.95;
    double level = 0.0;
    bool level_set = false;

    void add_to(CLI::App* cmd, double default_q = 0.95) {
        quantile = default_q;
        cmd->add_option("--threshold-quantile", quantile,
                        "empirical quantile of |X| used as threshold")
            ->capture_default_str();
        cmd->add_option("--threshold-level", level, "fixed absolute threshold instead")
            ->each([this](const std::string&) { level_set = true; });
    }

    [[nodiscard]] ThresholdSpec build() const {
        return level_set ? ThresholdSpec::absolute(level) : ThresholdSpec::quantile(quantile);
    }
    [[nodiscard]] double q_or_nan() const {
        return level_set ? std::nan("") : quantile;
    }
};

// ---------------------------------------------------------------------------
// output helpers

std::string iso_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, CLI::App* cmd,
                    std::uint64_t seed, const std::vector<std::string>& outputs) {
    const std::string config = cmd->config_to_str(true, false);
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(io::fnv1a(config)));
    json j;
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["config"] = config;
    j["config_hash"] = hash;
    j["created_utc"] = iso_timestamp();
    j["outputs"] = outputs;
    write_json_file((dir / "manifest.json").string(), j);
}

SeriesWindow load_window(const std::string& input, const std::string& column, int tilde) {
    return SeriesWindow(read_series_csv(input, column), tilde);
}

const char* error_name(const Error& e) {
    if (dynamic_cast<const NoExceedances*>(&e)) return "NoExceedances";
    if (dynamic_cast<const InvalidAlpha*>(&e)) return "InvalidAlpha";
    if (dynamic_cast<const DegenerateLogs*>(&e)) return "DegenerateLogs";
    if (dynamic_cast<const ZeroDenominator*>(&e)) return "ZeroDenominator";
    if (dynamic_cast<const TooFewReplicates*>(&e)) return "TooFewReplicates";
    if (dynamic_cast<const TooManyDiscards*>(&e)) return "TooManyDiscards";
    if (dynamic_cast<const InvalidRatio*>(&e)) return "InvalidRatio";
    if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
    if (dynamic_cast<const DegenerateData*>(&e)) return "DegenerateData";
    if (dynamic_cast<const ParseError*>(&e)) return "ParseError";
    if (dynamic_cast<const TooShort*>(&e)) return "TooShort";
    if (dynamic_cast<const InvalidParams*>(&e)) return "InvalidParams";
    return "Error";
}

// ---------------------------------------------------------------------------
// subcommand state

struct SimulateCmd {
    ModelOptions model;
    std::size_t length = 10000, burn_in = 2000;
    std::uint64_t seed = 1;
    std::string out = "out";
};

struct EstimateCmd {
    std::string input, value_column = "value";
    std::string estimator = "both", conditioning = "absolute";
    std::string lags = "1..5", grid = "-2..2:17";
    ThresholdOptions threshold;
    double fixed_alpha = 0.0;
    bool alpha_set = false;
    bool clamp = false;
    std::string out = "out";
};

struct CiCmd {
    std::string input, value_column = "value";
    std::string estimator = "both", conditioning = "absolute", statistic = "abs-upper";
    std::string lags = "1..5", xs = "1";
    ThresholdOptions threshold;
    std::string scheme = "multiplier";
    std::size_t block = 100, replicates = 1000;
    double level = 0.95;
    double rescale_from = 0.0;
    bool rescale_set = false;
    bool keep_draws = false;
    std::uint64_t seed = 1;
    std::string out = "out";
};

struct StudyRmseCmd {
    ModelOptions model;
    std::size_t n = 2000, reps = 300, burn_in = 2000;
    double threshold_quantile = 0.95;
    std::string lags = "1", grid = "-2,-1,1,2";
    std::uint64_t seed = 1, oracle_seed = 2;
    std::size_t oracle_reps = 2000, oracle_length = 10000;
    std::string oracle_threshold = "pooled";
    std::string out = "out";
};

struct StudyCoverageCmd {
    ModelOptions model;
    std::size_t n = 2000, reps = 300, burn_in = 2000;
    double threshold_quantile = 0.95;
    std::string lags = "1..5";
    double x = 1.0;
    std::string statistic = "abs-upper", conditioning = "absolute", estimator = "both";
    std::string schemes = "both";
    std::size_t block = 100, replicates = 300;
    double level = 0.95;
    double rescale_from = 0.0;
    bool rescale_set = false;
    std::uint64_t seed = 1, oracle_seed = 2;
    std::size_t oracle_reps = 2000, oracle_length = 10000;
    std::string oracle_threshold = "pooled";
    std::string out = "out";
};

struct IndependenceCmd {
    std::string input, value_column = "value";
    std::string lags = "1..5";
    double x = 1.0;
    std::string statistic = "abs-upper", conditioning = "absolute", estimator = "backward";
    ThresholdOptions threshold;
    std::size_t mc_reps = 1000;
    std::string quantile_levels = "0.8";
    std::uint64_t seed = 1;
    std::string out = "out";
};

struct ApplyCmd {
    std::string input;
    std::string date_column = "date", price_column = "price";
    bool values_are_returns = false;
    std::string lags = "1..10";
    ThresholdOptions threshold;
    double rescale_from = 0.95;
    bool no_rescale = false;
    std::string scheme = "multiplier";
    std::size_t block = 100, replicates = 1000;
    double level = 0.80;
    std::string aparch;  // "omega,alpha1,beta1,delta,gamma1"
    bool no_fit = false;
    std::size_t oracle_reps = 2000, oracle_length = 10000;
    std::size_t mc_reps = 200;
    std::uint64_t seed = 1;
    std::string out = "out";
};

// ---------------------------------------------------------------------------
// runners

int run_simulate(const SimulateCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    SimulationPlan plan;
    plan.model = cmd.model.build();
    plan.length = cmd.length;
    plan.burn_in = cmd.burn_in;
    plan.seed = cmd.seed;
    const auto values = simulate(plan);
    write_series_csv((dir / "series.csv").string(), values);
    json j;
    j["model"] = to_json(plan.model);
    j["length"] = cmd.length;
    j["burn_in"] = cmd.burn_in;
    j["seed"] = cmd.seed;
    write_json_file((dir / "simulate.json").string(), j);
    write_manifest(dir, "simulate", sub, cmd.seed, {"series.csv", "simulate.json"});
    std::cout << "wrote " << (dir / "series.csv").string() << " (" << values.size()
              << " values)\n";
    return 0;
}

int run_estimate(const EstimateCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    const auto lags = parse_lags(cmd.lags);
    const auto grid = parse_grid(cmd.grid);
    int tilde = 1;
    for (const int t : lags) tilde = std::max(tilde, std::abs(t));
    const auto w = load_window(cmd.input, cmd.value_column, tilde);
    const double u = resolve_threshold(w, cmd.threshold.build());
    const auto cond = parse_conditioning(cmd.conditioning);
    const auto alpha_policy = cmd.alpha_set ? AlphaPolicy::fixed(cmd.fixed_alpha)
                                            : AlphaPolicy::hill();

    std::vector<EstimateCurve> curves;
    for (const auto est : parse_estimators(cmd.estimator))
        curves.push_back(sweep(w, u, est, cond, lags, grid, alpha_policy));
    if (cmd.clamp) {
        for (auto& curve : curves)
            for (auto& cell : curve.cells) cell.value = std::clamp(cell.value, 0.0, 1.0);
    }

    io::CsvWriter csv((dir / "estimates.csv").string());
    csv.row({"estimator", "conditioning", "lag", "x", "value", "exceedances", "alpha"});
    for (const auto& curve : curves)
        for (const auto& c : curve.cells)
            csv.row({to_string(c.estimator), to_string(c.conditioning), std::to_string(c.lag),
                     io::format_double(c.x), io::format_double(c.value),
                     std::to_string(c.exceedance_count),
                     c.alpha_used ? io::format_double(*c.alpha_used) : ""});

    json j;
    j["threshold"] = u;
    j["n"] = w.n();
    j["hill_alpha"] = hill_alpha(w, u).alpha;
    j["p_hat"] = p_hat(w, u);
    j["curves"] = json::array();
    for (const auto& curve : curves) j["curves"].push_back(to_json(curve));
    write_json_file((dir / "estimates.json").string(), j);
    write_manifest(dir, "estimate", sub, 0, {"estimates.csv", "estimates.json"});
    std::cout << "threshold " << u << ", " << curves.size() << " curve(s), "
              << curves.front().cells.size() << " cells each\n";
    return 0;
}

int run_ci(const CiCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    const auto lags = parse_lags(cmd.lags);
    const auto xs = parse_grid(cmd.xs);
    int tilde = 1;
    for (const int t : lags) tilde = std::max(tilde, std::abs(t));
    const auto w = load_window(cmd.input, cmd.value_column, tilde);
    const double u = resolve_threshold(w, cmd.threshold.build());
    const auto cond = parse_conditioning(cmd.conditioning);
    const auto stat = parse_statistic(cmd.statistic);
    std::optional<ThresholdSpec> rescale;
    if (cmd.rescale_set) rescale = ThresholdSpec::quantile(cmd.rescale_from);

    io::CsvWriter csv((dir / "ci.csv").string());
    csv.row({"estimator", "conditioning", "statistic", "lag", "x", "point", "lower", "upper",
             "method", "level", "replicates_used", "discarded"});
    json rows = json::array();
    std::size_t combo = 0;
    for (const auto est : parse_estimators(cmd.estimator)) {
        for (const int t : lags) {
            for (const double x : xs) {
                BootstrapScheme scheme = cmd.scheme == "stationary"
                                             ? BootstrapScheme::stationary(
                                                   1.0 / static_cast<double>(cmd.block),
                                                   cmd.replicates, 0)
                                             : BootstrapScheme::multiplier(cmd.block,
                                                                           cmd.replicates, 0);
                scheme.seed = derive_seed(cmd.seed, combo++);
                StatisticSpec spec{est, cond, stat, t, x};
                const auto ci = bootstrap_ci(w, u, spec, scheme, cmd.level, rescale,
                                             cmd.keep_draws);
                csv.row({to_string(est), to_string(cond), to_string(stat), std::to_string(t),
                         io::format_double(x), io::format_double(ci.point),
                         io::format_double(ci.lower), io::format_double(ci.upper),
                         ci.method == BootstrapCI::Method::reflected ? "reflected" : "rescaled",
                         io::format_double(ci.level), std::to_string(ci.replicates_used),
                         std::to_string(ci.discarded)});
                json row = to_json(ci);
                row["estimator"] = to_string(est);
                row["lag"] = t;
                row["x"] = x;
                rows.push_back(std::move(row));
            }
        }
    }
    json j;
    j["threshold"] = u;
    j["scheme"] = cmd.scheme;
    j["block"] = cmd.block;
    j["intervals"] = std::move(rows);
    write_json_file((dir / "ci.json").string(), j);
    write_manifest(dir, "ci", sub, cmd.seed, {"ci.csv", "ci.json"});
    std::cout << "wrote " << (dir / "ci.csv").string() << "\n";
    return 0;
}

OracleThreshold parse_oracle_mode(const std::string& s) {
    if (s == "pooled") return OracleThreshold::pooled;
    if (s == "per-replicate") return OracleThreshold::per_replicate;
    throw InvalidParams("unknown oracle threshold mode: " + s);
}

int run_study_rmse(const StudyRmseCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    RmseStudyConfig cfg;
    cfg.model = cmd.model.build();
    cfg.n = cmd.n;
    cfg.threshold_q = cmd.threshold_quantile;
    cfg.lags = parse_lags(cmd.lags);
    cfg.grid = parse_grid(cmd.grid);
    cfg.reps = cmd.reps;
    cfg.burn_in = cmd.burn_in;
    cfg.seed = cmd.seed;
    cfg.oracle_replicates = cmd.oracle_reps;
    cfg.oracle_length = cmd.oracle_length;
    cfg.oracle_threshold_mode = parse_oracle_mode(cmd.oracle_threshold);
    cfg.oracle_seed = cmd.oracle_seed;
    const auto report = study_estimators(cfg);
    write_study_csv((dir / "study_rmse.csv").string(), report);
    write_json_file((dir / "study_rmse.json").string(), to_json(report));
    write_manifest(dir, "study-rmse", sub, cmd.seed, {"study_rmse.csv", "study_rmse.json"});
    std::cout << "wrote " << (dir / "study_rmse.csv").string() << " (" << report.cells.size()
              << " cells)\n";
    return 0;
}

int run_study_coverage(const StudyCoverageCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    CoverageStudyConfig cfg;
    cfg.model = cmd.model.build();
    cfg.n = cmd.n;
    cfg.threshold_q = cmd.threshold_quantile;
    cfg.lags = parse_lags(cmd.lags);
    cfg.x = cmd.x;
    cfg.statistic = parse_statistic(cmd.statistic);
    cfg.conditioning = parse_conditioning(cmd.conditioning);
    cfg.estimators = parse_estimators(cmd.estimator);
    const double p = 1.0 / static_cast<double>(cmd.block);
    if (cmd.schemes == "multiplier") {
        cfg.schemes = {BootstrapScheme::multiplier(cmd.block, cmd.replicates, 0)};
    } else if (cmd.schemes == "stationary") {
        cfg.schemes = {BootstrapScheme::stationary(p, cmd.replicates, 0)};
    } else if (cmd.schemes == "both") {
        cfg.schemes = {BootstrapScheme::multiplier(cmd.block, cmd.replicates, 0),
                       BootstrapScheme::stationary(p, cmd.replicates, 0)};
    } else {
        throw InvalidParams("unknown schemes: " + cmd.schemes);
    }
    cfg.level = cmd.level;
    if (cmd.rescale_set) cfg.rescale_from_q = cmd.rescale_from;
    cfg.reps = cmd.reps;
    cfg.burn_in = cmd.burn_in;
    cfg.seed = cmd.seed;
    cfg.oracle_replicates = cmd.oracle_reps;
    cfg.oracle_length = cmd.oracle_length;
    cfg.oracle_threshold_mode = parse_oracle_mode(cmd.oracle_threshold);
    cfg.oracle_seed = cmd.oracle_seed;
    const auto report = study_coverage(cfg);
    write_study_csv((dir / "study_coverage.csv").string(), report);
    write_json_file((dir / "study_coverage.json").string(), to_json(report));
    write_manifest(dir, "study-coverage", sub, cmd.seed,
                   {"study_coverage.csv", "study_coverage.json"});
    std::cout << "wrote " << (dir / "study_coverage.csv").string() << " ("
              << report.cells.size() << " cells)\n";
    return 0;
}

int run_independence(const IndependenceCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    const auto lags = parse_lags(cmd.lags);
    int tilde = 1;
    for (const int t : lags) tilde = std::max(tilde, std::abs(t));
    const auto w = load_window(cmd.input, cmd.value_column, tilde);
    const double u = resolve_threshold(w, cmd.threshold.build());
    const auto cond = parse_conditioning(cmd.conditioning);
    const auto stat = parse_statistic(cmd.statistic);
    const auto est = parse_estimators(cmd.estimator).front();
    const auto levels = parse_grid(cmd.quantile_levels);

    io::CsvWriter csv((dir / "independence.csv").string());
    std::vector<std::string> header{"lag", "x", "mc_value", "analytic"};
    for (const double lv : levels) header.push_back("q" + io::format_double(lv));
    csv.row(header);
    for (const int t : lags) {
        const auto ref = independence_reference(w, u, t, cmd.x, cond, stat, cmd.mc_reps,
                                                derive_seed(cmd.seed, static_cast<std::uint64_t>(
                                                                          t + 1000)));
        std::vector<std::string> row{std::to_string(t), io::format_double(cmd.x),
                                     io::format_double(ref.mc_value),
                                     ref.analytic ? io::format_double(*ref.analytic) : ""};
        for (const double lv : levels)
            row.push_back(io::format_double(independence_quantile(
                w, u, t, cmd.x, est, cond, stat, lv, cmd.mc_reps,
                derive_seed(cmd.seed, static_cast<std::uint64_t>(t + 2000)))));
        csv.row(row);
    }
    write_manifest(dir, "independence", sub, cmd.seed, {"independence.csv"});
    std::cout << "wrote " << (dir / "independence.csv").string() << "\n";
    return 0;
}

// The three probability families of the application plots, per conditioning
// sign: P(|T_t|>1 | T_0 = s), P(T_t>1 | T_0 = s), P(T_t<=-1 | T_0 = s).
struct Family {
    const char* label;
    Statistic statistic;
    double x;
};
constexpr Family kApplyFamilies[] = {
    {"abs-gt-1", Statistic::abs_upper_tail, 1.0},
    {"gt-1", Statistic::upper_tail, 1.0},
    {"le-neg-1", Statistic::cdf, -1.0},
};

int run_apply(const ApplyCmd& cmd, CLI::App* sub) {
    const auto dir = prepare_out_dir(cmd.out);
    ColumnSpec cols;
    cols.date_column = cmd.date_column;
    cols.value_column = cmd.price_column;
    cols.values_are_returns = cmd.values_are_returns;
    const auto series = ingest_prices(cmd.input, cols);

    const auto lags = parse_lags(cmd.lags);
    int tilde = 1;
    for (const int t : lags) tilde = std::max(tilde, std::abs(t));
    const SeriesWindow w(series.returns, tilde);
    const double u = resolve_threshold(w, cmd.threshold.build());
    const auto alpha = hill_alpha(w, u);
    std::optional<ThresholdSpec> rescale;
    if (!cmd.no_rescale) rescale = ThresholdSpec::quantile(cmd.rescale_from);

    json summary;
    summary["n"] = w.n();
    summary["threshold"] = u;
    summary["hill_alpha"] = alpha.alpha;
    summary["exceedances"] = alpha.exceedance_count;
    summary["p_hat"] = p_hat(w, u);

    const Conditioning conds[] = {Conditioning::positive_shock, Conditioning::negative_shock};

    // 1. sample estimates with bootstrap confidence bands + independence refs
    {
        io::CsvWriter csv((dir / "apply_estimates.csv").string());
        csv.row({"family", "conditioning", "lag", "point", "lower", "upper", "independence"});
        std::size_t combo = 0;
        for (const auto& fam : kApplyFamilies) {
            for (const auto cond : conds) {
                for (const int t : lags) {
                    StatisticSpec spec{EstimatorKind::backward, cond, fam.statistic, t, fam.x};
                    BootstrapScheme scheme =
                        cmd.scheme == "stationary"
                            ? BootstrapScheme::stationary(1.0 / static_cast<double>(cmd.block),
                                                          cmd.replicates, 0)
                            : BootstrapScheme::multiplier(cmd.block, cmd.replicates, 0);
                    scheme.seed = derive_seed(cmd.seed, combo);
                    const auto ci = bootstrap_ci(w, u, spec, scheme, cmd.level, rescale);
                    const auto ref = independence_reference(w, u, t, fam.x, cond, fam.statistic,
                                                            cmd.mc_reps,
                                                            derive_seed(cmd.seed, 5000 + combo));
                    csv.row({fam.label, to_string(cond), std::to_string(t),
                             io::format_double(ci.point), io::format_double(ci.lower),
                             io::format_double(ci.upper), io::format_double(ref.mc_value)});
                    ++combo;
                }
            }
        }
    }

    // 2. fitted-model pre-asymptotic curves via the oracle
    std::vector<std::pair<std::string, ModelSpec>> models;
    if (!cmd.no_fit) {
        const auto fit = fit_garch11(series.returns);
        summary["garch_fit"] = to_json(fit);
        models.emplace_back("garch11", fit.model({Innovation::Kind::standard_normal, 0.0}));
    }
    if (!cmd.aparch.empty()) {
        const auto parts = split(cmd.aparch, ',');
        if (parts.size() != 5)
            throw InvalidParams("--aparch wants omega,alpha1,beta1,delta,gamma1");
        const auto ap = ModelSpec::aparch11_spec(std::stod(parts[0]), std::stod(parts[1]),
                                                 std::stod(parts[2]), std::stod(parts[3]),
                                                 std::stod(parts[4]),
                                                 {Innovation::Kind::standard_normal, 0.0});
        summary["aparch_params"] = to_json(ap);
        models.emplace_back("aparch11", ap);
    }
    if (!models.empty()) {
        io::CsvWriter csv((dir / "apply_models.csv").string());
        csv.row({"model", "family", "conditioning", "lag", "value", "std_error"});
        for (const auto& [name, model] : models) {
            std::vector<OracleCell> cells;
            for (const auto& fam : kApplyFamilies)
                for (const auto cond : conds)
                    for (const int t : lags) cells.push_back({cond, fam.statistic, t, fam.x});
            OracleSpec ospec;
            ospec.model = model;
            ospec.replicates = cmd.oracle_reps;
            ospec.length = cmd.oracle_length;
            ospec.threshold_q = cmd.threshold.quantile;
            ospec.seed = derive_seed(cmd.seed, 7000);
            const auto oracle = oracle_table(ospec, cells);
            std::size_t c = 0;
            for (const auto& fam : kApplyFamilies)
                for (const auto cond : conds)
                    for (const int t : lags) {
                        csv.row({name, fam.label, to_string(cond), std::to_string(t),
                                 io::format_double(oracle.values[c]),
                                 io::format_double(oracle.std_errors[c])});
                        ++c;
                    }
        }
    }

    // 3. residual re-analysis: backward estimates on filtered residuals with
    // independence quantile reference lines
    if (!models.empty()) {
        io::CsvWriter csv((dir / "apply_residuals.csv").string());
        csv.row({"model", "family", "conditioning", "lag", "value", "independence_quantile"});
        for (const auto& [name, model] : models) {
            const auto z = residuals(series.returns, model);
            const SeriesWindow wz(z, tilde);
            const double uz = resolve_threshold(wz, cmd.threshold.build());
            const double alpha_z = hill_alpha(wz, uz).alpha;
            std::size_t combo = 0;
            for (const auto& fam : kApplyFamilies) {
                for (const auto cond : conds) {
                    for (const int t : lags) {
                        StatisticSpec spec{EstimatorKind::backward, cond, fam.statistic, t,
                                           fam.x};
                        const double v = estimate_statistic(wz, uz, spec, alpha_z);
                        const double qline = independence_quantile(
                            wz, uz, t, fam.x, EstimatorKind::backward, cond, fam.statistic, 0.8,
                            cmd.mc_reps, derive_seed(cmd.seed, 9000 + combo));
                        csv.row({name, fam.label, to_string(cond), std::to_string(t),
                                 io::format_double(v), io::format_double(qline)});
                        ++combo;
                    }
                }
            }
        }
    }

    write_json_file((dir / "apply.json").string(), summary);
    std::vector<std::string> outputs{"apply_estimates.csv", "apply.json"};
    if (!models.empty()) {
        outputs.push_back("apply_models.csv");
        outputs.push_back("apply_residuals.csv");
    }
    write_manifest(dir, "apply", sub, cmd.seed, outputs);
    std::cout << "alpha " << alpha.alpha << ", wrote " << (dir / "apply_estimates.csv").string()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral tail process estimation for heavy-tailed time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "read options from an INI file with [subcommand] sections");

    SimulateCmd sim;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a model series to CSV");
    sim.model.add_to(sim_cmd);
    sim_cmd->add_option("--length", sim.length, "series length")->capture_default_str();
    sim_cmd->add_option("--burn-in", sim.burn_in, "discarded warmup steps")
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "rng seed")->capture_default_str();
    sim_cmd->add_option("--out", sim.out, "output directory")->capture_default_str();

    EstimateCmd est;
    auto* est_cmd = app.add_subcommand("estimate",
                                       "estimate the spectral tail cdf over a grid of x and lags");
    est_cmd->add_option("--input", est.input, "series CSV")->required();
    est_cmd->add_option("--value-column", est.value_column)->capture_default_str();
    est_cmd->add_option("--estimator", est.estimator, "forward|backward|both")
        ->capture_default_str();
    est_cmd->add_option("--conditioning", est.conditioning, "absolute|positive|negative")
        ->capture_default_str();
    est_cmd->add_option("--lags", est.lags, "e.g. 1..5 or 1,3,5")->capture_default_str();
    est_cmd->add_option("--grid", est.grid, "e.g. -2..2:17 or -1,0,1")->capture_default_str();
    est.threshold.add_to(est_cmd);
    est_cmd->add_option("--alpha", est.fixed_alpha, "fixed backward tail index (default: Hill)")
        ->each([&est](const std::string&) { est.alpha_set = true; });
    est_cmd->add_flag("--clamp", est.clamp, "clamp backward values into [0,1] for presentation");
    est_cmd->add_option("--out", est.out)->capture_default_str();

    CiCmd ci;
    auto* ci_cmd = app.add_subcommand("ci", "bootstrap confidence intervals for tail statistics");
    ci_cmd->add_option("--input", ci.input, "series CSV")->required();
    ci_cmd->add_option("--value-column", ci.value_column)->capture_default_str();
    ci_cmd->add_option("--estimator", ci.estimator, "forward|backward|both")
        ->capture_default_str();
    ci_cmd->add_option("--conditioning", ci.conditioning)->capture_default_str();
    ci_cmd->add_option("--statistic", ci.statistic, "cdf|upper|abs-upper")
        ->capture_default_str();
    ci_cmd->add_option("--lags", ci.lags)->capture_default_str();
    ci_cmd->add_option("--x", ci.xs, "argument(s) x")->capture_default_str();
    ci.threshold.add_to(ci_cmd);
    ci_cmd->add_option("--scheme", ci.scheme, "multiplier|stationary")->capture_default_str();
    ci_cmd->add_option("--block", ci.block, "block length (multiplier) or mean block (stationary)")
        ->capture_default_str();
    ci_cmd->add_option("--replicates", ci.replicates, "bootstrap replicates B")
        ->capture_default_str();
    ci_cmd->add_option("--level", ci.level, "confidence level")->capture_default_str();
    ci_cmd->add_option("--rescale-from", ci.rescale_from,
                       "lower threshold quantile for the rescaled interval")
        ->each([&ci](const std::string&) { ci.rescale_set = true; });
    ci_cmd->add_flag("--keep-draws", ci.keep_draws, "retain replicate values in ci.json");
    ci_cmd->add_option("--seed", ci.seed)->capture_default_str();
    ci_cmd->add_option("--out", ci.out)->capture_default_str();

    StudyRmseCmd rmse;
    auto* rmse_cmd = app.add_subcommand("study-rmse",
                                        "bias/sd/RMSE study against the pre-asymptotic truth");
    rmse.model.add_to(rmse_cmd);
    rmse_cmd->add_option("-n,--n", rmse.n, "series length per replication")
        ->capture_default_str();
    rmse_cmd->add_option("--reps", rmse.reps, "Monte Carlo replications")->capture_default_str();
    rmse_cmd->add_option("--burn-in", rmse.burn_in)->capture_default_str();
    rmse_cmd->add_option("--threshold-quantile", rmse.threshold_quantile)->capture_default_str();
    rmse_cmd->add_option("--lags", rmse.lags)->capture_default_str();
    rmse_cmd->add_option("--grid", rmse.grid)->capture_default_str();
    rmse_cmd->add_option("--seed", rmse.seed)->capture_default_str();
    rmse_cmd->add_option("--oracle-seed", rmse.oracle_seed)->capture_default_str();
    rmse_cmd->add_option("--oracle-reps", rmse.oracle_reps)->capture_default_str();
    rmse_cmd->add_option("--oracle-length", rmse.oracle_length)->capture_default_str();
    rmse_cmd->add_option("--oracle-threshold", rmse.oracle_threshold, "pooled|per-replicate")
        ->capture_default_str();
    rmse_cmd->add_option("--out", rmse.out)->capture_default_str();

    StudyCoverageCmd cov;
    auto* cov_cmd = app.add_subcommand("study-coverage",
                                       "bootstrap CI coverage study against the truth");
    cov.model.add_to(cov_cmd);
    cov_cmd->add_option("-n,--n", cov.n)->capture_default_str();
    cov_cmd->add_option("--reps", cov.reps)->capture_default_str();
    cov_cmd->add_option("--burn-in", cov.burn_in)->capture_default_str();
    cov_cmd->add_option("--threshold-quantile", cov.threshold_quantile)->capture_default_str();
    cov_cmd->add_option("--lags", cov.lags)->capture_default_str();
    cov_cmd->add_option("--x", cov.x)->capture_default_str();
    cov_cmd->add_option("--statistic", cov.statistic)->capture_default_str();
    cov_cmd->add_option("--conditioning", cov.conditioning)->capture_default_str();
    cov_cmd->add_option("--estimator", cov.estimator, "forward|backward|both")
        ->capture_default_str();
    cov_cmd->add_option("--schemes", cov.schemes, "multiplier|stationary|both")
        ->capture_default_str();
    cov_cmd->add_option("--block", cov.block)->capture_default_str();
    cov_cmd->add_option("--replicates", cov.replicates, "bootstrap replicates B")
        ->capture_default_str();
    cov_cmd->add_option("--level", cov.level)->capture_default_str();
    cov_cmd->add_option("--rescale-from", cov.rescale_from)
        ->each([&cov](const std::string&) { cov.rescale_set = true; });
    cov_cmd->add_option("--seed", cov.seed)->capture_default_str();
    cov_cmd->add_option("--oracle-seed", cov.oracle_seed)->capture_default_str();
    cov_cmd->add_option("--oracle-reps", cov.oracle_reps)->capture_default_str();
    cov_cmd->add_option("--oracle-length", cov.oracle_length)->capture_default_str();
    cov_cmd->add_option("--oracle-threshold", cov.oracle_threshold)->capture_default_str();
    cov_cmd->add_option("--out", cov.out)->capture_default_str();

    IndependenceCmd ind;
    auto* ind_cmd = app.add_subcommand("independence",
                                       "reference values and quantiles under serial independence");
    ind_cmd->add_option("--input", ind.input, "series CSV")->required();
    ind_cmd->add_option("--value-column", ind.value_column)->capture_default_str();
    ind_cmd->add_option("--lags", ind.lags)->capture_default_str();
    ind_cmd->add_option("--x", ind.x)->capture_default_str();
    ind_cmd->add_option("--statistic", ind.statistic)->capture_default_str();
    ind_cmd->add_option("--conditioning", ind.conditioning)->capture_default_str();
    ind_cmd->add_option("--estimator", ind.estimator)->capture_default_str();
    ind.threshold.add_to(ind_cmd);
    ind_cmd->add_option("--mc-reps", ind.mc_reps)->capture_default_str();
    ind_cmd->add_option("--quantile-levels", ind.quantile_levels)->capture_default_str();
    ind_cmd->add_option("--seed", ind.seed)->capture_default_str();
    ind_cmd->add_option("--out", ind.out)->capture_default_str();

    ApplyCmd ap;
    auto* ap_cmd = app.add_subcommand("apply",
                                      "full application pipeline on a price/return CSV");
    ap_cmd->add_option("--input", ap.input, "price CSV (date,price)")->required();
    ap_cmd->add_option("--date-column", ap.date_column)->capture_default_str();
    ap_cmd->add_option("--price-column", ap.price_column)->capture_default_str();
    ap_cmd->add_flag("--returns", ap.values_are_returns,
                     "the value column already holds returns");
    ap_cmd->add_option("--lags", ap.lags)->capture_default_str();
    ap.threshold.add_to(ap_cmd, 0.98);
    ap_cmd->add_option("--rescale-from", ap.rescale_from)->capture_default_str();
    ap_cmd->add_flag("--no-rescale", ap.no_rescale, "use direct intervals instead");
    ap_cmd->add_option("--scheme", ap.scheme)->capture_default_str();
    ap_cmd->add_option("--block", ap.block)->capture_default_str();
    ap_cmd->add_option("--replicates", ap.replicates)->capture_default_str();
    ap_cmd->add_option("--level", ap.level)->capture_default_str();
    ap_cmd->add_option("--aparch", ap.aparch, "omega,alpha1,beta1,delta,gamma1");
    ap_cmd->add_flag("--no-fit", ap.no_fit, "skip the garch QMLE fit");
    ap_cmd->add_option("--oracle-reps", ap.oracle_reps)->capture_default_str();
    ap_cmd->add_option("--oracle-length", ap.oracle_length)->capture_default_str();
    ap_cmd->add_option("--mc-reps", ap.mc_reps, "independence-reference resamples")
        ->capture_default_str();
    ap_cmd->add_option("--seed", ap.seed)->capture_default_str();
    ap_cmd->add_option("--out", ap.out)->capture_default_str();

    try {
        app.parse(argc, argv);
        if (sim_cmd->parsed()) return run_simulate(sim, sim_cmd);
        if (est_cmd->parsed()) return run_estimate(est, est_cmd);
        if (ci_cmd->parsed()) return run_ci(ci, ci_cmd);
        if (rmse_cmd->parsed()) return run_study_rmse(rmse, rmse_cmd);
        if (cov_cmd->parsed()) return run_study_coverage(cov, cov_cmd);
        if (ind_cmd->parsed()) return run_independence(ind, ind_cmd);
        if (ap_cmd->parsed()) return run_apply(ap, ap_cmd);
        std::cerr << app.help();
        return 2;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const Error& e) {
        json j;
        j["error"] = error_name(e);
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json j;
        j["error"] = "Error";
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 1;
    }
}
