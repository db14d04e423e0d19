#pragma once

#include "sptail/bootstrap.hpp"
#include "sptail/errors.hpp"
#include "sptail/estimators.hpp"
#include "sptail/parallel.hpp"
#include "sptail/rng.hpp"
#include "sptail/series.hpp"
#include "sptail/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sptail {

/// Whether the oracle threshold is a single quantile of the pooled |X|
/// sample over all replicates, or re-resolved per replicate.
enum class OracleThreshold { pooled, per_replicate };

/// Monte Carlo oracle for pre-asymptotic truths: R simulated series of core
/// length L, probabilities evaluated in the forward representation.
struct OracleSpec {
    ModelSpec model;
    std::size_t replicates = 2000;  // R
    std::size_t length = 10000;     // L (core length per series)
    double threshold_q = 0.95;
    OracleThreshold threshold_mode = OracleThreshold::pooled;
    std::size_t burn_in = 2000;
    std::uint64_t seed = 1;
};

/// One target probability for the oracle.
struct OracleCell {
    Conditioning conditioning = Conditioning::absolute;
    Statistic statistic = Statistic::cdf;
    int lag = 1;
    double x = 1.0;
};

struct OracleResult {
    std::vector<double> values;              // per cell: mean over replicates
    std::vector<double> std_errors;          // per cell: sd / sqrt(used)
    std::vector<std::size_t> used;           // per cell
    std::vector<std::size_t> skipped;        // per cell (no exceedances)
    double threshold = 0.0;                  // pooled u, or mean of per-replicate u
    std::vector<std::vector<double>> replicate_values;  // [cell][rep], NaN = skipped (optional)
};

namespace detail {

inline int max_abs_lag(std::span<const OracleCell> cells) {
    int t = 1;
    for (const auto& c : cells) t = std::max(t, std::abs(c.lag));
    return t;
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace detail

/// Evaluates every cell's pre-asymptotic probability under the spec's model.
/// Replicate k runs on derive_seed(seed, k); the reduction is sequential, so
/// results are identical for any thread count. In pooled mode the series are
/// generated twice: once to pool |X| for the threshold, once to estimate
/// (regeneration keeps the memory footprint at R*L doubles).
[[nodiscard]] inline OracleResult oracle_table(const OracleSpec& spec,
                                               std::span<const OracleCell> cells,
                                               bool keep_replicates = false) {
    if (spec.replicates < 1 || spec.length < 1) throw InvalidParams("oracle needs R, L >= 1");
    if (cells.empty()) return {};
    const int tilde = detail::max_abs_lag(cells);
    const std::size_t R = spec.replicates;
    const std::size_t L = spec.length;

    const auto make_plan = [&](std::size_t r) {
        SimulationPlan plan;
        plan.model = spec.model;
        plan.length = L + 2 * static_cast<std::size_t>(tilde);
        plan.burn_in = spec.burn_in;
        plan.seed = derive_seed(spec.seed, r);
        return plan;
    };

    double pooled_u = 0.0;
    if (spec.threshold_mode == OracleThreshold::pooled) {
        std::vector<double> pool(R * L);
        detail::parallel_for(R, [&](std::size_t r) {
            const SeriesWindow w(simulate(make_plan(r)), tilde);
            const auto core = w.core();
            for (std::size_t i = 0; i < L; ++i) pool[r * L + i] = std::abs(core[i]);
        });
        pooled_u = empirical_quantile(std::move(pool), spec.threshold_q);
        if (!(pooled_u > 0.0)) throw InvalidParams("pooled oracle threshold is not positive");
    }

    const std::size_t C = cells.size();
    std::vector<double> values(R * C, detail::nan());
    std::vector<double> thresholds(R, detail::nan());
    detail::parallel_for(R, [&](std::size_t r) {
        const SeriesWindow w(simulate(make_plan(r)), tilde);
        double u = pooled_u;
        if (spec.threshold_mode == OracleThreshold::per_replicate) {
            u = empirical_quantile(w.abs_core(), spec.threshold_q);
            if (!(u > 0.0)) return;  // whole replicate unusable
        }
        thresholds[r] = u;
        for (std::size_t c = 0; c < C; ++c) {
            StatisticSpec s;
            s.estimator = EstimatorKind::forward;  // truths live in the forward representation
            s.conditioning = cells[c].conditioning;
            s.statistic = cells[c].statistic;
            s.lag = cells[c].lag;
            s.x = cells[c].x;
            try {
                values[r * C + c] = estimate_statistic(w, u, s);
            } catch (const NoExceedances&) {
            }
        }
    });

    OracleResult out;
    out.values.assign(C, detail::nan());
    out.std_errors.assign(C, detail::nan());
    out.used.assign(C, 0);
    out.skipped.assign(C, 0);
    if (keep_replicates) out.replicate_values.assign(C, std::vector<double>(R, detail::nan()));
    double u_sum = 0.0;
    std::size_t u_cnt = 0;
    for (std::size_t r = 0; r < R; ++r)
        if (std::isfinite(thresholds[r])) {
            u_sum += thresholds[r];
            ++u_cnt;
        }
    out.threshold = u_cnt ? u_sum / static_cast<double>(u_cnt) : detail::nan();

    for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const double v = values[r * C + c];
            if (keep_replicates) out.replicate_values[c][r] = v;
            if (std::isfinite(v)) {
                sum += v;
                ++used;
            }
        }
        out.used[c] = used;
        out.skipped[c] = R - used;
        if (used == 0) continue;
        const double mean = sum / static_cast<double>(used);
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            const double v = values[r * C + c];
            if (std::isfinite(v)) ss += (v - mean) * (v - mean);
        }
        out.values[c] = mean;
        out.std_errors[c] = used > 1
                                ? std::sqrt(ss / static_cast<double>(used - 1)
                                            / static_cast<double>(used))
                                : detail::nan();
    }
    return out;
}

/// The pre-asymptotic probability for a single (x, lag) cell.
[[nodiscard]] inline double preasymptotic_truth(const OracleSpec& spec, double x, int t,
                                                Statistic stat = Statistic::cdf,
                                                Conditioning cond = Conditioning::absolute) {
    const OracleCell cell{cond, stat, t, x};
    return oracle_table(spec, std::span<const OracleCell>(&cell, 1)).values.at(0);
}

/// One row of a study report; optionals are filled by the study that
/// produced the row.
struct StudyCell {
    std::string study;      // "rmse" or "coverage"
    std::string scheme;     // coverage: resampling scheme description
    std::string estimator;  // "forward" / "backward"
    Conditioning conditioning = Conditioning::absolute;
    Statistic statistic = Statistic::cdf;
    int lag = 1;
    double x = 0.0;
    double threshold_q = 0.95;
    double truth = 0.0;
    std::optional<double> bias, sd, rmse, rmse_ratio;
    std::optional<double> coverage, median_width;
    std::size_t replicates = 0;  // usable replicates behind the row
    std::size_t skipped = 0;     // replicates without exceedances
    std::size_t failed = 0;      // replicates whose CI construction failed
    std::size_t discarded = 0;   // bootstrap replicates discarded inside CIs
};

struct StudyReport {
    std::vector<StudyCell> cells;
    std::string model;
    std::size_t reps = 0;
    std::size_t bootstrap_replicates = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t oracle_replicates = 0;
    std::size_t oracle_length = 0;
};

/// Bias/sd/RMSE study of the forward and backward cdf estimators against the
/// pre-asymptotic truth (paper-figure protocol: per-series empirical
/// quantile threshold, Hill-estimated index for the backward estimator).
struct RmseStudyConfig {
    ModelSpec model;
    std::size_t n = 2000;
    double threshold_q = 0.95;
    std::vector<int> lags{1};
    std::vector<double> grid{-2.0, -1.0, 1.0, 2.0};
    std::size_t reps = 300;
    std::size_t burn_in = 2000;
    std::uint64_t seed = 1;
    std::size_t oracle_replicates = 2000;
    std::size_t oracle_length = 10000;
    OracleThreshold oracle_threshold_mode = OracleThreshold::pooled;
    std::uint64_t oracle_seed = 2;
};

[[nodiscard]] inline StudyReport study_estimators(const RmseStudyConfig& cfg) {
    if (cfg.reps < 1) throw InvalidParams("study needs reps >= 1");
    if (cfg.lags.empty() || cfg.grid.empty()) throw InvalidParams("study needs lags and grid");
    int tilde = 1;
    for (const int t : cfg.lags) {
        if (t == 0) throw InvalidParams("lags must be nonzero");
        tilde = std::max(tilde, std::abs(t));
    }

    std::vector<OracleCell> cells;
    for (const int t : cfg.lags)
        for (const double x : cfg.grid)
            cells.push_back(OracleCell{Conditioning::absolute, Statistic::cdf, t, x});
    OracleSpec ospec;
    ospec.model = cfg.model;
    ospec.replicates = cfg.oracle_replicates;
    ospec.length = cfg.oracle_length;
    ospec.threshold_q = cfg.threshold_q;
    ospec.threshold_mode = cfg.oracle_threshold_mode;
    ospec.burn_in = cfg.burn_in;
    ospec.seed = cfg.oracle_seed;
    const auto truth = oracle_table(ospec, cells);

    const std::size_t C = cells.size();
    // est values: [rep][2*C], forward block then backward block
    std::vector<double> est(cfg.reps * 2 * C, detail::nan());
    std::vector<char> rep_ok(cfg.reps, 0);
    detail::parallel_for(cfg.reps, [&](std::size_t r) {
        SimulationPlan plan;
        plan.model = cfg.model;
        plan.length = cfg.n + 2 * static_cast<std::size_t>(tilde);
        plan.burn_in = cfg.burn_in;
        plan.seed = derive_seed(cfg.seed, r);
        const SeriesWindow w(simulate(plan), tilde);
        try {
            const double u = empirical_quantile(w.abs_core(), cfg.threshold_q);
            const double alpha = hill_alpha(w, u).alpha;
            for (std::size_t c = 0; c < C; ++c) {
                est[(r * 2) * C + c] = forward_cdf(w, u, cells[c].lag, cells[c].x).value;
                est[(r * 2 + 1) * C + c] =
                    backward_cdf(w, u, cells[c].lag, cells[c].x, alpha).value;
            }
            rep_ok[r] = 1;
        } catch (const NoExceedances&) {
        } catch (const DegenerateLogs&) {
        }
    });

    StudyReport report;
    report.model = cfg.model.describe();
    report.reps = cfg.reps;
    report.n = cfg.n;
    report.seed = cfg.seed;
    report.oracle_replicates = cfg.oracle_replicates;
    report.oracle_length = cfg.oracle_length;

    std::vector<double> rmse_fwd(C, detail::nan());
    for (int e = 0; e < 2; ++e) {
        for (std::size_t c = 0; c < C; ++c) {
            double sum = 0.0, sumsq_err = 0.0;
            std::size_t used = 0;
            for (std::size_t r = 0; r < cfg.reps; ++r) {
                if (!rep_ok[r]) continue;
                const double v = est[(r * 2 + static_cast<std::size_t>(e)) * C + c];
                sum += v;
                const double err = v - truth.values[c];
                sumsq_err += err * err;
                ++used;
            }
            StudyCell cell;
            cell.study = "rmse";
            cell.estimator = e == 0 ? "forward" : "backward";
            cell.statistic = Statistic::cdf;
            cell.lag = cells[c].lag;
            cell.x = cells[c].x;
            cell.threshold_q = cfg.threshold_q;
            cell.truth = truth.values[c];
            cell.replicates = used;
            cell.skipped = cfg.reps - used;
            if (used > 0) {
                const double mean = sum / static_cast<double>(used);
                const double bias = mean - truth.values[c];
                const double mse = sumsq_err / static_cast<double>(used);
                const double var = std::max(mse - bias * bias, 0.0);
                cell.bias = bias;
                cell.sd = std::sqrt(var);
                cell.rmse = std::sqrt(mse);
                if (e == 0) rmse_fwd[c] = *cell.rmse;
                if (e == 1 && rmse_fwd[c] > 0.0) cell.rmse_ratio = *cell.rmse / rmse_fwd[c];
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

/// Coverage study of bootstrap confidence intervals against the
/// pre-asymptotic truth (paper-figure protocol).
struct CoverageStudyConfig {
    ModelSpec model;
    std::size_t n = 2000;
    double threshold_q = 0.95;
    std::vector<int> lags{1, 2, 3, 4, 5};
    double x = 1.0;
    Statistic statistic = Statistic::abs_upper_tail;
    Conditioning conditioning = Conditioning::absolute;
    std::vector<EstimatorKind> estimators{EstimatorKind::forward, EstimatorKind::backward};
    std::vector<BootstrapScheme> schemes;  // replicate counts live inside
    double level = 0.95;
    std::optional<double> rescale_from_q;  // build CIs at this lower quantile, then rescale
    std::size_t reps = 300;
    std::size_t burn_in = 2000;
    std::uint64_t seed = 1;
    std::size_t oracle_replicates = 2000;
    std::size_t oracle_length = 10000;
    OracleThreshold oracle_threshold_mode = OracleThreshold::pooled;
    std::uint64_t oracle_seed = 2;
};

[[nodiscard]] inline StudyReport study_coverage(const CoverageStudyConfig& cfg) {
    if (cfg.reps < 1) throw InvalidParams("study needs reps >= 1");
    if (cfg.schemes.empty() || cfg.lags.empty() || cfg.estimators.empty())
        throw InvalidParams("study needs schemes, lags, estimators");
    int tilde = 1;
    for (const int t : cfg.lags) {
        if (t == 0) throw InvalidParams("lags must be nonzero");
        tilde = std::max(tilde, std::abs(t));
    }

    std::vector<OracleCell> cells;
    for (const int t : cfg.lags)
        cells.push_back(OracleCell{cfg.conditioning, cfg.statistic, t, cfg.x});
    OracleSpec ospec;
    ospec.model = cfg.model;
    ospec.replicates = cfg.oracle_replicates;
    ospec.length = cfg.oracle_length;
    ospec.threshold_q = cfg.threshold_q;
    ospec.threshold_mode = cfg.oracle_threshold_mode;
    ospec.burn_in = cfg.burn_in;
    ospec.seed = cfg.oracle_seed;
    const auto truth = oracle_table(ospec, cells);

    // combo = (scheme, estimator, lag), lag fastest
    const std::size_t n_lag = cfg.lags.size();
    const std::size_t n_combo = cfg.schemes.size() * cfg.estimators.size() * n_lag;
    struct RepOutcome {
        char state = 0;  // 0 = skipped series, 1 = ok, 2 = CI failed
        bool covered = false;
        double width = 0.0;
        std::size_t discarded = 0;
    };
    std::vector<RepOutcome> outcomes(cfg.reps * n_combo);

    detail::parallel_for(cfg.reps, [&](std::size_t r) {
        const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
        SimulationPlan plan;
        plan.model = cfg.model;
        plan.length = cfg.n + 2 * static_cast<std::size_t>(tilde);
        plan.burn_in = cfg.burn_in;
        plan.seed = derive_seed(rep_seed, 0);
        const SeriesWindow w(simulate(plan), tilde);
        double u = 0.0;
        try {
            u = resolve_threshold(w, ThresholdSpec::quantile(cfg.threshold_q));
        } catch (const Error&) {
            return;  // whole replicate skipped
        }
        std::optional<ThresholdSpec> rescale;
        if (cfg.rescale_from_q) rescale = ThresholdSpec::quantile(*cfg.rescale_from_q);

        // one batched bootstrap pass per scheme covers the whole
        // estimator x lag panel on shared draws
        std::vector<StatisticSpec> specs;
        specs.reserve(cfg.estimators.size() * n_lag);
        for (const auto est : cfg.estimators)
            for (const int lag : cfg.lags)
                specs.push_back(StatisticSpec{est, cfg.conditioning, cfg.statistic, lag, cfg.x});

        for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
            const std::size_t base = r * n_combo + s * specs.size();
            BootstrapScheme scheme = cfg.schemes[s];
            scheme.seed = derive_seed(rep_seed, 1 + s);
            try {
                const auto cis = bootstrap_ci_batch(w, u, specs, scheme, cfg.level, rescale);
                for (std::size_t k = 0; k < specs.size(); ++k) {
                    auto& slot = outcomes[base + k];
                    if (!cis[k]) {
                        slot.state = 2;
                        continue;
                    }
                    slot.state = 1;
                    slot.covered = cis[k]->covers(truth.values[k % n_lag]);
                    slot.width = cis[k]->width();
                    slot.discarded = cis[k]->discarded;
                }
            } catch (const Error&) {
                for (std::size_t k = 0; k < specs.size(); ++k) outcomes[base + k].state = 2;
            }
        }
    });

    StudyReport report;
    report.model = cfg.model.describe();
    report.reps = cfg.reps;
    report.n = cfg.n;
    report.seed = cfg.seed;
    report.oracle_replicates = cfg.oracle_replicates;
    report.oracle_length = cfg.oracle_length;
    if (!cfg.schemes.empty()) report.bootstrap_replicates = cfg.schemes.front().replicates;

    std::size_t combo = 0;
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
        for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
            for (std::size_t l = 0; l < n_lag; ++l, ++combo) {
                StudyCell cell;
                cell.study = "coverage";
                cell.scheme = cfg.schemes[s].describe()
                              + (cfg.rescale_from_q ? "+rescaled" : "");
                cell.estimator = to_string(cfg.estimators[e]);
                cell.conditioning = cfg.conditioning;
                cell.statistic = cfg.statistic;
                cell.lag = cfg.lags[l];
                cell.x = cfg.x;
                cell.threshold_q = cfg.threshold_q;
                cell.truth = truth.values[l];
                std::size_t used = 0, covered = 0, failed = 0, skipped = 0, discarded = 0;
                std::vector<double> widths;
                widths.reserve(cfg.reps);
                for (std::size_t r = 0; r < cfg.reps; ++r) {
                    const auto& o = outcomes[r * n_combo + combo];
                    if (o.state == 0) {
                        ++skipped;
                    } else if (o.state == 2) {
                        ++failed;
                    } else {
                        ++used;
                        covered += o.covered ? 1 : 0;
                        widths.push_back(o.width);
                        discarded += o.discarded;
                    }
                }
                cell.replicates = used;
                cell.skipped = skipped;
                cell.failed = failed;
                cell.discarded = discarded;
                if (used > 0) {
                    cell.coverage = static_cast<double>(covered) / static_cast<double>(used);
                    cell.median_width = empirical_quantile(std::move(widths), 0.5);
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

/// Result of the serial-independence reference construction.
struct IndependenceReference {
    double mc_value = 0.0;             // mean of the estimator over iid resamples
    std::optional<double> analytic;    // (k/n)/2, available for |.|-conditioning at x=1
    std::size_t used = 0;
    std::size_t skipped = 0;
};

/// Estimates the target probability under serial independence by classical
/// iid resampling (draw with replacement from the core observations) and
/// averaging the forward-representation estimator at the same threshold.
/// The analytic value P(|X_0| > u)/2, estimated by its empirical exceedance
/// rate, accompanies the MC value for the absolute-conditioned aftershock
/// probability at x = 1; with sign conditioning no analytic form exists.
[[nodiscard]] inline IndependenceReference independence_reference(
    const SeriesWindow& w, double u, int t, double x, Conditioning cond, Statistic stat,
    std::size_t mc_reps, std::uint64_t seed) {
    detail::require_lag(w, t);
    IndependenceReference out;
    if (cond == Conditioning::absolute && stat == Statistic::abs_upper_tail && x == 1.0) {
        const auto k = exceedance_indices(w, u, Conditioning::absolute).size();
        out.analytic = 0.5 * static_cast<double>(k) / static_cast<double>(w.n());
    }
    if (mc_reps == 0) {
        if (!out.analytic)
            throw InvalidParams("no analytic independence value for this conditioning; "
                                "mc_reps must be >= 1");
        out.mc_value = *out.analytic;
        return out;
    }

    const std::size_t need = w.n() + 2 * static_cast<std::size_t>(w.tilde());
    const auto core = w.core();
    std::vector<double> sums(mc_reps, detail::nan());
    detail::parallel_for(mc_reps, [&](std::size_t rep) {
        Rng rng(derive_seed(seed, rep));
        std::vector<double> values(need);
        for (auto& v : values) v = core[rng.uniform_below(core.size())];
        const SeriesWindow ws(std::move(values), w.tilde());
        StatisticSpec sp;
        sp.estimator = EstimatorKind::forward;
        sp.conditioning = cond;
        sp.statistic = stat;
        sp.lag = t;
        sp.x = x;
        try {
            sums[rep] = estimate_statistic(ws, u, sp);
        } catch (const NoExceedances&) {
        }
    });
    double total = 0.0;
    for (const double v : sums) {
        if (std::isfinite(v)) {
            total += v;
            ++out.used;
        } else {
            ++out.skipped;
        }
    }
    if (out.used == 0) throw NoExceedances("all iid resamples lacked exceedances");
    out.mc_value = total / static_cast<double>(out.used);
    return out;
}

/// Empirical `level` quantile of an estimator under serial independence
/// (iid resampling); the reference lines of the application plots. The
/// backward estimator recomputes its Hill index on every resample.
[[nodiscard]] inline double independence_quantile(const SeriesWindow& w, double u, int t, double x,
                                                  EstimatorKind estimator, Conditioning cond,
                                                  Statistic stat, double level,
                                                  std::size_t mc_reps, std::uint64_t seed) {
    detail::require_lag(w, t);
    if (!(level > 0.0) || level > 1.0) throw InvalidParams("quantile level must be in (0, 1]");
    if (mc_reps < 1) throw InvalidParams("mc_reps must be >= 1");

    const std::size_t need = w.n() + 2 * static_cast<std::size_t>(w.tilde());
    const auto core = w.core();
    std::vector<double> draws(mc_reps, detail::nan());
    detail::parallel_for(mc_reps, [&](std::size_t rep) {
        Rng rng(derive_seed(seed, rep));
        std::vector<double> values(need);
        for (auto& v : values) v = core[rng.uniform_below(core.size())];
        const SeriesWindow ws(std::move(values), w.tilde());
        StatisticSpec sp;
        sp.estimator = estimator;
        sp.conditioning = cond;
        sp.statistic = stat;
        sp.lag = t;
        sp.x = x;
        try {
            draws[rep] = estimate_statistic(ws, u, sp);
        } catch (const NoExceedances&) {
        } catch (const DegenerateLogs&) {
        }
    });
    std::vector<double> ok;
    ok.reserve(mc_reps);
    for (const double v : draws)
        if (std::isfinite(v)) ok.push_back(v);
    if (ok.empty()) throw NoExceedances("all iid resamples lacked exceedances");
    return empirical_quantile(std::move(ok), level);
}

}  // namespace sptail
