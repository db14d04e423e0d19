#pragma once

#include "sptail/errors.hpp"
#include "sptail/series.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sptail {

enum class EstimatorKind { forward, backward };

/// Which functional of the lag-t spectral tail variable is estimated:
///   cdf            P(T_t <= x)
///   upper_tail     P(T_t > x)
///   abs_upper_tail P(|T_t| > x), x >= 0 (the aftershock probability at x = 1)
enum class Statistic { cdf, upper_tail, abs_upper_tail };

[[nodiscard]] inline const char* to_string(EstimatorKind e) noexcept {
    return e == EstimatorKind::forward ? "forward" : "backward";
}

[[nodiscard]] inline const char* to_string(Statistic s) noexcept {
    switch (s) {
        case Statistic::cdf: return "cdf";
        case Statistic::upper_tail: return "upper";
        case Statistic::abs_upper_tail: return "abs-upper";
    }
    return "?";
}

/// Hill-type tail-index estimate together with its inputs.
struct AlphaEstimate {
    double alpha = 0.0;
    std::size_t exceedance_count = 0;
    double threshold = 0.0;
};

/// One estimated value of the spectral tail process law at (x, lag).
struct TailEstimate {
    EstimatorKind estimator = EstimatorKind::forward;
    Conditioning conditioning = Conditioning::absolute;
    int lag = 1;
    double x = 0.0;
    double value = 0.0;
    std::size_t exceedance_count = 0;
    std::optional<double> alpha_used;  // backward only
};

namespace detail {

/// One core index contributing to a tail statistic. For backward statistics
/// the numerator weight is pow(num_base, alpha), applied at evaluation time;
/// for forward statistics the numerator contribution is the indicator itself.
struct StatTerm {
    std::size_t i = 0;       // 1-based core index
    double num_base = 1.0;   // weight base (backward), always > 0 when active
    bool num_active = false;
    bool den_active = false;
};

/// Sparse representation of a tail statistic: value = offset + scale * N/D,
/// with N and D accumulated over `terms` in increasing index order. Indices
/// with neither indicator set are omitted (their contribution is exactly 0),
/// so any evaluation over this list reproduces the dense left-to-right sum
/// bit for bit.
struct StatTerms {
    double offset = 0.0;
    double scale = 1.0;
    bool backward = false;
    std::size_t n = 0;  // core length the terms were collected on
    std::vector<StatTerm> terms;
};

inline void require_lag(const SeriesWindow& w, int t) {
    if (t == 0 || std::abs(t) > w.tilde())
        throw InvalidParams("lag must be nonzero with |t| <= tilde");
}

/// Walks the core once and materializes the indicator/weight terms of the
/// requested statistic. Implements Eqs.-style displays verbatim:
///  - forward: ratios X_{i+t} / (cond-signed X_i), indicator vs x;
///  - backward absolute: weights |X_{i-t}/X_i|^a with the two x-branches;
///  - backward sign-conditioned: the +-display, including its asymmetric
///    conditioning (the x<0 numerator sums over X_i < -u while the
///    denominator counts +-X_i > u; this mirrors the time-change identity,
///    which swaps the conditioning sign across branches, and is deliberate).
/// Terms with X_{i-t} = 0 never activate a backward numerator (the indicator
/// is evaluated first; the weight base is then strictly positive).
inline StatTerms collect_terms(const SeriesWindow& w, double u, int t, double x,
                               EstimatorKind est, Conditioning cond, Statistic stat) {
    require_lag(w, t);
    if (!(u > 0.0)) throw InvalidParams("threshold must be > 0");
    if (stat == Statistic::abs_upper_tail && x < 0.0)
        throw InvalidParams("abs_upper_tail requires x >= 0");

    StatTerms out;
    out.backward = est == EstimatorKind::backward;
    out.n = w.n();
    const double s = cond == Conditioning::negative_shock ? -1.0 : 1.0;
    const bool absolute = cond == Conditioning::absolute;

    for (std::size_t i = 1; i <= w.n(); ++i) {
        const double xi = w.x(static_cast<std::ptrdiff_t>(i));
        StatTerm term;
        term.i = i;
        term.den_active = absolute ? std::abs(xi) > u : s * xi > u;

        if (est == EstimatorKind::forward) {
            if (term.den_active) {
                const double denom = absolute ? std::abs(xi) : s * xi;
                const double ratio = w.x(static_cast<std::ptrdiff_t>(i) + t) / denom;
                switch (stat) {
                    case Statistic::cdf: term.num_active = ratio <= x; break;
                    case Statistic::upper_tail: term.num_active = ratio > x; break;
                    case Statistic::abs_upper_tail: term.num_active = std::abs(ratio) > x; break;
                }
            }
        } else {
            const double xprev = w.x(static_cast<std::ptrdiff_t>(i) - t);
            if (xprev != 0.0) {
                if (absolute) {
                    if (term.den_active) {
                        const double ratio = xi / std::abs(xprev);
                        const bool hit = stat == Statistic::cdf
                                             ? (x >= 0.0 ? ratio > x : ratio <= x)
                                         : stat == Statistic::upper_tail
                                             ? (x >= 0.0 ? ratio > x : ratio <= x)
                                             : (ratio > x || ratio <= -x);
                        if (hit) {
                            term.num_active = true;
                            term.num_base = std::abs(xprev / xi);
                        }
                    }
                } else {
                    // Sign-conditioned display: upper-sign events live on
                    // X_i > u, lower-branch events on X_i < -u.
                    const double ratio = s * xi / xprev;
                    const bool upper_event = xi > u;
                    const bool lower_event = xi < -u;
                    bool hit_upper = false, hit_lower = false;
                    switch (stat) {
                        case Statistic::cdf:
                        case Statistic::upper_tail:
                            if (x >= 0.0)
                                hit_upper = upper_event && ratio > x;
                            else
                                hit_lower = lower_event && ratio <= x;
                            break;
                        case Statistic::abs_upper_tail:
                            hit_upper = upper_event && ratio > x;
                            hit_lower = lower_event && ratio <= -x;
                            break;
                    }
                    if (hit_upper) {
                        term.num_active = true;
                        term.num_base = s * xprev / xi;
                    } else if (hit_lower) {
                        term.num_active = true;
                        term.num_base = -s * xprev / xi;
                    }
                }
            }
        }
        if (term.num_active || term.den_active) out.terms.push_back(term);
    }

    // Complement bookkeeping: the backward cdf on x >= 0 and the backward
    // upper tail on x < 0 are one minus their weighted ratio.
    if (est == EstimatorKind::backward) {
        const bool complement = (stat == Statistic::cdf && x >= 0.0) ||
                                (stat == Statistic::upper_tail && x < 0.0);
        if (complement) {
            out.offset = 1.0;
            out.scale = -1.0;
        }
    }
    return out;
}

struct StatValue {
    double value = 0.0;
    std::size_t den_count = 0;
};

/// Plain evaluation over core indices 1..i_end (flat left-to-right sum).
inline StatValue eval_plain(const StatTerms& T, double alpha, std::size_t i_end) {
    double num = 0.0, den = 0.0;
    std::size_t k = 0;
    for (const auto& t : T.terms) {
        if (t.i > i_end) break;
        if (t.den_active) {
            den += 1.0;
            ++k;
        }
        if (t.num_active) num += T.backward ? std::pow(t.num_base, alpha) : 1.0;
    }
    if (k == 0) throw NoExceedances();
    return {T.offset + T.scale * (num / den), k};
}

/// Hill ingredients: per absolute exceedance, log(|X_i|/u), in index order.
struct HillTerms {
    std::size_t n = 0;
    std::vector<std::pair<std::size_t, double>> logs;  // (core index, log excess)
};

inline HillTerms collect_hill_terms(const SeriesWindow& w, double u) {
    if (!(u > 0.0)) throw InvalidParams("threshold must be > 0");
    HillTerms out;
    out.n = w.n();
    for (std::size_t i = 1; i <= w.n(); ++i) {
        const double a = std::abs(w.x(static_cast<std::ptrdiff_t>(i)));
        if (a > u) out.logs.emplace_back(i, std::log(a / u));
    }
    return out;
}

}  // namespace detail

/// Hill-type estimator of the index of regular variation:
/// alpha = (number of |X_i| > u) / (sum of log(|X_i|/u) over those i).
[[nodiscard]] inline AlphaEstimate hill_alpha(const SeriesWindow& w, double u) {
    const auto terms = detail::collect_hill_terms(w, u);
    if (terms.logs.empty()) throw NoExceedances();
    double num = 0.0, den = 0.0;
    for (const auto& [i, lg] : terms.logs) {
        num += 1.0;
        den += lg;
    }
    if (!(den > 0.0)) throw DegenerateLogs();
    return {num / den, terms.logs.size(), u};
}

/// Empirical weight of the upper tail: (# X_i > u) / (# |X_i| > u).
[[nodiscard]] inline double p_hat(const SeriesWindow& w, double u) {
    if (!(u > 0.0)) throw InvalidParams("threshold must be > 0");
    std::size_t pos = 0, all = 0;
    for (std::size_t i = 1; i <= w.n(); ++i) {
        const double v = w.x(static_cast<std::ptrdiff_t>(i));
        if (std::abs(v) > u) {
            ++all;
            if (v > u) ++pos;
        }
    }
    if (all == 0) throw NoExceedances();
    return static_cast<double>(pos) / static_cast<double>(all);
}

/// Forward estimator of P(T_t <= x | conditioning): the empirical frequency
/// of X_{i+t} / (signed X_i) <= x among exceedances.
[[nodiscard]] inline TailEstimate forward_cdf(const SeriesWindow& w, double u, int t, double x,
                                              Conditioning cond = Conditioning::absolute) {
    const auto terms = detail::collect_terms(w, u, t, x, EstimatorKind::forward, cond,
                                             Statistic::cdf);
    const auto v = detail::eval_plain(terms, 0.0, w.n());
    return {EstimatorKind::forward, cond, t, x, v.value, v.den_count, std::nullopt};
}

/// Backward estimator of P(T_t <= x | conditioning), weighting lag -t
/// exceedance ratios by |X_{i-t}/X_i|^alpha (time-change representation).
/// alpha is always passed explicitly; callers typically inject
/// hill_alpha(w, u).alpha. Values may leave [0, 1] for x < 1 in finite
/// samples; no clamping here.
[[nodiscard]] inline TailEstimate backward_cdf(const SeriesWindow& w, double u, int t, double x,
                                               double alpha,
                                               Conditioning cond = Conditioning::absolute) {
    if (!(alpha > 0.0)) throw InvalidAlpha();
    const auto terms = detail::collect_terms(w, u, t, x, EstimatorKind::backward, cond,
                                             Statistic::cdf);
    const auto v = detail::eval_plain(terms, alpha, w.n());
    return {EstimatorKind::backward, cond, t, x, v.value, v.den_count, alpha};
}

/// Point specification of one estimated functional, as consumed by the
/// bootstrap and the study harnesses.
struct StatisticSpec {
    EstimatorKind estimator = EstimatorKind::forward;
    Conditioning conditioning = Conditioning::absolute;
    Statistic statistic = Statistic::cdf;
    int lag = 1;
    double x = 1.0;
};

/// Evaluates an arbitrary statistic; backward estimators use the supplied
/// alpha, or the Hill estimate at u when absent.
[[nodiscard]] inline double estimate_statistic(const SeriesWindow& w, double u,
                                               const StatisticSpec& spec,
                                               std::optional<double> alpha = std::nullopt) {
    double a = 0.0;
    if (spec.estimator == EstimatorKind::backward) {
        a = alpha ? *alpha : hill_alpha(w, u).alpha;
        if (!(a > 0.0)) throw InvalidAlpha();
    }
    const auto terms = detail::collect_terms(w, u, spec.lag, spec.x, spec.estimator,
                                             spec.conditioning, spec.statistic);
    return detail::eval_plain(terms, a, w.n()).value;
}

/// How the backward estimator obtains its tail index inside a sweep.
struct AlphaPolicy {
    enum class Kind { hill, fixed };
    Kind kind = Kind::hill;
    double value = 0.0;

    [[nodiscard]] static AlphaPolicy hill() { return {Kind::hill, 0.0}; }
    [[nodiscard]] static AlphaPolicy fixed(double alpha) { return {Kind::fixed, alpha}; }
};

/// A cdf curve over an x-grid and a set of lags; cells are stored lag-major
/// (for each lag, all grid points in ascending order).
struct EstimateCurve {
    EstimatorKind estimator = EstimatorKind::forward;
    Conditioning conditioning = Conditioning::absolute;
    std::vector<double> grid;
    std::vector<int> lags;
    std::vector<TailEstimate> cells;
};

/// Evaluates the cdf estimator over grid x lags. The Hill index is computed
/// once per call and reused across cells.
[[nodiscard]] inline EstimateCurve sweep(const SeriesWindow& w, double u, EstimatorKind est,
                                         Conditioning cond, const std::vector<int>& lags,
                                         const std::vector<double>& grid,
                                         const AlphaPolicy& policy = AlphaPolicy::hill()) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i - 1] < grid[i])) throw InvalidParams("grid must be strictly increasing");

    EstimateCurve curve;
    curve.estimator = est;
    curve.conditioning = cond;
    curve.grid = grid;
    curve.lags = lags;
    if (lags.empty() || grid.empty()) return curve;

    double alpha = 0.0;
    if (est == EstimatorKind::backward)
        alpha = policy.kind == AlphaPolicy::Kind::hill ? hill_alpha(w, u).alpha : policy.value;

    curve.cells.reserve(lags.size() * grid.size());
    for (const int t : lags)
        for (const double x : grid)
            curve.cells.push_back(est == EstimatorKind::forward
                                      ? forward_cdf(w, u, t, x, cond)
                                      : backward_cdf(w, u, t, x, alpha, cond));
    return curve;
}

}  // namespace sptail
