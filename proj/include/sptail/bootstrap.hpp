#pragma once

#include "sptail/errors.hpp"
#include "sptail/estimators.hpp"
#include "sptail/rng.hpp"
#include "sptail/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sptail {

/// Law of the multiplier variables xi_j (mean 0, variance 1). `zero` is a
/// degenerate test-only law that turns every weight into 1.
enum class MultiplierLaw { standard_normal, zero };

/// Resampling scheme plus replication bookkeeping.
struct BootstrapScheme {
    enum class Kind { stationary, multiplier };
    Kind kind = Kind::multiplier;
    double p = 0.01;              // stationary: geometric parameter, mean block length 1/p
    std::size_t block = 100;      // multiplier: block length r
    MultiplierLaw law = MultiplierLaw::standard_normal;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;

    [[nodiscard]] static BootstrapScheme stationary(double p, std::size_t B, std::uint64_t seed) {
        BootstrapScheme s;
        s.kind = Kind::stationary;
        s.p = p;
        s.replicates = B;
        s.seed = seed;
        return s;
    }
    [[nodiscard]] static BootstrapScheme multiplier(std::size_t block, std::size_t B,
                                                    std::uint64_t seed,
                                                    MultiplierLaw law = MultiplierLaw::standard_normal) {
        BootstrapScheme s;
        s.kind = Kind::multiplier;
        s.block = block;
        s.law = law;
        s.replicates = B;
        s.seed = seed;
        return s;
    }

    [[nodiscard]] std::string describe() const {
        if (kind == Kind::stationary)
            return "stationary(p=" + std::to_string(p) + ")";
        return std::string("multiplier(r=") + std::to_string(block) + ")";
    }
};

/// Confidence interval for a pre-asymptotic tail probability.
struct BootstrapCI {
    enum class Method { reflected, rescaled };
    Method method = Method::reflected;
    double level = 0.95;
    double lower = 0.0;
    double upper = 0.0;
    double point = 0.0;
    std::size_t replicates_used = 0;
    std::size_t discarded = 0;
    std::optional<double> low_point;   // rescaled: point estimate at the lower threshold
    std::vector<double> draws;         // retained replicate values, when requested

    [[nodiscard]] bool covers(double truth) const noexcept {
        return lower <= truth && truth <= upper;
    }
    [[nodiscard]] double width() const noexcept { return upper - lower; }
};

namespace detail {

/// Appends one stationary-bootstrap block: `len` consecutive core values
/// starting at 1-based position `start`, wrapping past n via
/// (t - 1 mod n) + 1, stopping once `need` values have been drawn.
inline void append_block(std::vector<double>& out, std::span<const double> core,
                         std::size_t start, std::uint64_t len, std::size_t need) {
    const std::size_t n = core.size();
    for (std::uint64_t l = 0; l < len && out.size() < need; ++l)
        out.push_back(core[(start - 1 + l) % n]);
}

/// Weighted evaluation of a statistic with per-block weights 1 + xi_j over
/// blocks I_j = {(j-1)r+1, ..., jr}; indices beyond m*r never contribute.
/// Accumulation order matches eval_plain term for term, so xi == 0
/// reproduces the plain estimator on the first m*r indices bit for bit.
inline double eval_multiplier(const StatTerms& T, std::span<const double> xi, std::size_t r,
                              double alpha) {
    const std::size_t i_end = xi.size() * r;
    double num = 0.0, den = 0.0;
    for (const auto& t : T.terms) {
        if (t.i > i_end) break;
        const double wgt = 1.0 + xi[(t.i - 1) / r];
        if (t.den_active) den += wgt;
        if (t.num_active) num += wgt * (T.backward ? std::pow(t.num_base, alpha) : 1.0);
    }
    if (!(den > 0.0)) throw ZeroDenominator();
    return T.offset + T.scale * (num / den);
}

/// Weighted Hill estimate on the same block structure.
inline double eval_multiplier_hill(const HillTerms& H, std::span<const double> xi, std::size_t r) {
    const std::size_t i_end = xi.size() * r;
    double num = 0.0, den = 0.0;
    for (const auto& [i, lg] : H.logs) {
        if (i > i_end) break;
        const double wgt = 1.0 + xi[(i - 1) / r];
        num += wgt;
        den += wgt * lg;
    }
    if (!(num > 0.0) || !(den > 0.0)) throw ZeroDenominator("degenerate weighted Hill sums");
    return num / den;
}

inline std::size_t block_count(const SeriesWindow& w, std::size_t r) {
    if (r < 1) throw InvalidParams("block length must be >= 1");
    const std::size_t m = w.n() / r;
    if (m < 1) throw InvalidParams("block length exceeds the core length");
    return m;
}

}  // namespace detail

/// Stationary bootstrap: concatenates blocks with uniform starts and iid
/// geometric(p) lengths, wrapping around the core, until n + 2*tilde values
/// are drawn; the result is reframed as a SeriesWindow with the same lag
/// buffers. Per block the start is drawn before the length.
[[nodiscard]] inline SeriesWindow stationary_resample(const SeriesWindow& w, double p,
                                                      std::uint64_t seed) {
    if (!(p > 0.0) || p > 1.0) throw InvalidParams("stationary bootstrap p must be in (0, 1]");
    Rng rng(seed);
    const std::size_t need = w.n() + 2 * static_cast<std::size_t>(w.tilde());
    std::vector<double> values;
    values.reserve(need);
    const auto core = w.core();
    while (values.size() < need) {
        const std::size_t start = 1 + static_cast<std::size_t>(rng.uniform_below(w.n()));
        const std::uint64_t len = rng.geometric(p);
        detail::append_block(values, core, start, len, need);
    }
    return SeriesWindow(std::move(values), w.tilde());
}

/// iid multiplier draws xi_1..xi_m; deterministic per seed.
[[nodiscard]] inline std::vector<double> multiplier_weights(std::size_t m, MultiplierLaw law,
                                                            std::uint64_t seed) {
    if (m < 1) throw InvalidParams("need at least one block");
    std::vector<double> xi(m, 0.0);
    if (law == MultiplierLaw::standard_normal) {
        Rng rng(seed);
        for (auto& v : xi) v = rng.normal();
    }
    return xi;
}

/// Multiplier-bootstrapped forward estimator with block length r and
/// supplied weights (xi.size() must equal floor(n/r); the leftover tail of
/// the core is excluded from both sums).
[[nodiscard]] inline double multiplier_forward(const SeriesWindow& w, double u, int t, double x,
                                               std::size_t r, std::span<const double> xi,
                                               Conditioning cond = Conditioning::absolute,
                                               Statistic stat = Statistic::cdf) {
    if (xi.size() != detail::block_count(w, r))
        throw InvalidParams("xi must have one entry per complete block");
    const auto terms = detail::collect_terms(w, u, t, x, EstimatorKind::forward, cond, stat);
    return detail::eval_multiplier(terms, xi, r, 0.0);
}

/// Multiplier-bootstrapped Hill estimator (weighted exceedance count over
/// weighted log-excess sum).
[[nodiscard]] inline double multiplier_hill(const SeriesWindow& w, double u, std::size_t r,
                                            std::span<const double> xi) {
    if (xi.size() != detail::block_count(w, r))
        throw InvalidParams("xi must have one entry per complete block");
    return detail::eval_multiplier_hill(detail::collect_hill_terms(w, u), xi, r);
}

/// Multiplier-bootstrapped backward estimator. The tail index is the
/// weighted Hill estimate on the same xi unless alpha_star injects a fixed
/// value (test hook).
[[nodiscard]] inline double multiplier_backward(const SeriesWindow& w, double u, int t, double x,
                                                std::size_t r, std::span<const double> xi,
                                                Conditioning cond = Conditioning::absolute,
                                                Statistic stat = Statistic::cdf,
                                                std::optional<double> alpha_star = std::nullopt) {
    if (xi.size() != detail::block_count(w, r))
        throw InvalidParams("xi must have one entry per complete block");
    const double a = alpha_star ? *alpha_star
                                : detail::eval_multiplier_hill(detail::collect_hill_terms(w, u),
                                                               xi, r);
    if (!(a > 0.0)) throw InvalidAlpha();
    const auto terms = detail::collect_terms(w, u, t, x, EstimatorKind::backward, cond, stat);
    return detail::eval_multiplier(terms, xi, r, a);
}

/// Reflected interval [2*point - b, 2*point - a] from the empirical
/// ((1-level)/2, (1+level)/2) quantiles a, b of the replicate values.
[[nodiscard]] inline BootstrapCI ci_reflected(std::span<const double> replicate_values,
                                              double point, double level) {
    if (replicate_values.size() < 2) throw TooFewReplicates();
    if (!(level > 0.0) || !(level < 1.0)) throw InvalidParams("level must be in (0, 1)");
    std::vector<double> reps(replicate_values.begin(), replicate_values.end());
    const double a = empirical_quantile(reps, (1.0 - level) / 2.0);
    const double b = empirical_quantile(std::move(reps), (1.0 + level) / 2.0);
    BootstrapCI ci;
    ci.method = BootstrapCI::Method::reflected;
    ci.level = level;
    ci.point = point;
    ci.lower = 2.0 * point - b;
    ci.upper = 2.0 * point - a;
    ci.replicates_used = replicate_values.size();
    return ci;
}

/// Threshold-rescaled interval: sqrt(ratio) * (low point - {b, a}) + point,
/// where (a, b) are replicate quantiles at the lower threshold and ratio is
/// the exceedance-count ratio k_low / k_high.
[[nodiscard]] inline BootstrapCI ci_rescaled(double point_high, double point_low, double a,
                                             double b, double count_ratio, double level) {
    if (!(count_ratio > 0.0)) throw InvalidRatio();
    if (!(level > 0.0) || !(level < 1.0)) throw InvalidParams("level must be in (0, 1)");
    const double s = std::sqrt(count_ratio);
    BootstrapCI ci;
    ci.method = BootstrapCI::Method::rescaled;
    ci.level = level;
    ci.point = point_high;
    ci.low_point = point_low;
    ci.lower = s * (point_low - b) + point_high;
    ci.upper = s * (point_low - a) + point_high;
    return ci;
}

namespace detail {

inline std::size_t conditioning_count(const SeriesWindow& w, double u, Conditioning cond) {
    return exceedance_indices(w, u, cond).size();
}

}  // namespace detail

/// Runs B bootstrap replicates of the chosen scheme for one statistic and
/// assembles a confidence interval: reflected by default, threshold-rescaled
/// when `rescale_from` names a lower threshold. The threshold(s) resolved on
/// the observed series stay fixed across replicates. Replicates whose
/// denominators collapse are redrawn a few times, then counted as discarded;
/// more than 20% discards aborts (the threshold is too high for inference).
[[nodiscard]] inline BootstrapCI bootstrap_ci(const SeriesWindow& w, double u,
                                              const StatisticSpec& spec,
                                              const BootstrapScheme& scheme, double level,
                                              std::optional<ThresholdSpec> rescale_from = std::nullopt,
                                              bool keep_draws = false) {
    if (!(level > 0.0) || !(level < 1.0)) throw InvalidParams("level must be in (0, 1)");
    if (scheme.replicates < 2) throw TooFewReplicates();
    constexpr std::size_t kMaxRedraw = 8;

    const double point = estimate_statistic(w, u, spec);

    // Replicates run at the lower threshold when rescaling.
    double u_rep = u;
    std::optional<double> point_low;
    double count_ratio = 1.0;
    if (rescale_from) {
        const double u_low = resolve_threshold(w, *rescale_from);
        if (!(u_low < u))
            throw InvalidParams("rescale-from threshold must lie below the main threshold");
        const auto k_high = detail::conditioning_count(w, u, spec.conditioning);
        const auto k_low = detail::conditioning_count(w, u_low, spec.conditioning);
        if (k_high == 0 || k_low == 0) throw NoExceedances();
        count_ratio = static_cast<double>(k_low) / static_cast<double>(k_high);
        point_low = estimate_statistic(w, u_low, spec);
        u_rep = u_low;
    }

    // Multiplier scheme: indicator terms are fixed across replicates, only
    // the weights change.
    detail::StatTerms terms;
    detail::HillTerms hill_terms;
    std::size_t m = 0;
    if (scheme.kind == BootstrapScheme::Kind::multiplier) {
        m = detail::block_count(w, scheme.block);
        terms = detail::collect_terms(w, u_rep, spec.lag, spec.x, spec.estimator,
                                      spec.conditioning, spec.statistic);
        if (spec.estimator == EstimatorKind::backward)
            hill_terms = detail::collect_hill_terms(w, u_rep);
    }

    std::vector<double> values;
    values.reserve(scheme.replicates);
    std::size_t discarded = 0;
    for (std::size_t b = 0; b < scheme.replicates; ++b) {
        bool ok = false;
        for (std::size_t attempt = 0; attempt < kMaxRedraw && !ok; ++attempt) {
            const std::uint64_t rep_seed = attempt == 0
                                               ? derive_seed(scheme.seed, b)
                                               : derive_seed(derive_seed(scheme.seed, b), attempt);
            try {
                double v = 0.0;
                if (scheme.kind == BootstrapScheme::Kind::multiplier) {
                    const auto xi = multiplier_weights(m, scheme.law, rep_seed);
                    if (spec.estimator == EstimatorKind::backward) {
                        const double a = detail::eval_multiplier_hill(hill_terms, xi,
                                                                      scheme.block);
                        v = detail::eval_multiplier(terms, xi, scheme.block, a);
                    } else {
                        v = detail::eval_multiplier(terms, xi, scheme.block, 0.0);
                    }
                } else {
                    const SeriesWindow ws = stationary_resample(w, scheme.p, rep_seed);
                    v = estimate_statistic(ws, u_rep, spec);
                }
                values.push_back(v);
                ok = true;
            } catch (const ZeroDenominator&) {
            } catch (const NoExceedances&) {
            } catch (const DegenerateLogs&) {
            }
        }
        if (!ok) ++discarded;
    }

    if (discarded * 5 > scheme.replicates)
        throw TooManyDiscards("more than 20% of bootstrap replicates were discarded ("
                              + std::to_string(discarded) + "/" + std::to_string(scheme.replicates)
                              + "); the threshold leaves too few exceedances");
    if (values.size() < 2) throw TooFewReplicates();

    BootstrapCI ci;
    if (rescale_from) {
        std::vector<double> reps = values;
        const double a = empirical_quantile(reps, (1.0 - level) / 2.0);
        const double b = empirical_quantile(std::move(reps), (1.0 + level) / 2.0);
        ci = ci_rescaled(point, *point_low, a, b, count_ratio, level);
    } else {
        ci = ci_reflected(values, point, level);
    }
    ci.replicates_used = values.size();
    ci.discarded = discarded;
    if (keep_draws) ci.draws = std::move(values);
    return ci;
}

/// Batch variant: one set of resamples (stationary) or multiplier draws per
/// replicate, evaluated for every statistic in `specs`. Statistics whose
/// evaluation degenerates on a draw lose that replicate (no redraw here, in
/// contrast to bootstrap_ci); the 20%-discard guard applies per statistic,
/// and a statistic that cannot produce an interval comes back as nullopt
/// without spoiling the rest of the panel. This is what the coverage
/// studies run on: a full estimator x lag panel per bootstrap pass.
[[nodiscard]] inline std::vector<std::optional<BootstrapCI>> bootstrap_ci_batch(
    const SeriesWindow& w, double u, std::span<const StatisticSpec> specs,
    const BootstrapScheme& scheme, double level,
    std::optional<ThresholdSpec> rescale_from = std::nullopt) {
    if (!(level > 0.0) || !(level < 1.0)) throw InvalidParams("level must be in (0, 1)");
    if (scheme.replicates < 2) throw TooFewReplicates();
    const std::size_t S = specs.size();
    if (S == 0) return {};
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<char> alive(S, 1);
    std::vector<double> points(S, nan);
    for (std::size_t s = 0; s < S; ++s) {
        try {
            points[s] = estimate_statistic(w, u, specs[s]);
        } catch (const Error&) {
            alive[s] = 0;
        }
    }

    double u_rep = u;
    std::vector<double> points_low(S, nan);
    std::vector<double> count_ratio(S, 1.0);
    if (rescale_from) {
        const double u_low = resolve_threshold(w, *rescale_from);
        if (!(u_low < u))
            throw InvalidParams("rescale-from threshold must lie below the main threshold");
        for (std::size_t s = 0; s < S; ++s) {
            if (!alive[s]) continue;
            try {
                const auto k_high = detail::conditioning_count(w, u, specs[s].conditioning);
                const auto k_low = detail::conditioning_count(w, u_low, specs[s].conditioning);
                if (k_high == 0 || k_low == 0) throw NoExceedances();
                count_ratio[s] = static_cast<double>(k_low) / static_cast<double>(k_high);
                points_low[s] = estimate_statistic(w, u_low, specs[s]);
            } catch (const Error&) {
                alive[s] = 0;
            }
        }
        u_rep = u_low;
    }

    const bool any_backward = std::any_of(specs.begin(), specs.end(), [](const auto& s) {
        return s.estimator == EstimatorKind::backward;
    });

    std::vector<detail::StatTerms> terms;
    detail::HillTerms hill_terms;
    std::size_t m = 0;
    if (scheme.kind == BootstrapScheme::Kind::multiplier) {
        m = detail::block_count(w, scheme.block);
        terms.resize(S);
        for (std::size_t s = 0; s < S; ++s)
            if (alive[s])
                terms[s] = detail::collect_terms(w, u_rep, specs[s].lag, specs[s].x,
                                                 specs[s].estimator, specs[s].conditioning,
                                                 specs[s].statistic);
        if (any_backward) hill_terms = detail::collect_hill_terms(w, u_rep);
    }

    std::vector<std::vector<double>> values(S);
    for (auto& v : values) v.reserve(scheme.replicates);
    for (std::size_t b = 0; b < scheme.replicates; ++b) {
        const std::uint64_t rep_seed = derive_seed(scheme.seed, b);
        if (scheme.kind == BootstrapScheme::Kind::multiplier) {
            const auto xi = multiplier_weights(m, scheme.law, rep_seed);
            double alpha_star = 0.0;
            bool alpha_ok = !any_backward;
            if (any_backward) {
                try {
                    alpha_star = detail::eval_multiplier_hill(hill_terms, xi, scheme.block);
                    alpha_ok = alpha_star > 0.0;
                } catch (const ZeroDenominator&) {
                }
            }
            for (std::size_t s = 0; s < S; ++s) {
                if (!alive[s]) continue;
                if (specs[s].estimator == EstimatorKind::backward && !alpha_ok) continue;
                try {
                    values[s].push_back(
                        detail::eval_multiplier(terms[s], xi, scheme.block, alpha_star));
                } catch (const ZeroDenominator&) {
                }
            }
        } else {
            const SeriesWindow ws = stationary_resample(w, scheme.p, rep_seed);
            double alpha_star = 0.0;
            bool alpha_ok = !any_backward;
            if (any_backward) {
                try {
                    alpha_star = hill_alpha(ws, u_rep).alpha;
                    alpha_ok = true;
                } catch (const Error&) {
                }
            }
            for (std::size_t s = 0; s < S; ++s) {
                if (!alive[s]) continue;
                if (specs[s].estimator == EstimatorKind::backward && !alpha_ok) continue;
                try {
                    values[s].push_back(estimate_statistic(ws, u_rep, specs[s],
                                                           specs[s].estimator
                                                                   == EstimatorKind::backward
                                                               ? std::optional<double>(alpha_star)
                                                               : std::nullopt));
                } catch (const NoExceedances&) {
                }
            }
        }
    }

    std::vector<std::optional<BootstrapCI>> out(S);
    for (std::size_t s = 0; s < S; ++s) {
        if (!alive[s]) continue;
        const std::size_t discarded = scheme.replicates - values[s].size();
        if (discarded * 5 > scheme.replicates || values[s].size() < 2) continue;
        BootstrapCI ci;
        if (rescale_from) {
            std::vector<double> reps = values[s];
            const double a = empirical_quantile(reps, (1.0 - level) / 2.0);
            const double b = empirical_quantile(std::move(reps), (1.0 + level) / 2.0);
            ci = ci_rescaled(points[s], points_low[s], a, b, count_ratio[s], level);
        } else {
            ci = ci_reflected(values[s], points[s], level);
        }
        ci.replicates_used = values[s].size();
        ci.discarded = discarded;
        out[s] = std::move(ci);
    }
    return out;
}

}  // namespace sptail
