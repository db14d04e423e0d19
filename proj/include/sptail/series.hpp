#pragma once

#include "sptail/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sptail {

/// Sign of the conditioning shock: all exceedances of |X|, or only positive
/// (X > u) / negative (-X > u) ones.
enum class Conditioning { absolute, positive_shock, negative_shock };

[[nodiscard]] inline const char* to_string(Conditioning c) noexcept {
    switch (c) {
        case Conditioning::absolute: return "absolute";
        case Conditioning::positive_shock: return "positive";
        case Conditioning::negative_shock: return "negative";
    }
    return "?";
}

/// Empirical quantile with linear interpolation between order statistics:
/// sort ascending, position p = 1 + q * (k - 1), interpolate between the
/// adjacent order statistics. This single convention is used everywhere a
/// quantile is taken (thresholds, bootstrap replicate quantiles, reference
/// lines). Accepts q in (0, 1]; q = 1 returns the maximum.
[[nodiscard]] inline double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidParams("quantile of empty sample");
    if (!(q > 0.0) || q > 1.0) throw InvalidParams("quantile level must be in (0, 1]");
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size();
    const double pos = 1.0 + q * static_cast<double>(k - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= k) return values[k - 1];
    const double frac = pos - static_cast<double>(lo);
    return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

/// A stationary sample with t-buffers on both ends. Observations are indexed
/// 1 - tilde ... n + tilde; estimator sums run over the core 1..n only, the
/// buffers are read-only lag context. Immutable after construction.
class SeriesWindow {
public:
    /// Frames a raw sequence by trimming `tilde` observations from each end
    /// into the buffers; the middle n = len - 2*tilde values form the core.
    SeriesWindow(std::vector<double> raw, int tilde) : values_(std::move(raw)), tilde_(tilde) {
        if (tilde_ < 0) throw InvalidParams("maximal lag must be >= 0");
        const std::size_t len = values_.size();
        if (len < static_cast<std::size_t>(2 * tilde_) + 1)
            throw InvalidParams("series too short for lag buffer: need n >= 1 after trimming");
        n_ = len - static_cast<std::size_t>(2 * tilde_);
    }

    /// Core length n.
    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    /// Maximal lag of interest (buffer width on each side).
    [[nodiscard]] int tilde() const noexcept { return tilde_; }

    /// Observation X_i for i in {1 - tilde, ..., n + tilde}.
    [[nodiscard]] double x(std::ptrdiff_t i) const noexcept {
        return values_[static_cast<std::size_t>(i + tilde_ - 1)];
    }

    /// All stored values, buffers included, in index order.
    [[nodiscard]] std::span<const double> raw() const noexcept { return values_; }

    /// The core values X_1..X_n as a view.
    [[nodiscard]] std::span<const double> core() const noexcept {
        return std::span<const double>(values_).subspan(static_cast<std::size_t>(tilde_), n_);
    }

    /// |X_i| over the core, as a fresh vector.
    [[nodiscard]] std::vector<double> abs_core() const {
        std::vector<double> out(n_);
        const auto c = core();
        for (std::size_t i = 0; i < n_; ++i) out[i] = std::abs(c[i]);
        return out;
    }

private:
    std::vector<double> values_;
    int tilde_;
    std::size_t n_;
};

/// Threshold choice: an empirical quantile of |X| over the core, or a fixed
/// absolute level.
struct ThresholdSpec {
    enum class Kind { quantile, absolute };
    Kind kind = Kind::quantile;
    double q = 0.95;  // quantile level, used when kind == quantile
    double u = 0.0;   // absolute level, used when kind == absolute

    [[nodiscard]] static ThresholdSpec quantile(double q) {
        return ThresholdSpec{Kind::quantile, q, 0.0};
    }
    [[nodiscard]] static ThresholdSpec absolute(double u) {
        return ThresholdSpec{Kind::absolute, 0.0, u};
    }
};

/// Resolves a ThresholdSpec on a window: the empirical q-quantile of |X_i|
/// over core indices (interpolation convention above), or the fixed level.
/// Throws NoExceedances if no core |X_i| lies strictly above the result.
[[nodiscard]] inline double resolve_threshold(const SeriesWindow& w, const ThresholdSpec& spec) {
    double u = 0.0;
    if (spec.kind == ThresholdSpec::Kind::quantile) {
        if (!(spec.q > 0.0) || !(spec.q < 1.0))
            throw InvalidParams("threshold quantile must be in (0, 1)");
        u = empirical_quantile(w.abs_core(), spec.q);
    } else {
        u = spec.u;
    }
    if (!(u > 0.0)) throw InvalidParams("resolved threshold must be > 0");
    for (const double v : w.core())
        if (std::abs(v) > u) return u;
    throw NoExceedances("no core |X_i| strictly exceeds u = " + std::to_string(u));
}

/// Core indices whose shock exceeds u under the given conditioning; strict
/// inequality throughout. May be empty.
[[nodiscard]] inline std::vector<std::size_t> exceedance_indices(const SeriesWindow& w, double u,
                                                                 Conditioning sign) {
    if (!(u > 0.0)) throw InvalidParams("threshold must be > 0");
    std::vector<std::size_t> idx;
    const auto c = w.core();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double v = c[i];
        const bool hit = sign == Conditioning::absolute     ? std::abs(v) > u
                         : sign == Conditioning::positive_shock ? v > u
                                                                : -v > u;
        if (hit) idx.push_back(i + 1);  // 1-based core index
    }
    return idx;
}

}  // namespace sptail
