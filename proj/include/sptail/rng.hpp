#pragma once

#include "sptail/errors.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace sptail {

/// Derives an independent stream seed from (seed, index) via the splitmix64
/// finalizer. Replicate k of a study always runs on derive_seed(seed, k), so
/// parallel runs are bit-identical to sequential ones.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seeded random stream: a mt19937_64 engine plus the samplers the library
/// needs. The samplers are spelled out here (inverse transform, Box-Muller,
/// Marsaglia-Tsang) instead of using <random> distributions so that a stream
/// is a pure function of the seed, independent of the standard-library
/// implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Raw 64-bit draw.
    [[nodiscard]] std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    [[nodiscard]] double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on {0, ..., bound-1}, unbiased by rejection.
    [[nodiscard]] std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per call.
    [[nodiscard]] double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Gamma(shape, scale=1) via Marsaglia-Tsang squeeze; shape < 1 boosted
    /// through Gamma(shape + 1).
    [[nodiscard]] double gamma(double shape) {
        if (!(shape > 0.0)) throw InvalidParams("gamma shape must be > 0");
        if (shape < 1.0) {
            const double u = 1.0 - uniform01();  // (0, 1]
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = normal();
            const double t = 1.0 + c * x;
            if (t <= 0.0) continue;
            const double v = t * t * t;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Chi-square with (possibly fractional) dof nu.
    [[nodiscard]] double chi_square(double nu) { return 2.0 * gamma(0.5 * nu); }

    /// Student t(nu) as normal over root chi-square: Z * sqrt(nu / chi2(nu)).
    [[nodiscard]] double student_t(double nu) {
        if (!(nu > 0.0)) throw InvalidParams("student-t dof must be > 0");
        const double z = normal();
        const double c = chi_square(nu);
        return z * std::sqrt(nu / c);
    }

    /// t(nu) scaled to unit variance; requires nu > 2.
    [[nodiscard]] double student_t_standardized(double nu) {
        if (!(nu > 2.0)) throw InvalidParams("standardized t requires dof > 2");
        return student_t(nu) * std::sqrt((nu - 2.0) / nu);
    }

    /// Geometric block length: P(L = l) = p (1-p)^(l-1), l = 1, 2, ...
    [[nodiscard]] std::uint64_t geometric(double p) {
        if (!(p > 0.0) || p > 1.0) throw InvalidParams("geometric p must be in (0, 1]");
        if (p >= 1.0) return 1;
        const double u = 1.0 - uniform01();  // (0, 1]
        return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
    }

    /// Pareto with tail P(X > y) = y^(-alpha), y >= 1.
    [[nodiscard]] double pareto(double alpha) {
        if (!(alpha > 0.0)) throw InvalidAlpha();
        const double u = 1.0 - uniform01();  // (0, 1]
        return std::pow(u, -1.0 / alpha);
    }

private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;
    std::mt19937_64 engine_;
};

}  // namespace sptail
