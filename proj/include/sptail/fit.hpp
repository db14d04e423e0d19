#pragma once

#include "sptail/errors.hpp"
#include "sptail/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace sptail {

/// Outcome of a conditional-volatility model fit.
struct FitResult {
    ModelSpec::Kind kind = ModelSpec::Kind::garch11;
    GarchParams params;
    std::optional<std::array<double, 3>> std_errors;  // omega, alpha1, beta1
    double log_likelihood = 0.0;
    bool converged = false;
    std::size_t iterations = 0;

    [[nodiscard]] ModelSpec model(Innovation innov = Innovation{}) const {
        return ModelSpec::garch11_spec(params.omega, params.alpha1, params.beta1, innov);
    }
};

namespace detail {

/// Nelder-Mead simplex minimizer. Returns the best vertex; `iterations` is
/// filled with the number of shrink/reflect cycles performed.
inline std::vector<double> nelder_mead(const std::function<double(std::span<const double>)>& f,
                                       std::vector<double> start, double step, double ftol,
                                       std::size_t max_iter, std::size_t& iterations,
                                       bool& converged) {
    const std::size_t dim = start.size();
    std::vector<std::vector<double>> simplex(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += step;
    std::vector<double> fv(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(simplex[i]);

    converged = false;
    iterations = 0;
    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), xr(dim), xe(dim), xc(dim);
    for (; iterations < max_iter; ++iterations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[dim], second = order[dim - 1];
        if (std::abs(fv[worst] - fv[best])
            <= ftol * (std::abs(fv[best]) + std::abs(fv[worst]) + 1e-300)) {
            converged = true;
            break;
        }

        for (std::size_t j = 0; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i <= dim; ++i)
                if (i != worst) s += simplex[i][j];
            centroid[j] = s / static_cast<double>(dim);
        }
        for (std::size_t j = 0; j < dim; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = f(xr);
        if (fr < fv[order[0]]) {
            for (std::size_t j = 0; j < dim; ++j)
                xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const auto& ref = outside ? xr : simplex[worst];
            for (std::size_t j = 0; j < dim; ++j) xc[j] = centroid[j] + 0.5 * (ref[j] - centroid[j]);
            const double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < dim; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    const std::size_t best = static_cast<std::size_t>(
        std::min_element(fv.begin(), fv.end()) - fv.begin());
    return simplex[best];
}

/// Gaussian log-likelihood of a GARCH(1,1) with sigma_1^2 pinned at the
/// sample variance.
inline double garch11_loglik(std::span<const double> r, double omega, double alpha1, double beta1,
                             double sigma2_init) {
    constexpr double kLog2Pi = 1.8378770664093454836;
    double sigma2 = sigma2_init;
    double ll = 0.0;
    for (const double rt : r) {
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            return -std::numeric_limits<double>::infinity();
        ll += -0.5 * (kLog2Pi + std::log(sigma2) + rt * rt / sigma2);
        sigma2 = omega + alpha1 * rt * rt + beta1 * sigma2;
    }
    return ll;
}

/// (omega, alpha1, beta1) from the unconstrained optimizer coordinates:
/// omega = exp(t0); (alpha1, beta1) via a two-way logistic map that keeps
/// alpha1, beta1 > 0 and alpha1 + beta1 < 1.
inline GarchParams garch11_from_free(std::span<const double> th) {
    const double e1 = std::exp(th[1]);
    const double e2 = std::exp(th[2]);
    const double denom = 1.0 + e1 + e2;
    return {std::exp(th[0]), e1 / denom, e2 / denom};
}

}  // namespace detail

/// Gaussian quasi-maximum-likelihood fit of a GARCH(1,1) to a return series.
/// The search runs on log/logistic-transformed coordinates so that omega > 0,
/// alpha1, beta1 >= 0 and alpha1 + beta1 < 1 hold throughout. Standard
/// errors come from the numerical Hessian of the log-likelihood at the
/// optimum (absent when that Hessian is not positive definite).
[[nodiscard]] inline FitResult fit_garch11(std::span<const double> returns) {
    if (returns.size() < 100) throw TooShort("garch fit needs at least 100 returns");
    double mean = 0.0;
    for (const double r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    double var = 0.0;
    for (const double r : returns) var += (r - mean) * (r - mean);
    var /= static_cast<double>(returns.size());
    if (!(var > 0.0)) throw DegenerateData("returns have zero variance");
    const double sigma2_init = var;

    const auto negll = [&](std::span<const double> th) {
        const auto p = detail::garch11_from_free(th);
        return -detail::garch11_loglik(returns, p.omega, p.alpha1, p.beta1, sigma2_init)
               / static_cast<double>(returns.size());
    };

    // Start at alpha1 = 0.10, beta1 = 0.80 with omega matching the sample
    // variance through the unconditional-variance identity.
    std::vector<double> start{std::log(var * 0.10), 0.0, std::log(8.0)};
    std::size_t iterations = 0;
    bool converged = false;
    const auto best = detail::nelder_mead(negll, std::move(start), 0.5, 1e-12, 2000, iterations,
                                          converged);
    if (!converged)
        throw NoConvergence("garch QMLE simplex did not converge within the iteration cap");

    FitResult out;
    out.kind = ModelSpec::Kind::garch11;
    out.params = detail::garch11_from_free(best);
    out.log_likelihood = detail::garch11_loglik(returns, out.params.omega, out.params.alpha1,
                                                out.params.beta1, sigma2_init);
    out.converged = converged;
    out.iterations = iterations;

    // Observed-information standard errors in the original coordinates.
    const std::array<double, 3> p{out.params.omega, out.params.alpha1, out.params.beta1};
    const auto nll_raw = [&](const std::array<double, 3>& q) {
        return -detail::garch11_loglik(returns, q[0], q[1], q[2], sigma2_init);
    };
    std::array<double, 3> h{};
    for (std::size_t i = 0; i < 3; ++i) h[i] = std::max(1e-5 * std::abs(p[i]), 1e-9);
    std::array<std::array<double, 3>, 3> H{};
    const double f0 = nll_raw(p);
    bool hessian_ok = std::isfinite(f0);
    for (std::size_t i = 0; i < 3 && hessian_ok; ++i) {
        for (std::size_t j = i; j < 3 && hessian_ok; ++j) {
            auto q = p;
            double v = 0.0;
            if (i == j) {
                q[i] = p[i] + h[i];
                const double fp = nll_raw(q);
                q[i] = p[i] - h[i];
                const double fm = nll_raw(q);
                v = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
            } else {
                q[i] = p[i] + h[i];
                q[j] = p[j] + h[j];
                const double fpp = nll_raw(q);
                q[j] = p[j] - h[j];
                const double fpm = nll_raw(q);
                q[i] = p[i] - h[i];
                q[j] = p[j] + h[j];
                const double fmp = nll_raw(q);
                q[j] = p[j] - h[j];
                const double fmm = nll_raw(q);
                v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            }
            if (!std::isfinite(v)) hessian_ok = false;
            H[i][j] = H[j][i] = v;
        }
    }
    if (hessian_ok) {
        // invert the symmetric 3x3 by adjugate
        const double a = H[0][0], b = H[0][1], c = H[0][2];
        const double d = H[1][1], e = H[1][2], f = H[2][2];
        const double det = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
        if (det > 0.0) {
            const double i00 = (d * f - e * e) / det;
            const double i11 = (a * f - c * c) / det;
            const double i22 = (a * d - b * b) / det;
            if (i00 > 0.0 && i11 > 0.0 && i22 > 0.0)
                out.std_errors = {std::sqrt(i00), std::sqrt(i11), std::sqrt(i22)};
        }
    }
    return out;
}

}  // namespace sptail
