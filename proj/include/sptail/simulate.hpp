#pragma once

#include "sptail/errors.hpp"
#include "sptail/rng.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace sptail {

/// Innovation law for Z_t. Standardized t is a t(nu) draw scaled by
/// sqrt((nu-2)/nu) to unit variance, so nu > 2 is required there.
struct Innovation {
    enum class Kind { standard_normal, student_t, student_t_standardized };
    Kind kind = Kind::standard_normal;
    double nu = 4.0;

    void validate() const {
        if (kind == Kind::student_t && !(nu > 0.0))
            throw InvalidParams("student-t dof must be > 0");
        if (kind == Kind::student_t_standardized && !(nu > 2.0))
            throw InvalidParams("standardized t requires dof > 2");
    }

    [[nodiscard]] double draw(Rng& rng) const {
        switch (kind) {
            case Kind::standard_normal: return rng.normal();
            case Kind::student_t: return rng.student_t(nu);
            case Kind::student_t_standardized: return rng.student_t_standardized(nu);
        }
        return 0.0;
    }

    [[nodiscard]] std::string describe() const {
        switch (kind) {
            case Kind::standard_normal: return "normal";
            case Kind::student_t: return "t(" + std::to_string(nu) + ")";
            case Kind::student_t_standardized: return "std-t(" + std::to_string(nu) + ")";
        }
        return "?";
    }
};

struct GarchParams {
    double omega = 0.1;
    double alpha1 = 0.14;
    double beta1 = 0.84;
};

struct AparchParams {
    double omega = 5e-5;
    double alpha1 = 0.056;
    double beta1 = 0.937;
    double delta = 1.227;
    double gamma1 = 0.874;
};

struct SvParams {
    double phi = 0.9;
    double vol_sd = 1.0;
};

/// Parameter record for the supported data-generating processes. Only the
/// block matching `kind` is consulted. constant_pareto is a degenerate
/// perfectly-dependent test model: one Pareto(alpha) draw repeated for the
/// whole series.
struct ModelSpec {
    enum class Kind { garch11, aparch11, sv, iid, constant_pareto };
    Kind kind = Kind::iid;
    GarchParams garch;
    AparchParams aparch;
    SvParams sv;
    double pareto_alpha = 2.6;
    Innovation innovation;

    [[nodiscard]] static ModelSpec garch11_spec(double omega, double alpha1, double beta1,
                                                Innovation innov) {
        ModelSpec m;
        m.kind = Kind::garch11;
        m.garch = {omega, alpha1, beta1};
        m.innovation = innov;
        return m;
    }
    [[nodiscard]] static ModelSpec aparch11_spec(double omega, double alpha1, double beta1,
                                                 double delta, double gamma1, Innovation innov) {
        ModelSpec m;
        m.kind = Kind::aparch11;
        m.aparch = {omega, alpha1, beta1, delta, gamma1};
        m.innovation = innov;
        return m;
    }
    [[nodiscard]] static ModelSpec sv_spec(double phi, double vol_sd, Innovation innov) {
        ModelSpec m;
        m.kind = Kind::sv;
        m.sv = {phi, vol_sd};
        m.innovation = innov;
        return m;
    }
    [[nodiscard]] static ModelSpec iid_spec(Innovation innov) {
        ModelSpec m;
        m.kind = Kind::iid;
        m.innovation = innov;
        return m;
    }
    [[nodiscard]] static ModelSpec constant_pareto_spec(double alpha) {
        ModelSpec m;
        m.kind = Kind::constant_pareto;
        m.pareto_alpha = alpha;
        return m;
    }

    void validate() const {
        innovation.validate();
        switch (kind) {
            case Kind::garch11:
                if (!(garch.omega > 0.0)) throw InvalidParams("garch omega must be > 0");
                if (garch.alpha1 < 0.0 || garch.beta1 < 0.0)
                    throw InvalidParams("garch alpha1, beta1 must be >= 0");
                break;
            case Kind::aparch11:
                if (!(aparch.omega > 0.0)) throw InvalidParams("aparch omega must be > 0");
                if (aparch.alpha1 < 0.0 || aparch.beta1 < 0.0)
                    throw InvalidParams("aparch alpha1, beta1 must be >= 0");
                if (!(aparch.delta > 0.0)) throw InvalidParams("aparch delta must be > 0");
                if (!(std::abs(aparch.gamma1) < 1.0))
                    throw InvalidParams("aparch gamma1 must lie in (-1, 1)");
                break;
            case Kind::sv:
                if (!(std::abs(sv.phi) < 1.0)) throw InvalidParams("sv phi must lie in (-1, 1)");
                if (!(sv.vol_sd > 0.0)) throw InvalidParams("sv vol sd must be > 0");
                break;
            case Kind::iid: break;
            case Kind::constant_pareto:
                if (!(pareto_alpha > 0.0)) throw InvalidParams("pareto alpha must be > 0");
                break;
        }
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::garch11:
                os << "garch11(omega=" << garch.omega << ",alpha1=" << garch.alpha1
                   << ",beta1=" << garch.beta1 << ")";
                break;
            case Kind::aparch11:
                os << "aparch11(omega=" << aparch.omega << ",alpha1=" << aparch.alpha1
                   << ",beta1=" << aparch.beta1 << ",delta=" << aparch.delta
                   << ",gamma1=" << aparch.gamma1 << ")";
                break;
            case Kind::sv:
                os << "sv(phi=" << sv.phi << ",vol_sd=" << sv.vol_sd << ")";
                break;
            case Kind::iid: os << "iid"; break;
            case Kind::constant_pareto:
                os << "constant-pareto(alpha=" << pareto_alpha << ")";
                return os.str();
        }
        os << "+" << innovation.describe();
        return os.str();
    }
};

/// Seeded generation request. The first burn_in values are generated and
/// discarded; defaults start the recursion at the unconditional level and
/// let a 2000-step burn-in wash out what remains of the initialization.
struct SimulationPlan {
    ModelSpec model;
    std::size_t length = 0;
    std::size_t burn_in = 2000;
    std::uint64_t seed = 0;
};

/// Values plus per-step diagnostics; innovations[i] and sigmas[i] belong to
/// values[i].
struct SimulationResult {
    std::vector<double> values;
    std::vector<double> innovations;
    std::vector<double> sigmas;
};

/// Simulates X_t = sigma_t Z_t under the plan's model. Deterministic per
/// seed. Per-step draw order is fixed: the SV log-volatility innovation is
/// drawn before Z_t; other models draw only Z_t. Initialization: GARCH
/// sigma_1^2 = omega/(1-alpha1-beta1) when alpha1+beta1 < 1, else omega;
/// APARCH sigma_1^delta = omega/(1-beta1) when beta1 < 1, else omega; SV
/// log sigma_1 ~ N(0, sd^2/(1-phi^2)).
[[nodiscard]] inline SimulationResult simulate_full(const SimulationPlan& plan) {
    plan.model.validate();
    if (plan.length < 1) throw InvalidParams("simulation length must be >= 1");
    const auto& m = plan.model;
    Rng rng(plan.seed);
    const std::size_t total = plan.burn_in + plan.length;

    SimulationResult out;
    out.values.reserve(plan.length);
    out.innovations.reserve(plan.length);
    out.sigmas.reserve(plan.length);
    const auto record = [&](std::size_t step, double x, double z, double sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw Error("volatility recursion left the positive reals (unstable parameters?)");
        if (step >= plan.burn_in) {
            out.values.push_back(x);
            out.innovations.push_back(z);
            out.sigmas.push_back(sigma);
        }
    };

    switch (m.kind) {
        case ModelSpec::Kind::garch11: {
            const auto& p = m.garch;
            double sigma2 = p.alpha1 + p.beta1 < 1.0 ? p.omega / (1.0 - p.alpha1 - p.beta1)
                                                     : p.omega;
            for (std::size_t s = 0; s < total; ++s) {
                const double sigma = std::sqrt(sigma2);
                const double z = m.innovation.draw(rng);
                const double x = sigma * z;
                record(s, x, z, sigma);
                sigma2 = p.omega + p.alpha1 * x * x + p.beta1 * sigma2;
            }
            break;
        }
        case ModelSpec::Kind::aparch11: {
            const auto& p = m.aparch;
            double sd = p.beta1 < 1.0 ? p.omega / (1.0 - p.beta1) : p.omega;  // sigma^delta
            for (std::size_t s = 0; s < total; ++s) {
                const double sigma = std::pow(sd, 1.0 / p.delta);
                const double z = m.innovation.draw(rng);
                const double x = sigma * z;
                record(s, x, z, sigma);
                sd = p.omega + p.alpha1 * std::pow(std::abs(x) - p.gamma1 * x, p.delta)
                     + p.beta1 * sd;
            }
            break;
        }
        case ModelSpec::Kind::sv: {
            const auto& p = m.sv;
            double logsig = rng.normal() * p.vol_sd / std::sqrt(1.0 - p.phi * p.phi);
            for (std::size_t s = 0; s < total; ++s) {
                if (s > 0) logsig = p.phi * logsig + p.vol_sd * rng.normal();
                const double sigma = std::exp(logsig);
                const double z = m.innovation.draw(rng);
                record(s, sigma * z, z, sigma);
            }
            break;
        }
        case ModelSpec::Kind::iid: {
            for (std::size_t s = 0; s < total; ++s) {
                const double z = m.innovation.draw(rng);
                record(s, z, z, 1.0);
            }
            break;
        }
        case ModelSpec::Kind::constant_pareto: {
            const double level = rng.pareto(m.pareto_alpha);
            for (std::size_t s = 0; s < total; ++s) record(s, level, 1.0, level);
            break;
        }
    }
    return out;
}

/// Values only.
[[nodiscard]] inline std::vector<double> simulate(const SimulationPlan& plan) {
    return simulate_full(plan).values;
}

/// Runs the conditional-volatility recursion forward on observed data and
/// returns Z_t = X_t / sigma_t. sigma_1 is initialized exactly as in
/// simulate(), so residuals(simulate(plan), plan.model) recovers the
/// innovation sequence up to the initialization transient.
[[nodiscard]] inline std::vector<double> residuals(std::span<const double> x,
                                                   const ModelSpec& model) {
    model.validate();
    if (model.kind != ModelSpec::Kind::garch11 && model.kind != ModelSpec::Kind::aparch11)
        throw InvalidParams("residual extraction needs a garch11 or aparch11 model");

    std::vector<double> z;
    z.reserve(x.size());
    if (model.kind == ModelSpec::Kind::garch11) {
        const auto& p = model.garch;
        double sigma2 = p.alpha1 + p.beta1 < 1.0 ? p.omega / (1.0 - p.alpha1 - p.beta1) : p.omega;
        for (const double xt : x) {
            z.push_back(xt / std::sqrt(sigma2));
            sigma2 = p.omega + p.alpha1 * xt * xt + p.beta1 * sigma2;
        }
    } else {
        const auto& p = model.aparch;
        double sd = p.beta1 < 1.0 ? p.omega / (1.0 - p.beta1) : p.omega;
        for (const double xt : x) {
            z.push_back(xt / std::pow(sd, 1.0 / p.delta));
            sd = p.omega + p.alpha1 * std::pow(std::abs(xt) - p.gamma1 * xt, p.delta)
                 + p.beta1 * sd;
        }
    }
    return z;
}

}  // namespace sptail
