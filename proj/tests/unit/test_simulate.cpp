#include "sptail/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "sptail/estimators.hpp"
#include "sptail/series.hpp"

#include <cmath>
#include <vector>

using namespace sptail;
using Catch::Matchers::WithinAbs;

namespace {

Innovation std_t4() { return {Innovation::Kind::student_t_standardized, 4.0}; }

double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("parameter validation", "[simulate]") {
    SimulationPlan plan;
    plan.length = 10;
    plan.model = ModelSpec::garch11_spec(0.0, 0.14, 0.84, std_t4());
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
    plan.model = ModelSpec::garch11_spec(0.1, -0.1, 0.84, std_t4());
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
    plan.model = ModelSpec::sv_spec(1.0, 1.0, {Innovation::Kind::student_t, 2.6});
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
    plan.model = ModelSpec::iid_spec({Innovation::Kind::student_t_standardized, 2.0});
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
    plan.model = ModelSpec::aparch11_spec(1e-4, 0.05, 0.9, 1.2, 1.0, std_t4());
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
    plan.model = ModelSpec::iid_spec(std_t4());
    plan.length = 0;
    CHECK_THROWS_AS(simulate(plan), InvalidParams);
}

TEST_CASE("identical plans give identical output", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84, std_t4());
    plan.length = 5000;
    plan.seed = 123;
    const auto a = simulate(plan);
    const auto b = simulate(plan);
    CHECK(a == b);
    plan.seed = 124;
    CHECK(simulate(plan) != a);
}

TEST_CASE("garch unconditional variance identity", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84, std_t4());
    plan.length = 200000;
    plan.seed = 42;
    const double var = sample_variance(simulate(plan));
    // omega / (1 - alpha1 - beta1) = 5.0; X^2 has tail index ~1.3, so the
    // per-seed sample variance is noisy and the band below is a seeded check
    CHECK(var > 4.5);
    CHECK(var < 5.5);

    // the multi-seed average pins the identity itself down
    double total = 0.0;
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        plan.seed = seed;
        total += sample_variance(simulate(plan));
    }
    const double avg = total / 10.0;
    CHECK(avg > 4.5);
    CHECK(avg < 5.5);
}

TEST_CASE("iid standardized t has unit variance", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::iid_spec(std_t4());
    plan.length = 200000;
    plan.seed = 22;
    const double var = sample_variance(simulate(plan));
    CHECK(var > 0.95);
    CHECK(var < 1.05);
}

TEST_CASE("sv log-volatility has the AR(1) stationary variance", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::sv_spec(0.9, 1.0, {Innovation::Kind::student_t, 2.6});
    plan.length = 200000;
    plan.seed = 23;
    const auto full = simulate_full(plan);
    std::vector<double> logsig(full.sigmas.size());
    for (std::size_t i = 0; i < full.sigmas.size(); ++i) logsig[i] = std::log(full.sigmas[i]);
    const double var = sample_variance(logsig);
    // 1 / (1 - 0.81) ~= 5.263
    CHECK(var > 4.7);
    CHECK(var < 5.8);
}

TEST_CASE("aparch with gamma1=0, delta=2 degenerates to garch", "[simulate]") {
    SimulationPlan garch_plan;
    garch_plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84, std_t4());
    garch_plan.length = 5000;
    garch_plan.seed = 24;
    SimulationPlan aparch_plan = garch_plan;
    aparch_plan.model = ModelSpec::aparch11_spec(0.1, 0.14, 0.84, 2.0, 0.0, std_t4());
    const auto g = simulate(garch_plan);
    const auto a = simulate(aparch_plan);
    REQUIRE(g.size() == a.size());
    double max_rel = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double denom = std::max(std::abs(g[i]), 1e-12);
        max_rel = std::max(max_rel, std::abs(g[i] - a[i]) / denom);
    }
    CHECK(max_rel < 1e-10);
}

TEST_CASE("volatilities stay positive", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::aparch11_spec(5e-5, 0.056, 0.937, 1.227, 0.874,
                                          {Innovation::Kind::standard_normal, 0.0});
    plan.length = 20000;
    plan.seed = 25;
    const auto full = simulate_full(plan);
    bool positive = true;
    for (const double s : full.sigmas) positive = positive && s > 0.0;
    CHECK(positive);
}

TEST_CASE("residuals recover the innovation sequence", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84, std_t4());
    plan.length = 10000;
    plan.seed = 26;
    const auto full = simulate_full(plan);
    const auto z = residuals(full.values, plan.model);
    REQUIRE(z.size() == full.values.size());

    const std::size_t start = full.values.size() / 10;
    double sxy = 0.0, sxx = 0.0, syy = 0.0, sx = 0.0, sy = 0.0;
    const double count = static_cast<double>(full.values.size() - start);
    for (std::size_t i = start; i < full.values.size(); ++i) {
        sx += z[i];
        sy += full.innovations[i];
        sxy += z[i] * full.innovations[i];
        sxx += z[i] * z[i];
        syy += full.innovations[i] * full.innovations[i];
    }
    const double cov = sxy / count - (sx / count) * (sy / count);
    const double corr = cov / std::sqrt((sxx / count - (sx / count) * (sx / count))
                                        * (syy / count - (sy / count) * (sy / count)));
    CHECK(corr > 0.999);
}

TEST_CASE("constant-volatility residuals divide by the level", "[simulate]") {
    const auto model = ModelSpec::garch11_spec(4.0, 0.0, 0.0, std_t4());  // sigma = 2
    const std::vector<double> x{1.0, -3.0, 0.5, 8.0};
    const auto z = residuals(x, model);
    REQUIRE(z.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(z[i], WithinAbs(x[i] / 2.0, 1e-15));
}

TEST_CASE("residual preconditions", "[simulate]") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(residuals(x, ModelSpec::garch11_spec(0.0, 0.1, 0.8, std_t4())),
                    InvalidParams);
    CHECK_THROWS_AS(residuals(x, ModelSpec::sv_spec(0.9, 1.0, std_t4())), InvalidParams);
    CHECK_THROWS_AS(residuals(x, ModelSpec::iid_spec(std_t4())), InvalidParams);
}

TEST_CASE("hill tail-index sanity for the garch model", "[simulate][slow]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84, std_t4());
    plan.length = 200000;
    plan.seed = 27;
    const SeriesWindow w(simulate(plan), 0);
    const double u = empirical_quantile(w.abs_core(), 0.99);
    const auto est = hill_alpha(w, u);
    CHECK(est.alpha > 2.0);
    CHECK(est.alpha < 3.2);
}

TEST_CASE("constant-pareto test model repeats one draw", "[simulate]") {
    SimulationPlan plan;
    plan.model = ModelSpec::constant_pareto_spec(2.6);
    plan.length = 50;
    plan.seed = 28;
    const auto v = simulate(plan);
    REQUIRE(v.size() == 50);
    bool constant = true;
    for (const double x : v) constant = constant && x == v[0];
    CHECK(constant);
    CHECK(v[0] >= 1.0);
}
