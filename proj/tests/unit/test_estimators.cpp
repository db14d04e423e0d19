#include "sptail/estimators.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "sptail/rng.hpp"
#include "sptail/simulate.hpp"

#include <cmath>
#include <vector>

using namespace sptail;
using Catch::Matchers::WithinAbs;

namespace {

// Core [2, 10, -4, 1, 6, -12, 3] with one buffer value on each side; the
// hand-enumerated values below all use u = 5.
SeriesWindow fixture() { return SeriesWindow({0.0, 2, 10, -4, 1, 6, -12, 3, 0.0}, 1); }

}  // namespace

TEST_CASE("hill estimator on hand-computed exceedances", "[estimators]") {
    // exceedances {10, 6, 12} over u = 5
    const SeriesWindow w({10.0, 6.0, 12.0, 1.0}, 0);
    const auto est = hill_alpha(w, 5.0);
    const double expected = 3.0 / (std::log(2.0) + std::log(1.2) + std::log(2.4));
    CHECK_THAT(est.alpha, WithinAbs(expected, 1e-12));
    CHECK_THAT(est.alpha, WithinAbs(1.71337, 1e-4));
    CHECK(est.exceedance_count == 3);

    // every exceedance at u*e has unit log-excess
    const double ue = 5.0 * std::exp(1.0);
    const SeriesWindow we({ue, ue, ue, 1.0}, 0);
    CHECK_THAT(hill_alpha(we, 5.0).alpha, WithinAbs(1.0, 1e-12));

    CHECK_THROWS_AS(hill_alpha(w, 100.0), NoExceedances);
}

TEST_CASE("hill estimator is consistent for iid Pareto tails", "[estimators]") {
    Rng rng(99);
    std::vector<double> raw(20000);
    for (auto& v : raw) v = rng.pareto(2.6);
    const SeriesWindow w(std::move(raw), 0);
    const double u = empirical_quantile(w.abs_core(), 0.95);
    const auto est = hill_alpha(w, u);
    CHECK(est.alpha > 2.34);
    CHECK(est.alpha < 2.86);
}

TEST_CASE("p_hat counts signed exceedances", "[estimators]") {
    CHECK_THAT(p_hat(fixture(), 5.0), WithinAbs(2.0 / 3.0, 1e-15));
    const SeriesWindow all_pos({6.0, 7.0, 8.0}, 0);
    CHECK(p_hat(all_pos, 5.0) == 1.0);
    CHECK_THROWS_AS(p_hat(fixture(), 100.0), NoExceedances);
}

TEST_CASE("forward estimator on the fixture", "[estimators]") {
    const auto w = fixture();
    CHECK_THAT(forward_cdf(w, 5.0, 1, 0.0).value, WithinAbs(2.0 / 3.0, 1e-15));
    // boundary included: the ratio 0.25 satisfies <= 0.25
    CHECK(forward_cdf(w, 5.0, 1, 0.25).value == 1.0);
    CHECK(forward_cdf(w, 5.0, 1, 0.0, Conditioning::positive_shock).value == 1.0);
    CHECK(forward_cdf(w, 5.0, 1, 1e12).value == 1.0);
    CHECK(forward_cdf(w, 5.0, 1, -1e12).value == 0.0);
    CHECK(forward_cdf(w, 5.0, 1, 0.0).exceedance_count == 3);

    // negative-shock conditioning: only i = 6 qualifies, ratio 3/12 = 0.25
    CHECK(forward_cdf(w, 5.0, 1, 0.0, Conditioning::negative_shock).value == 0.0);
    CHECK(forward_cdf(w, 5.0, 1, 0.3, Conditioning::negative_shock).value == 1.0);

    CHECK_THROWS_AS(forward_cdf(w, 5.0, 0, 0.0), InvalidParams);
    CHECK_THROWS_AS(forward_cdf(w, 5.0, 2, 0.0), InvalidParams);
    CHECK_THROWS_AS(forward_cdf(w, 100.0, 1, 0.0), NoExceedances);
}

TEST_CASE("backward estimator on the fixture", "[estimators]") {
    const auto w = fixture();
    // i=2: weight 2/10, 10/2 > 1; i=5: weight 1/6, 6/1 > 1; i=6: -2 > 1 fails
    const auto est = backward_cdf(w, 5.0, 1, 1.0, 1.0);
    CHECK_THAT(est.value, WithinAbs(79.0 / 90.0, 1e-12));
    CHECK(est.alpha_used.has_value());

    CHECK(backward_cdf(w, 5.0, 1, 1e12, 1.0).value == 1.0);
    CHECK(backward_cdf(w, 5.0, 1, -1e12, 1.0).value == 0.0);

    // all admitted weight bases < 1, so raising alpha raises the x >= 0 value
    const double v1 = backward_cdf(w, 5.0, 1, 1.0, 1.0).value;
    const double v2 = backward_cdf(w, 5.0, 1, 1.0, 2.0).value;
    CHECK(v2 >= v1);

    CHECK_THROWS_AS(backward_cdf(w, 5.0, 1, 1.0, 0.0), InvalidAlpha);
    CHECK_THROWS_AS(backward_cdf(w, 5.0, 1, 1.0, -1.0), InvalidAlpha);
}

TEST_CASE("sign-conditioned backward display, hand enumerated", "[estimators]") {
    const auto w = fixture();
    // positive conditioning, x = 1: denominator {10, 6}; numerator weights
    // (2/10) and (1/6) both admitted -> 1 - (11/30)/2 = 49/60
    CHECK_THAT(backward_cdf(w, 5.0, 1, 1.0, 1.0, Conditioning::positive_shock).value,
               WithinAbs(49.0 / 60.0, 1e-12));
    // negative conditioning, x = 1: numerator event X_i > u admits nothing
    CHECK_THAT(backward_cdf(w, 5.0, 1, 1.0, 1.0, Conditioning::negative_shock).value,
               WithinAbs(1.0, 1e-15));
    // positive conditioning, x = -0.5: lower-branch event X_i < -u admits
    // i = 6 with weight (-X_5/X_6) = 1/2 over denominator 2
    CHECK_THAT(backward_cdf(w, 5.0, 1, -0.5, 1.0, Conditioning::positive_shock).value,
               WithinAbs(0.25, 1e-12));
    // negative conditioning, x = -0.5: indicator 12/6 <= -0.5 fails
    CHECK_THAT(backward_cdf(w, 5.0, 1, -0.5, 1.0, Conditioning::negative_shock).value,
               WithinAbs(0.0, 1e-15));
}

TEST_CASE("statistic machinery: tails and complements", "[estimators]") {
    const auto w = fixture();
    StatisticSpec spec;
    spec.lag = 1;

    // forward upper tail is the exact complement of the cdf
    for (const double x : {-1.0, 0.0, 0.2, 1.0}) {
        spec.estimator = EstimatorKind::forward;
        spec.statistic = Statistic::upper_tail;
        spec.x = x;
        const double upper = estimate_statistic(w, 5.0, spec);
        CHECK_THAT(upper, WithinAbs(1.0 - forward_cdf(w, 5.0, 1, x).value, 1e-15));
    }

    // |ratio| > 1 among {-0.4, -2, 0.25} holds once
    spec.estimator = EstimatorKind::forward;
    spec.statistic = Statistic::abs_upper_tail;
    spec.x = 1.0;
    CHECK_THAT(estimate_statistic(w, 5.0, spec), WithinAbs(1.0 / 3.0, 1e-15));

    // backward aftershock probability: weights 0.2 + 1/6 from the upper
    // branch plus 0.5 from the lower branch, over 3 exceedances
    spec.estimator = EstimatorKind::backward;
    CHECK_THAT(estimate_statistic(w, 5.0, spec, 1.0), WithinAbs(13.0 / 45.0, 1e-12));

    // backward upper tail at x >= 0 complements the backward cdf
    spec.statistic = Statistic::upper_tail;
    spec.x = 1.0;
    CHECK_THAT(estimate_statistic(w, 5.0, spec, 1.0),
               WithinAbs(1.0 - backward_cdf(w, 5.0, 1, 1.0, 1.0).value, 1e-12));

    // sign-conditioned forward aftershock: positive conditioning sees
    // |ratios| {0.4, 2}, negative conditioning sees {0.25}
    spec.estimator = EstimatorKind::forward;
    spec.statistic = Statistic::abs_upper_tail;
    spec.conditioning = Conditioning::positive_shock;
    CHECK_THAT(estimate_statistic(w, 5.0, spec), WithinAbs(0.5, 1e-15));
    spec.conditioning = Conditioning::negative_shock;
    CHECK_THAT(estimate_statistic(w, 5.0, spec), WithinAbs(0.0, 1e-15));

    CHECK_THROWS_AS(detail::collect_terms(w, 5.0, 1, -0.5, EstimatorKind::forward,
                                          Conditioning::absolute, Statistic::abs_upper_tail),
                    InvalidParams);
}

TEST_CASE("forward cdf is monotone with unit range on simulated data", "[estimators]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84,
                                         {Innovation::Kind::student_t_standardized, 4.0});
    plan.length = 2010;
    plan.seed = 5;
    const SeriesWindow w(simulate(plan), 5);
    const double u = empirical_quantile(w.abs_core(), 0.95);
    for (const int t : {1, 3, -2}) {
        double prev = -1.0;
        for (double x = -3.0; x <= 3.0; x += 0.25) {
            const double v = forward_cdf(w, u, t, x).value;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("backward estimator stays in [0,1] for x >= 1", "[estimators]") {
    SimulationPlan plan;
    plan.model = ModelSpec::garch11_spec(0.1, 0.14, 0.84,
                                         {Innovation::Kind::student_t_standardized, 4.0});
    plan.length = 2010;
    plan.seed = 6;
    const SeriesWindow w(simulate(plan), 5);
    const double u = empirical_quantile(w.abs_core(), 0.95);
    const double alpha = hill_alpha(w, u).alpha;
    for (const int t : {1, 2, 5}) {
        double prev = -1.0;
        for (double x = 1.0; x <= 4.0; x += 0.5) {
            const double v = backward_cdf(w, u, t, x, alpha).value;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v >= prev);  // monotone on the x >= 0 branch
            prev = v;
        }
    }
}

TEST_CASE("estimators are scale equivariant", "[estimators]") {
    SimulationPlan plan;
    plan.model = ModelSpec::iid_spec({Innovation::Kind::student_t, 3.0});
    plan.length = 1004;
    plan.seed = 7;
    const auto raw = simulate(plan);
    const SeriesWindow w(raw, 2);
    const double c = 3.7;
    std::vector<double> scaled(raw);
    for (auto& v : scaled) v *= c;
    const SeriesWindow ws(std::move(scaled), 2);
    const double u = empirical_quantile(w.abs_core(), 0.95);

    CHECK_THAT(forward_cdf(ws, c * u, 2, 0.37).value,
               WithinAbs(forward_cdf(w, u, 2, 0.37).value, 1e-12));
    const double alpha = hill_alpha(w, u).alpha;
    CHECK_THAT(hill_alpha(ws, c * u).alpha, WithinAbs(alpha, 1e-9));
    CHECK_THAT(backward_cdf(ws, c * u, 2, 1.3, alpha).value,
               WithinAbs(backward_cdf(w, u, 2, 1.3, alpha).value, 1e-12));
    CHECK_THAT(p_hat(ws, c * u), WithinAbs(p_hat(w, u), 1e-15));
}

TEST_CASE("denominator equals the absolute exceedance count", "[estimators]") {
    SimulationPlan plan;
    plan.model = ModelSpec::iid_spec({Innovation::Kind::student_t, 4.0});
    plan.length = 504;
    plan.seed = 8;
    const SeriesWindow w(simulate(plan), 2);
    const double u = empirical_quantile(w.abs_core(), 0.9);
    CHECK(forward_cdf(w, u, 1, 0.5).exceedance_count
          == exceedance_indices(w, u, Conditioning::absolute).size());
}

TEST_CASE("p_hat is near one half for symmetric innovations", "[estimators]") {
    SimulationPlan plan;
    plan.model = ModelSpec::iid_spec({Innovation::Kind::student_t, 3.0});
    plan.length = 50000;
    plan.seed = 9;
    const SeriesWindow w(simulate(plan), 0);
    const double u = empirical_quantile(w.abs_core(), 0.95);
    const double p = p_hat(w, u);
    CHECK(p > 0.46);
    CHECK(p < 0.54);
}

TEST_CASE("sweep vectorizes the cdf over grid and lags", "[estimators]") {
    const auto w = fixture();
    const auto curve = sweep(w, 5.0, EstimatorKind::forward, Conditioning::absolute, {1}, {0.0});
    REQUIRE(curve.cells.size() == 1);
    CHECK_THAT(curve.cells[0].value, WithinAbs(2.0 / 3.0, 1e-15));

    const auto empty = sweep(w, 5.0, EstimatorKind::forward, Conditioning::absolute, {}, {0.0});
    CHECK(empty.cells.empty());

    const auto grid3 = sweep(w, 5.0, EstimatorKind::forward, Conditioning::absolute, {1, -1},
                             {-1.0, 0.0, 1.0});
    REQUIRE(grid3.cells.size() == 6);
    CHECK(grid3.cells[0].value <= grid3.cells[1].value);
    CHECK(grid3.cells[1].value <= grid3.cells[2].value);
    CHECK(grid3.cells[3].lag == -1);

    // the backward sweep computes Hill once; injecting the same value by
    // hand must match
    const double u = 5.0;
    const double alpha = hill_alpha(w, u).alpha;
    const auto bw = sweep(w, u, EstimatorKind::backward, Conditioning::absolute, {1}, {1.0, 2.0});
    CHECK_THAT(bw.cells[0].value, WithinAbs(backward_cdf(w, u, 1, 1.0, alpha).value, 1e-15));

    CHECK_THROWS_AS(sweep(w, 5.0, EstimatorKind::forward, Conditioning::absolute, {1},
                          {1.0, 0.0}),
                    InvalidParams);
}
