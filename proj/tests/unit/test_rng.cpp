#include "sptail/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

using namespace sptail;

TEST_CASE("streams are a pure function of the seed", "[rng]") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform01(), y = b.uniform01(), z = c.uniform01();
        all_equal = all_equal && x == y;
        any_diff = any_diff || x != z;
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("derive_seed separates replicate streams", "[rng]") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(derive_seed(7, k));
    CHECK(seen.size() == 10000);
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("uniform01 moments and range", "[rng]") {
    Rng rng(1);
    double sum = 0.0;
    bool in_range = true;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        in_range = in_range && u >= 0.0 && u < 1.0;
        sum += u;
    }
    CHECK(in_range);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(0.5, 0.004));
}

TEST_CASE("normal sampler moments", "[rng]") {
    Rng rng(2);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.015));
    CHECK_THAT(sumsq / n - mean * mean, Catch::Matchers::WithinAbs(1.0, 0.02));
}

TEST_CASE("gamma sampler matches shape moments", "[rng]") {
    Rng rng(3);
    const double shape = 2.3;
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gamma(shape);
        sum += g;
        sumsq += g * g;
    }
    const double mean = sum / n;
    CHECK_THAT(mean, Catch::Matchers::WithinAbs(shape, 0.03));
    CHECK_THAT(sumsq / n - mean * mean, Catch::Matchers::WithinAbs(shape, 0.08));

    // shape < 1 boosting path
    Rng rng2(4);
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) sum2 += rng2.gamma(0.4);
    CHECK_THAT(sum2 / n, Catch::Matchers::WithinAbs(0.4, 0.02));
}

TEST_CASE("standardized t has unit variance, raw t does not", "[rng]") {
    Rng rng(5);
    const int n = 200000;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = rng.student_t_standardized(6.0);
        sumsq += t * t;
    }
    CHECK_THAT(sumsq / n, Catch::Matchers::WithinAbs(1.0, 0.04));

    Rng rng2(6);
    double sumsq_raw = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = rng2.student_t(6.0);
        sumsq_raw += t * t;
    }
    CHECK_THAT(sumsq_raw / n, Catch::Matchers::WithinAbs(6.0 / 4.0, 0.06));

    CHECK_THROWS_AS(rng.student_t_standardized(2.0), InvalidParams);
}

TEST_CASE("geometric block lengths", "[rng]") {
    Rng rng(7);
    bool all_one = true;
    for (int i = 0; i < 100; ++i) all_one = all_one && rng.geometric(1.0) == 1;
    CHECK(all_one);

    const double p = 0.3;
    const int n = 200000;
    double sum = 0.0;
    std::uint64_t min_l = 99;
    for (int i = 0; i < n; ++i) {
        const auto l = rng.geometric(p);
        sum += static_cast<double>(l);
        min_l = std::min(min_l, l);
    }
    CHECK(min_l == 1);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(1.0 / p, 0.03));
}

TEST_CASE("pareto tail frequencies", "[rng]") {
    Rng rng(8);
    const double alpha = 2.6;
    const int n = 200000;
    int over2 = 0;
    bool above_one = true;
    for (int i = 0; i < n; ++i) {
        const double x = rng.pareto(alpha);
        above_one = above_one && x >= 1.0;
        if (x > 2.0) ++over2;
    }
    CHECK(above_one);
    CHECK_THAT(static_cast<double>(over2) / n,
               Catch::Matchers::WithinAbs(std::pow(2.0, -alpha), 0.004));
}

TEST_CASE("uniform_below covers the range without bias", "[rng]") {
    Rng rng(9);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[rng.uniform_below(10)];
    for (const int c : counts)
        CHECK_THAT(static_cast<double>(c) / n, Catch::Matchers::WithinAbs(0.1, 0.01));
}
