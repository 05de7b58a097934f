#include "doctest.h"

#include "delaymarket/welfare.hpp"

#include <cmath>
#include <vector>

using namespace delaymarket;

TEST_CASE("ge index: equal outcomes score zero") {
    CHECK(ge_index({3.0, 3.0, 3.0}, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ge_index({3.0, 3.0, 3.0}, 6.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ge index: hand-computed values") {
    // GE_2([1,1,4]) = (1/6)((0.25-1)+(0.25-1)+(4-1)) = 0.25
    CHECK(ge_index({1.0, 1.0, 4.0}, 2.0) == doctest::Approx(0.25).epsilon(1e-12));
    // GE_6([1,3]) = (1/60)((0.5^6-1)+(1.5^6-1)) = 9.40625/60
    CHECK(ge_index({1.0, 3.0}, 6.0) == doctest::Approx(9.40625 / 60.0).epsilon(1e-12));
}

TEST_CASE("ge index: rejects bad inputs") {
    CHECK_THROWS_AS(ge_index({1.0, -1.0}, 2.0), std::domain_error);
    CHECK_THROWS_AS(ge_index({1.0, 0.0}, 2.0), std::domain_error);
    CHECK_THROWS_AS(ge_index({1.0, 2.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ge_index({1.0, 2.0}, 1.0), std::invalid_argument);
}

TEST_CASE("theil-l: hand value and scale invariance") {
    CHECK(theil_l({5.0, 5.0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(theil_l({1.0, 3.0}) == doctest::Approx(0.14384103622589045).epsilon(1e-12));
    const std::vector<double> y = {0.7, 2.3, 9.1, 4.4};
    for (double c : {0.1, 1.0, 10.0}) {
        std::vector<double> scaled;
        for (double v : y) scaled.push_back(c * v);
        CHECK(std::fabs(theil_l(scaled) - theil_l(y)) < 1e-9);
        CHECK(std::fabs(ge_index(scaled, 6.0) - ge_index(y, 6.0)) < 1e-9);
    }
    CHECK_THROWS_AS(theil_l({1.0, -2.0}), std::domain_error);
}

TEST_CASE("swf: report composition and hand values") {
    const WelfareReport equal = swf({2.0, 2.0, 2.0}, 6.0);
    CHECK(equal.swf_ge == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(equal.swf_theil == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(equal.equality_ge == doctest::Approx(1.0).epsilon(1e-12));

    const WelfareReport r = swf({1.0, 3.0}, 6.0);
    CHECK(r.mean == doctest::Approx(2.0));
    // frozen from the oracle: 2*exp(-9.40625/60)
    CHECK(r.swf_ge == doctest::Approx(1.7097999018858923).epsilon(1e-12));
    // exp(-Theil_L)*mean is the geometric mean: sqrt(3)
    CHECK(r.swf_theil == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(r.swf_ge == doctest::Approx(r.equality_ge * r.mean).epsilon(1e-12));
    CHECK(r.swf_theil == doctest::Approx(r.equality_theil * r.mean).epsilon(1e-12));
}

TEST_CASE("equality factor lies in (0,1], 1 only for equal outcomes") {
    RandomStream rng(11);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> y;
        const int n = static_cast<int>(rng.uniform_int(1, 8));
        for (int k = 0; k < n; ++k) y.push_back(0.5 + 9.5 * rng.uniform01());
        const WelfareReport r = swf(y, 6.0);
        CHECK(r.equality_ge > 0.0);
        CHECK(r.equality_ge <= 1.0 + 1e-12);
        CHECK(r.equality_theil > 0.0);
        CHECK(r.equality_theil <= 1.0 + 1e-12);
        bool all_equal = true;
        for (double v : y) all_equal = all_equal && std::fabs(v - y[0]) < 1e-15;
        if (!all_equal && n > 1) {
            CHECK(r.equality_theil < 1.0 - 1e-12);
        }
    }
}

TEST_CASE("ge approaches theil-l as kappa approaches zero") {
    RandomStream rng(13);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> y;
        const int n = static_cast<int>(rng.uniform_int(2, 10));
        for (int k = 0; k < n; ++k) y.push_back(0.5 + 4.5 * rng.uniform01());
        const double t = theil_l(y);
        const double g = ge_index(y, 0.001);
        CHECK(std::fabs(g - t) <= 1e-3 * std::max(1.0, t));
    }
}

TEST_CASE("geometric-mean identity for the theil swf") {
    RandomStream rng(17);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> y;
        const int n = static_cast<int>(rng.uniform_int(1, 9));
        for (int k = 0; k < n; ++k) y.push_back(0.2 + 8.0 * rng.uniform01());
        double log_sum = 0.0;
        for (double v : y) log_sum += std::log(v);
        const double geo = std::exp(log_sum / n);
        const WelfareReport r = swf(y, 6.0);
        CHECK(r.swf_theil == doctest::Approx(geo).epsilon(1e-9));
    }
}

TEST_CASE("indices are permutation invariant") {
    const std::vector<double> y = {1.5, 4.0, 0.25, 7.75, 2.0};
    const std::vector<double> perm = {7.75, 0.25, 2.0, 1.5, 4.0};
    CHECK(ge_index(y, 6.0) == doctest::Approx(ge_index(perm, 6.0)).epsilon(1e-12));
    CHECK(theil_l(y) == doctest::Approx(theil_l(perm)).epsilon(1e-12));
}

TEST_CASE("sanitize: positive vectors pass through") {
    const auto s = sanitize_outcomes({1.0, 2.0}, 0.01);
    CHECK(s.applied_shift == 0.0);
    CHECK(s.values == std::vector<double>{1.0, 2.0});
}

TEST_CASE("sanitize: shifts to strict positivity") {
    const auto s = sanitize_outcomes({-5.0, 5.0}, 0.01);
    CHECK(s.applied_shift == doctest::Approx(5.05).epsilon(1e-12));
    REQUIRE(s.values.size() == 2);
    CHECK(s.values[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(s.values[1] == doctest::Approx(10.05).epsilon(1e-12));
}

TEST_CASE("sanitize: degenerate all-zero vector uses the unit floor") {
    const auto s = sanitize_outcomes({0.0}, 0.01);
    REQUIRE(s.values.size() == 1);
    CHECK(s.values[0] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(s.applied_shift == doctest::Approx(0.01).epsilon(1e-12));
}
