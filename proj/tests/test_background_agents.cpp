#include "doctest.h"

#include "delaymarket/background_agents.hpp"

#include <cmath>
#include <vector>

using namespace delaymarket;

TEST_CASE("fundamental: fixed point and full reversion") {
    RandomStream rng(1);
    ValueParams p;
    p.fundamental_mean = 10000.0;
    p.volatility = 0.0;
    p.reversion_rate = 0.3;
    CHECK(fundamental_step(10000.0, p, rng) == doctest::Approx(10000.0));
    p.reversion_rate = 1.0;
    CHECK(fundamental_step(9000.0, p, rng) == doctest::Approx(10000.0));
}

TEST_CASE("fundamental: long-run mean matches the recursion's stationary mean") {
    ValueParams p;
    p.fundamental_mean = 10000.0;
    p.reversion_rate = 0.05;
    p.volatility = 2.0;
    RandomStream rng(2024);
    const int n = 100000;
    double x = p.fundamental_mean;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        x = fundamental_step(x, p, rng);
        sum += x;
    }
    const double sample_mean = sum / n;
    // AR(1) oracle: stationary var = vol^2 / (1 - (1-rate)^2), and the mean of
    // n correlated samples has variance var * (1+rho)/(1-rho) / n
    const double rho = 1.0 - p.reversion_rate;
    const double stat_var = p.volatility * p.volatility / (1.0 - rho * rho);
    const double se = std::sqrt(stat_var * (1.0 + rho) / (1.0 - rho) / n);
    CHECK(std::fabs(sample_mean - p.fundamental_mean) <= 3.0 * se);
}

TEST_CASE("fundamental stays above the one-cent floor") {
    ValueParams p;
    p.fundamental_mean = 2.0;
    p.reversion_rate = 0.01;
    p.volatility = 50.0;
    RandomStream rng(5);
    double x = 2.0;
    for (int i = 0; i < 10000; ++i) {
        x = fundamental_step(x, p, rng);
        REQUIRE(x >= 1.0);
    }
}

TEST_CASE("consumer: arrival probability zero never trades") {
    ConsumerParams p;
    p.arrival_prob = 0.0;
    RandomStream rng(3);
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(consumer_act(p, 20001, rng).has_value());
}

TEST_CASE("consumer: rounds toward its own side of a half-cent mid") {
    ConsumerParams p;
    p.arrival_prob = 1.0;
    p.max_offset = 0;
    p.order_size = 100;
    RandomStream rng(4);
    bool saw_buy = false, saw_sell = false;
    for (int i = 0; i < 64; ++i) {
        const auto req = consumer_act(p, 20001, rng); // mid 10000.5
        REQUIRE(req.has_value());
        if (req->side == Side::Buy) {
            CHECK(req->price == 10000);
            saw_buy = true;
        } else {
            CHECK(req->price == 10001);
            saw_sell = true;
        }
        CHECK(req->volume == 100);
    }
    CHECK(saw_buy);
    CHECK(saw_sell);
}

TEST_CASE("consumer: buy fraction is binomial around one half") {
    ConsumerParams p;
    p.arrival_prob = 1.0;
    p.max_offset = 3;
    RandomStream rng(77);
    const int n = 100000;
    int buys = 0;
    for (int i = 0; i < n; ++i) {
        const auto req = consumer_act(p, 20000, rng);
        REQUIRE(req.has_value());
        if (req->side == Side::Buy) ++buys;
        CHECK(req->price >= 1);
        CHECK(req->volume > 0);
        if (req->side == Side::Buy)
            CHECK(req->price <= 10000);
        else
            CHECK(req->price >= 10000);
    }
    const double frac = static_cast<double>(buys) / n;
    const double sigma = std::sqrt(0.25 / n);
    CHECK(std::fabs(frac - 0.5) <= 3.0 * sigma);
}

TEST_CASE("momentum: flat history holds, trends trade at the touch") {
    MomentumParams p;
    p.short_window = 5;
    p.long_window = 20;
    p.arrival_prob = 1.0;
    p.order_size = 50;
    RandomStream rng(6);

    std::vector<double> flat(25, 10000.0);
    CHECK_FALSE(momentum_act(p, flat, 9999, 10001, rng).has_value());

    std::vector<double> rising;
    for (int i = 0; i < 25; ++i) rising.push_back(10000.0 + i);
    const auto buy = momentum_act(p, rising, 9999, 10001, rng);
    REQUIRE(buy.has_value());
    CHECK(buy->side == Side::Buy);
    CHECK(buy->price == 10001); // best ask

    std::vector<double> falling;
    for (int i = 0; i < 25; ++i) falling.push_back(10000.0 - i);
    const auto sell = momentum_act(p, falling, 9999, 10001, rng);
    REQUIRE(sell.has_value());
    CHECK(sell->side == Side::Sell);
    CHECK(sell->price == 9999); // best bid

    // ten steps at 100 then ten at 110: short MA 110 vs long MA 105 -> buy
    std::vector<double> step_up;
    for (int i = 0; i < 10; ++i) step_up.push_back(100.0);
    for (int i = 0; i < 10; ++i) step_up.push_back(110.0);
    const auto step_buy = momentum_act(p, step_up, 99, 111, rng);
    REQUIRE(step_buy.has_value());
    CHECK(step_buy->side == Side::Buy);

    std::vector<double> too_short(10, 10000.0);
    CHECK_FALSE(momentum_act(p, too_short, 9999, 10001, rng).has_value());
}

TEST_CASE("value trader: buys undervalued, sells overvalued, holds at fair") {
    ValueParams p;
    p.arrival_prob = 1.0;
    p.order_size = 10;
    RandomStream rng(8);
    CHECK_FALSE(value_act(p, 10000.5, 20001, 9999, 10001, rng).has_value());
    const auto buy = value_act(p, 10100.0, 20001, 9999, 10001, rng);
    REQUIRE(buy.has_value());
    CHECK(buy->side == Side::Buy);
    CHECK(buy->price == 10001);
    const auto sell = value_act(p, 9900.0, 20001, 9999, 10001, rng);
    REQUIRE(sell.has_value());
    CHECK(sell->side == Side::Sell);
    CHECK(sell->price == 9999);
}

TEST_CASE("decisions are reproducible bit-for-bit from a fixed stream") {
    ConsumerParams p;
    p.arrival_prob = 0.5;
    p.max_offset = 4;
    auto run = [&] {
        RandomStream rng(31337);
        std::vector<std::pair<Cents, int>> out;
        for (int i = 0; i < 500; ++i) {
            const auto req = consumer_act(p, 20001, rng);
            if (req)
                out.emplace_back(req->price, req->side == Side::Buy ? 0 : 1);
            else
                out.emplace_back(-1, -1);
        }
        return out;
    };
    CHECK(run() == run());
}
