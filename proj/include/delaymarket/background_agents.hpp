#pragma once

#include "delaymarket/common.hpp"
#include "delaymarket/order_book.hpp"

#include <optional>
#include <span>

namespace delaymarket {

// An order intent from a trading rule; the environment stamps ids and step.
struct OrderRequest {
    Side side = Side::Buy;
    Cents price = 0;
    Volume volume = 0;
};

struct ConsumerParams {
    double arrival_prob = 0.3;
    Cents max_offset = 5;
    Volume order_size = 100;
};

struct MomentumParams {
    int short_window = 5;
    int long_window = 20;
    Volume order_size = 100;
    double arrival_prob = 0.75;
};

struct ValueParams {
    double fundamental_mean = 10000.5; // cents
    double reversion_rate = 0.05;      // per step, in (0,1]
    double volatility = 2.0;           // cents per sqrt-step
    Volume order_size = 100;
    double arrival_prob = 0.75;
};

// Mean-reverting Gaussian recursion for the exogenous value signal, floored
// at one cent.
inline double fundamental_step(double current, const ValueParams& params, RandomStream& rng) {
    double next = current + params.reversion_rate * (params.fundamental_mean - current);
    if (params.volatility > 0.0) next += params.volatility * rng.normal();
    return std::max(next, 1.0);
}

// Uniformly random trader: on arrival, picks a side uniformly and prices a
// fixed-size order within max_offset cents of mid, on its own side of the
// book (buys at or below mid, sells at or above). Draw order is fixed:
// arrival, side, offset.
inline std::optional<OrderRequest> consumer_act(const ConsumerParams& params, HalfCents mid_x2,
                                                RandomStream& rng) {
    if (!rng.bernoulli(params.arrival_prob)) return std::nullopt;
    const Side side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
    const Cents offset = params.max_offset > 0 ? rng.uniform_int(0, params.max_offset) : 0;
    OrderRequest req;
    req.side = side;
    req.volume = params.order_size;
    if (side == Side::Buy)
        req.price = floor_half_to_cents(mid_x2) - offset;
    else
        req.price = ceil_half_to_cents(mid_x2) + offset;
    if (req.price < 1) req.price = 1;
    return req;
}

// Moving-average crossover: short MA above long MA buys at the touch, below
// sells at the touch. mid_history is oldest-to-newest and must cover the
// long window.
inline std::optional<OrderRequest> momentum_act(const MomentumParams& params,
                                                std::span<const double> mid_history,
                                                Cents best_bid, Cents best_ask,
                                                RandomStream& rng) {
    if (!rng.bernoulli(params.arrival_prob)) return std::nullopt;
    if (static_cast<int>(mid_history.size()) < params.long_window) return std::nullopt;
    auto mean_tail = [&](int window) {
        double sum = 0.0;
        for (int i = 0; i < window; ++i) sum += mid_history[mid_history.size() - 1 - i];
        return sum / window;
    };
    const double short_ma = mean_tail(params.short_window);
    const double long_ma = mean_tail(params.long_window);
    if (short_ma > long_ma && best_ask > 0)
        return OrderRequest{Side::Buy, best_ask, params.order_size};
    if (short_ma < long_ma && best_bid > 0)
        return OrderRequest{Side::Sell, best_bid, params.order_size};
    return std::nullopt;
}

// Fundamental-value trader: buys at the touch when the exogenous value is
// above mid (undervalued market), sells when below.
inline std::optional<OrderRequest> value_act(const ValueParams& params, double fundamental,
                                             HalfCents mid_x2, Cents best_bid, Cents best_ask,
                                             RandomStream& rng) {
    if (!rng.bernoulli(params.arrival_prob)) return std::nullopt;
    const double mid = static_cast<double>(mid_x2) / 2.0;
    if (fundamental > mid && best_ask > 0)
        return OrderRequest{Side::Buy, best_ask, params.order_size};
    if (fundamental < mid && best_bid > 0)
        return OrderRequest{Side::Sell, best_bid, params.order_size};
    return std::nullopt;
}

} // namespace delaymarket
