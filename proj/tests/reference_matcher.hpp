#pragma once

// Brute-force reference matcher used as an independent oracle for the order
// book. Keeps every resting order in a flat vector and re-scans it for the
// best price-time candidate on each fill. Deliberately shares no code with
// delaymarket::OrderBook.

#include "delaymarket/order_book.hpp"

#include <algorithm>
#include <vector>

namespace refmatch {

using delaymarket::BookLevel;
using delaymarket::Cents;
using delaymarket::Order;
using delaymarket::Side;
using delaymarket::Trade;
using delaymarket::Volume;

struct RestingOrder {
    std::uint64_t order_id;
    Side side;
    Cents price;
    Volume volume;
    delaymarket::Step submit_step;
    std::uint64_t sequence;
};

class ReferenceMatcher {
public:
    std::vector<Trade> submit(Order order) {
        order.sequence = next_sequence_++;
        std::vector<Trade> trades;
        while (order.volume > 0) {
            int best = -1;
            for (int i = 0; i < static_cast<int>(resting_.size()); ++i) {
                const RestingOrder& r = resting_[static_cast<std::size_t>(i)];
                if (r.side == order.side) continue;
                const bool crosses = order.side == Side::Buy ? r.price <= order.price
                                                             : r.price >= order.price;
                if (!crosses) continue;
                if (best < 0) {
                    best = i;
                    continue;
                }
                const RestingOrder& b = resting_[static_cast<std::size_t>(best)];
                const bool better_price =
                    order.side == Side::Buy ? r.price < b.price : r.price > b.price;
                const bool same_price = r.price == b.price;
                const bool earlier = r.submit_step < b.submit_step ||
                                     (r.submit_step == b.submit_step && r.sequence < b.sequence);
                if (better_price || (same_price && earlier)) best = i;
            }
            if (best < 0) break;
            RestingOrder& r = resting_[static_cast<std::size_t>(best)];
            const Volume v = std::min(order.volume, r.volume);
            Trade t;
            t.price = r.price;
            t.volume = v;
            t.step = order.submit_step;
            if (order.side == Side::Buy) {
                t.buy_order_id = order.order_id;
                t.sell_order_id = r.order_id;
            } else {
                t.buy_order_id = r.order_id;
                t.sell_order_id = order.order_id;
            }
            trades.push_back(t);
            order.volume -= v;
            r.volume -= v;
            if (r.volume == 0) resting_.erase(resting_.begin() + best);
        }
        if (order.volume > 0)
            resting_.push_back({order.order_id, order.side, order.price, order.volume,
                                order.submit_step, order.sequence});
        return trades;
    }

    bool cancel(std::uint64_t order_id) {
        for (std::size_t i = 0; i < resting_.size(); ++i) {
            if (resting_[i].order_id == order_id) {
                resting_.erase(resting_.begin() + static_cast<long>(i));
                return true;
            }
        }
        return false;
    }

    std::vector<BookLevel> side_levels(Side side) const {
        std::vector<BookLevel> levels;
        for (const RestingOrder& r : resting_) {
            if (r.side != side) continue;
            bool found = false;
            for (BookLevel& l : levels) {
                if (l.price == r.price) {
                    l.volume += r.volume;
                    found = true;
                }
            }
            if (!found) levels.push_back({r.price, r.volume});
        }
        std::sort(levels.begin(), levels.end(), [&](const BookLevel& a, const BookLevel& b) {
            return side == Side::Buy ? a.price > b.price : a.price < b.price;
        });
        return levels;
    }

private:
    std::vector<RestingOrder> resting_;
    std::uint64_t next_sequence_ = 0;
};

} // namespace refmatch
