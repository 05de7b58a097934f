#pragma once

#include "delaymarket/common.hpp"

#include <deque>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace delaymarket {

enum class Side : std::uint8_t { Buy, Sell };

inline Side opposite(Side s) { return s == Side::Buy ? Side::Sell : Side::Buy; }

struct Order {
    std::uint64_t order_id = 0;
    std::int32_t agent_id = 0;
    Side side = Side::Buy;
    Cents price = 0;          // integer cents
    Volume volume = 0;        // shares
    Step submit_step = 0;
    std::uint64_t sequence = 0; // stamped by the book on arrival
};

struct Trade {
    std::uint64_t buy_order_id = 0;
    std::uint64_t sell_order_id = 0;
    Cents price = 0;   // the resting order's price
    Volume volume = 0;
    Step step = 0;
};

struct BookLevel {
    Cents price = 0;
    Volume volume = 0;
};

struct BookSnapshot {
    std::vector<BookLevel> bids; // price descending
    std::vector<BookLevel> asks; // price ascending
    Step step = 0;
};

enum class SubmitStatus : std::uint8_t { Accepted, RejectedDuplicateId, RejectedInvalid };

struct SubmitResult {
    SubmitStatus status = SubmitStatus::Accepted;
    std::vector<Trade> trades;
    Volume resting_volume = 0; // residual left in the book
};

struct CancelResult {
    bool found = false;
    Volume cancelled_volume = 0;
};

// Aggregate quote statistics. mid and depth carry half-cent resolution and
// are stored as value*2 to keep them integral.
struct BookStats {
    bool available = false; // both sides non-empty
    Cents best_bid = 0;
    Cents best_ask = 0;
    HalfCents mid_x2 = 0;   // best_bid + best_ask
    Cents spread = 0;       // best_ask - best_bid
    HalfCents depth_x2 = 0; // worst_ask - worst_bid
    std::vector<BookLevel> bid_levels; // top L, zero-padded
    std::vector<BookLevel> ask_levels; // top L, zero-padded
};

// Lifetime accounting for one order, kept for conservation checks and the
// trade-tape dump.
struct OrderAccount {
    std::int32_t agent_id = 0;
    Side side = Side::Buy;
    Cents price = 0;
    Volume original = 0;
    Volume traded = 0;
    Volume cancelled = 0;
    Volume resting = 0;
};

// Price-time-priority limit order book with continuous matching. Incoming
// orders match on arrival against the opposite side, best price first, FIFO
// within a level; trades print at the resting order's price.
class OrderBook {
public:
    OrderBook() = default;

    SubmitResult submit_limit_order(const Order& incoming) {
        SubmitResult result;
        if (incoming.price <= 0 || incoming.volume <= 0) {
            result.status = SubmitStatus::RejectedInvalid;
            return result;
        }
        if (incoming.submit_step < last_step_) {
            result.status = SubmitStatus::RejectedInvalid;
            return result;
        }
        if (accounts_.count(incoming.order_id)) {
            result.status = SubmitStatus::RejectedDuplicateId;
            return result;
        }
        last_step_ = incoming.submit_step;

        Order order = incoming;
        order.sequence = next_sequence_++;
        accounts_[order.order_id] =
            OrderAccount{order.agent_id, order.side, order.price, order.volume, 0, 0, 0};

        Volume remaining = order.volume;
        if (order.side == Side::Buy) {
            remaining = match_against(asks_, order, remaining, result.trades,
                                      [](Cents level, Cents lim) { return level <= lim; });
        } else {
            remaining = match_against(bids_, order, remaining, result.trades,
                                      [](Cents level, Cents lim) { return level >= lim; });
        }

        if (remaining > 0) {
            Resting r{order.order_id, order.agent_id, remaining, order.submit_step, order.sequence};
            if (order.side == Side::Buy)
                bids_[order.price].push_back(r);
            else
                asks_[order.price].push_back(r);
            accounts_[order.order_id].resting = remaining;
        }
        result.resting_volume = remaining;
        accounts_[order.order_id].traded = order.volume - remaining;
        for (const Trade& t : result.trades) tape_.push_back(t);
        return result;
    }

    CancelResult cancel_order(std::uint64_t order_id) {
        auto it = accounts_.find(order_id);
        if (it == accounts_.end() || it->second.resting == 0) return CancelResult{false, 0};
        OrderAccount& acct = it->second;
        CancelResult res{true, acct.resting};
        if (acct.side == Side::Buy)
            remove_resting(bids_, acct.price, order_id);
        else
            remove_resting(asks_, acct.price, order_id);
        acct.cancelled += acct.resting;
        acct.resting = 0;
        return res;
    }

    BookStats market_stats(int level_count) const {
        BookStats s;
        s.available = !bids_.empty() && !asks_.empty();
        if (s.available) {
            s.best_bid = bids_.begin()->first;
            s.best_ask = asks_.begin()->first;
            s.mid_x2 = s.best_bid + s.best_ask;
            s.spread = s.best_ask - s.best_bid;
            s.depth_x2 = asks_.rbegin()->first - bids_.rbegin()->first;
        }
        s.bid_levels = top_levels(bids_, level_count);
        s.ask_levels = top_levels(asks_, level_count);
        return s;
    }

    BookSnapshot snapshot(Step step) const {
        BookSnapshot snap;
        snap.step = step;
        for (const auto& [price, q] : bids_) snap.bids.push_back({price, level_volume(q)});
        for (const auto& [price, q] : asks_) snap.asks.push_back({price, level_volume(q)});
        return snap;
    }

    const std::vector<Trade>& tape() const { return tape_; }
    std::size_t tape_size() const { return tape_.size(); }

    bool has_order(std::uint64_t order_id) const { return accounts_.count(order_id) != 0; }

    const OrderAccount& order_account(std::uint64_t order_id) const {
        auto it = accounts_.find(order_id);
        if (it == accounts_.end()) throw ContractViolation("order_account: unknown order id");
        return it->second;
    }

    const std::unordered_map<std::uint64_t, OrderAccount>& accounts() const { return accounts_; }

    bool bids_empty() const { return bids_.empty(); }
    bool asks_empty() const { return asks_.empty(); }

private:
    struct Resting {
        std::uint64_t order_id;
        std::int32_t agent_id;
        Volume volume;
        Step submit_step;
        std::uint64_t sequence;
    };

    using BidMap = std::map<Cents, std::deque<Resting>, std::greater<Cents>>;
    using AskMap = std::map<Cents, std::deque<Resting>>;

    template <typename Map, typename Crosses>
    Volume match_against(Map& book, const Order& order, Volume remaining,
                         std::vector<Trade>& trades, Crosses crosses) {
        while (remaining > 0 && !book.empty()) {
            auto level_it = book.begin();
            if (!crosses(level_it->first, order.price)) break;
            auto& queue = level_it->second;
            Resting& top = queue.front();
            const Volume traded = std::min(remaining, top.volume);
            Trade t;
            t.price = level_it->first; // resting price
            t.volume = traded;
            t.step = order.submit_step;
            if (order.side == Side::Buy) {
                t.buy_order_id = order.order_id;
                t.sell_order_id = top.order_id;
            } else {
                t.buy_order_id = top.order_id;
                t.sell_order_id = order.order_id;
            }
            trades.push_back(t);
            remaining -= traded;
            top.volume -= traded;
            OrderAccount& rest_acct = accounts_[top.order_id];
            rest_acct.traded += traded;
            rest_acct.resting -= traded;
            if (top.volume == 0) {
                queue.pop_front();
                if (queue.empty()) book.erase(level_it);
            }
        }
        return remaining;
    }

    template <typename Map>
    void remove_resting(Map& book, Cents price, std::uint64_t order_id) {
        auto level_it = book.find(price);
        if (level_it == book.end()) throw ContractViolation("cancel: missing level");
        auto& queue = level_it->second;
        for (auto it = queue.begin(); it != queue.end(); ++it) {
            if (it->order_id == order_id) {
                queue.erase(it);
                if (queue.empty()) book.erase(level_it);
                return;
            }
        }
        throw ContractViolation("cancel: order not in level");
    }

    static Volume level_volume(const std::deque<Resting>& q) {
        Volume v = 0;
        for (const Resting& r : q) v += r.volume;
        return v;
    }

    template <typename Map>
    static std::vector<BookLevel> top_levels(const Map& book, int level_count) {
        std::vector<BookLevel> levels;
        levels.reserve(static_cast<std::size_t>(level_count));
        for (const auto& [price, q] : book) {
            if (static_cast<int>(levels.size()) >= level_count) break;
            levels.push_back({price, level_volume(q)});
        }
        while (static_cast<int>(levels.size()) < level_count) levels.push_back({0, 0});
        return levels;
    }

    BidMap bids_;
    AskMap asks_;
    std::unordered_map<std::uint64_t, OrderAccount> accounts_;
    std::vector<Trade> tape_;
    std::uint64_t next_sequence_ = 0;
    Step last_step_ = 0;
};

} // namespace delaymarket
