#pragma once

#include "delaymarket/background_agents.hpp"
#include "delaymarket/common.hpp"
#include "delaymarket/order_book.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace delaymarket {

struct BackgroundRosterConfig {
    int consumer_count = 20;
    ConsumerParams consumer{};
    int momentum_count = 2;
    MomentumParams momentum{};
    int value_count = 2;
    ValueParams value{};
};

struct EnvConfig {
    Step horizon = 390;
    Step delay = 0;
    int quote_history = 5;  // L
    int trade_history = 5;  // M
    int snapshot_levels = 5;
    Volume order_size = 100;
    std::vector<HalfCents> halfspreads_x2 = {1, 3, 5, 7, 9}; // 0.5..4.5 cents
    double gamma = 0.9999;
    HalfCents initial_mid_x2 = 20001; // 10000.5 cents
    std::uint64_t seed = 0;
    bool observe_both_players = false;
    BackgroundRosterConfig background;

    void validate() const {
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (delay < 0 || delay > horizon) throw ConfigError("delay must be in [0, horizon]");
        if (quote_history < 1 || trade_history < 1)
            throw ConfigError("quote/trade history must be >= 1");
        if (snapshot_levels < 1) throw ConfigError("snapshot_levels must be >= 1");
        if (order_size <= 0) throw ConfigError("order_size must be positive");
        if (halfspreads_x2.empty()) throw ConfigError("halfspreads must be non-empty");
        HalfCents prev = 0;
        for (HalfCents h : halfspreads_x2) {
            if (h <= 0) throw ConfigError("halfspreads must be positive");
            if (h <= prev && prev != 0) throw ConfigError("halfspreads must be strictly increasing");
            prev = h;
        }
        if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0,1)");
        // the seeded book needs snapshot_levels strictly positive bid prices
        if (floor_half_to_cents(initial_mid_x2 - 1) - (snapshot_levels - 1) < 1)
            throw ConfigError("initial_mid too small for the seeded book depth");
        const auto& b = background;
        if (b.consumer_count < 0 || b.momentum_count < 0 || b.value_count < 0)
            throw ConfigError("agent counts must be non-negative");
        auto check_prob = [](double p, const char* what) {
            if (p < 0.0 || p > 1.0) throw ConfigError(std::string(what) + " must be in [0,1]");
        };
        check_prob(b.consumer.arrival_prob, "consumer arrival_prob");
        check_prob(b.momentum.arrival_prob, "momentum arrival_prob");
        check_prob(b.value.arrival_prob, "value arrival_prob");
        if (b.consumer.max_offset < 0) throw ConfigError("consumer max_offset must be >= 0");
        if (b.consumer.order_size <= 0 || b.momentum.order_size <= 0 || b.value.order_size <= 0)
            throw ConfigError("background order sizes must be positive");
        if (b.momentum.short_window < 1 || b.momentum.short_window >= b.momentum.long_window)
            throw ConfigError("momentum windows require 1 <= short < long");
        if (b.value.reversion_rate <= 0.0 || b.value.reversion_rate > 1.0)
            throw ConfigError("value reversion_rate must be in (0,1]");
        if (b.value.volatility < 0.0) throw ConfigError("value volatility must be >= 0");
    }
};

enum class FeatureGroup : std::uint8_t {
    QuotedPrice,
    QuotedVolume,
    Spread,
    Depth,
    Inventory,
    Cash,
    Momentum,
    TradedPrice,
    TradedVolume,
};

inline const char* feature_group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::QuotedPrice: return "quoted_price";
        case FeatureGroup::QuotedVolume: return "quoted_volume";
        case FeatureGroup::Spread: return "spread";
        case FeatureGroup::Depth: return "depth";
        case FeatureGroup::Inventory: return "inventory";
        case FeatureGroup::Cash: return "cash";
        case FeatureGroup::Momentum: return "momentum";
        case FeatureGroup::TradedPrice: return "traded_price";
        case FeatureGroup::TradedVolume: return "traded_volume";
    }
    return "?";
}

inline bool feature_group_delayed(FeatureGroup g) {
    return g == FeatureGroup::TradedPrice || g == FeatureGroup::TradedVolume;
}

inline constexpr std::array<FeatureGroup, 9> kAllFeatureGroups = {
    FeatureGroup::QuotedPrice, FeatureGroup::QuotedVolume, FeatureGroup::Spread,
    FeatureGroup::Depth,       FeatureGroup::Inventory,    FeatureGroup::Cash,
    FeatureGroup::Momentum,    FeatureGroup::TradedPrice,  FeatureGroup::TradedVolume,
};

// Fixed, documented observation layout. A function of (L, M, snapshot_levels,
// observe_both) only; identical for both players.
struct FeatureLayout {
    std::vector<std::string> names;
    std::vector<FeatureGroup> groups;
    int immediate_size = 0;
    int delayed_size = 0;

    int size() const { return immediate_size + delayed_size; }

    static FeatureLayout build(int quote_history, int trade_history, int snapshot_levels,
                               bool observe_both) {
        FeatureLayout lay;
        auto add = [&](const std::string& name, FeatureGroup g) {
            lay.names.push_back(name);
            lay.groups.push_back(g);
        };
        for (int lag = quote_history; lag >= 0; --lag) {
            for (const char* side : {"bid", "ask"}) {
                for (int lvl = 0; lvl < snapshot_levels; ++lvl) {
                    add("quoted_price[" + std::string(side) + lvl_str(lvl) + lag_str(lag) + "]",
                        FeatureGroup::QuotedPrice);
                    add("quoted_volume[" + std::string(side) + lvl_str(lvl) + lag_str(lag) + "]",
                        FeatureGroup::QuotedVolume);
                }
            }
        }
        add("spread", FeatureGroup::Spread);
        add("depth", FeatureGroup::Depth);
        add("inventory[self][t-1]", FeatureGroup::Inventory);
        add("inventory[self][t]", FeatureGroup::Inventory);
        add("cash[self][t-1]", FeatureGroup::Cash);
        add("cash[self][t]", FeatureGroup::Cash);
        if (observe_both) {
            add("inventory[other][t-1]", FeatureGroup::Inventory);
            add("inventory[other][t]", FeatureGroup::Inventory);
            add("cash[other][t-1]", FeatureGroup::Cash);
            add("cash[other][t]", FeatureGroup::Cash);
        }
        for (int k : {1, 10, 30}) add("momentum[" + std::to_string(k) + "]", FeatureGroup::Momentum);
        lay.immediate_size = static_cast<int>(lay.names.size());
        for (int lag = trade_history; lag >= 0; --lag) {
            add("traded_price[" + std::string(lag_str(lag).substr(1)) + "]", FeatureGroup::TradedPrice);
            add("traded_volume[" + std::string(lag_str(lag).substr(1)) + "]", FeatureGroup::TradedVolume);
        }
        lay.delayed_size = static_cast<int>(lay.names.size()) - lay.immediate_size;
        return lay;
    }

private:
    static std::string lvl_str(int lvl) { return "][l" + std::to_string(lvl); }
    static std::string lag_str(int lag) { return "][t-" + std::to_string(lag); }
};

// Per-step archive of the delayed state block s_D. read(t, delay) returns the
// block archived delay steps ago, or the sentinel (all zeros) when t-delay
// precedes the episode start.
class DelayBuffer {
public:
    explicit DelayBuffer(int block_size = 0) : block_size_(block_size) {}

    void clear(int block_size) {
        block_size_ = block_size;
        archive_.clear();
    }

    void push(std::vector<double> block) {
        if (static_cast<int>(block.size()) != block_size_)
            throw ContractViolation("DelayBuffer: block size mismatch");
        archive_.push_back(std::move(block));
    }

    struct ReadResult {
        const std::vector<double>* block; // null when sentinel
        bool sentinel;
    };

    ReadResult read(Step t, Step delay) const {
        if (t >= static_cast<Step>(archive_.size()))
            throw ContractViolation("DelayBuffer: read beyond archive");
        const Step src = t - delay;
        if (src < 0) return ReadResult{nullptr, true};
        return ReadResult{&archive_[static_cast<std::size_t>(src)], false};
    }

    const std::vector<double>& at(Step t) const { return archive_.at(static_cast<std::size_t>(t)); }
    std::size_t size() const { return archive_.size(); }
    int block_size() const { return block_size_; }

private:
    int block_size_;
    std::vector<std::vector<double>> archive_;
};

struct Observation {
    std::vector<double> values;
    bool delayed_sentinel = false;
};

struct MMAction {
    int halfspread_index = 0;
};

enum class PTSide : std::uint8_t { Buy, Sell, Hold };

struct PTAction {
    int halfspread_index = 0;
    PTSide side = PTSide::Hold;
};

struct PlayerFills {
    Volume bought = 0;
    Volume sold = 0;
};

struct StepInfo {
    HalfCents mid_x2 = 0;
    Cents spread = 0;
    std::array<PlayerFills, 2> fills{};
    int trade_count = 0;
};

struct StepResult {
    std::array<Observation, 2> obs;
    std::array<HalfCents, 2> reward_x2{}; // exact, in half-cents
    std::array<double, 2> reward{};       // cents
    bool done = false;
    StepInfo info;
};

struct AgentAccount {
    Cents cash = 0;
    Volume inventory = 0;
};

inline HalfCents portfolio_value_x2(Cents cash, Volume inventory, HalfCents mid_x2) {
    return 2 * cash + inventory * mid_x2;
}

// Mark-to-market reward over one step, in half-cents.
inline HalfCents compute_reward_x2(Cents cash_prev, Volume inv_prev, HalfCents mid_prev_x2,
                                   Cents cash_now, Volume inv_now, HalfCents mid_now_x2) {
    return portfolio_value_x2(cash_now, inv_now, mid_now_x2) -
           portfolio_value_x2(cash_prev, inv_prev, mid_prev_x2);
}

// MM quotes symmetrically at mid +/- h; rounding is half away from mid so a
// quote never crosses its own side of the touch.
inline std::pair<Cents, Cents> mm_quote_prices(HalfCents mid_x2, HalfCents halfspread_x2) {
    Cents buy = floor_half_to_cents(mid_x2 - halfspread_x2);
    Cents sell = ceil_half_to_cents(mid_x2 + halfspread_x2);
    if (buy < 1) buy = 1;
    if (sell <= buy) sell = buy + 1;
    return {buy, sell};
}

inline Cents pt_quote_price(HalfCents mid_x2, HalfCents halfspread_x2, PTSide side) {
    if (side == PTSide::Buy) return std::max<Cents>(1, floor_half_to_cents(mid_x2 - halfspread_x2));
    return std::max<Cents>(1, ceil_half_to_cents(mid_x2 + halfspread_x2));
}

// The two-player market game as a steppable environment. One instance is
// single-threaded; independent instances may run concurrently.
class MarketEnv {
public:
    static constexpr int kExchangeAgent = 0;
    static constexpr int kMMAgent = 1;
    static constexpr int kPTAgent = 2;
    static constexpr int kMM = 0; // player index
    static constexpr int kPT = 1;

    explicit MarketEnv(EnvConfig config)
        : cfg_(std::move(config)),
          layout_(FeatureLayout::build(cfg_.quote_history, cfg_.trade_history,
                                       cfg_.snapshot_levels, cfg_.observe_both_players)),
          rng_(0) {
        cfg_.validate();
    }

    const EnvConfig& config() const { return cfg_; }
    const FeatureLayout& layout() const { return layout_; }
    int mm_action_count() const { return static_cast<int>(cfg_.halfspreads_x2.size()); }
    Step t() const { return t_; }
    bool done() const { return done_; }

    std::array<Observation, 2> reset(std::uint64_t episode_seed) {
        rng_ = RandomStream(combine_seed(cfg_.seed, episode_seed));
        book_ = OrderBook();
        next_order_id_ = 1;
        mm_order_ids_ = {0, 0};
        pt_order_id_ = 0;
        fundamental_ = cfg_.background.value.fundamental_mean;
        accounts_.assign(static_cast<std::size_t>(3 + roster_size()), AgentAccount{});
        build_roster();
        records_.clear();
        mid_history_.clear();
        delay_buffer_.clear(layout_.delayed_size);
        t_ = 0;
        done_ = false;

        // symmetric resting liquidity around the initial mid, owned by the exchange
        const Cents bid0 = floor_half_to_cents(cfg_.initial_mid_x2 - 1);
        const Cents ask0 = ceil_half_to_cents(cfg_.initial_mid_x2 + 1);
        for (int i = 0; i < cfg_.snapshot_levels; ++i) {
            submit_stamped(kExchangeAgent, Side::Buy, bid0 - i, cfg_.order_size, 0);
            submit_stamped(kExchangeAgent, Side::Sell, ask0 + i, cfg_.order_size, 0);
        }
        archive_step(0, 0);
        return {build_observation(kMM, t_, cfg_.delay), build_observation(kPT, t_, cfg_.delay)};
    }

    StepResult step(const MMAction& mm_action, const PTAction& pt_action) {
        if (done_) throw ContractViolation("step: episode already finished");
        if (mm_action.halfspread_index < 0 || mm_action.halfspread_index >= mm_action_count() ||
            pt_action.halfspread_index < 0 || pt_action.halfspread_index >= mm_action_count())
            throw ContractViolation("step: halfspread index out of range");

        const Step t_next = t_ + 1;
        const std::size_t tape_start = book_.tape_size();
        const HalfCents mid_x2 = records_.back().mid_x2;
        StepResult result;

        // learning agents' quotes enter first as standing liquidity
        cancel_if_any(mm_order_ids_[0]);
        cancel_if_any(mm_order_ids_[1]);
        const HalfCents mm_h = cfg_.halfspreads_x2[static_cast<std::size_t>(mm_action.halfspread_index)];
        const auto [mm_buy, mm_sell] = mm_quote_prices(mid_x2, mm_h);
        mm_order_ids_[0] = submit_stamped(kMMAgent, Side::Buy, mm_buy, cfg_.order_size, t_next);
        mm_order_ids_[1] = submit_stamped(kMMAgent, Side::Sell, mm_sell, cfg_.order_size, t_next);

        cancel_if_any(pt_order_id_);
        if (pt_action.side != PTSide::Hold) {
            const HalfCents pt_h =
                cfg_.halfspreads_x2[static_cast<std::size_t>(pt_action.halfspread_index)];
            const Side side = pt_action.side == PTSide::Buy ? Side::Buy : Side::Sell;
            const Cents price = pt_quote_price(mid_x2, pt_h, pt_action.side);
            pt_order_id_ = submit_stamped(kPTAgent, side, price, cfg_.order_size, t_next);
        }

        // background flow in a seeded random permutation
        std::vector<int> order(roster_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        rng_.shuffle(order);
        for (int idx : order) background_act(roster_[static_cast<std::size_t>(idx)], t_next);

        fundamental_ = fundamental_step(fundamental_, cfg_.background.value, rng_);

        archive_step(t_next, tape_start);

        const StepRecord& prev = records_[static_cast<std::size_t>(t_)];
        const StepRecord& now = records_[static_cast<std::size_t>(t_next)];
        for (int p = 0; p < 2; ++p) {
            result.reward_x2[static_cast<std::size_t>(p)] = compute_reward_x2(
                prev.cash[static_cast<std::size_t>(p)], prev.inventory[static_cast<std::size_t>(p)],
                prev.mid_x2, now.cash[static_cast<std::size_t>(p)],
                now.inventory[static_cast<std::size_t>(p)], now.mid_x2);
            result.reward[static_cast<std::size_t>(p)] =
                static_cast<double>(result.reward_x2[static_cast<std::size_t>(p)]) / 2.0;
        }

        result.info.mid_x2 = now.mid_x2;
        result.info.spread = now.spread;
        result.info.trade_count = static_cast<int>(book_.tape_size() - tape_start);
        for (std::size_t i = tape_start; i < book_.tape_size(); ++i) {
            const Trade& tr = book_.tape()[i];
            const int buyer = book_.order_account(tr.buy_order_id).agent_id;
            const int seller = book_.order_account(tr.sell_order_id).agent_id;
            if (buyer == kMMAgent) result.info.fills[kMM].bought += tr.volume;
            if (seller == kMMAgent) result.info.fills[kMM].sold += tr.volume;
            if (buyer == kPTAgent) result.info.fills[kPT].bought += tr.volume;
            if (seller == kPTAgent) result.info.fills[kPT].sold += tr.volume;
        }

        t_ = t_next;
        done_ = (t_ == cfg_.horizon);
        result.done = done_;
        result.obs = {build_observation(kMM, t_, cfg_.delay), build_observation(kPT, t_, cfg_.delay)};
        return result;
    }

    // Observation per the delayed-observability rule: immediate block at t,
    // delayed block archived at t-delay (sentinel when that precedes step 0).
    Observation build_observation(int player, Step t, Step delay) const {
        if (t >= static_cast<Step>(records_.size()))
            throw ContractViolation("build_observation: state not archived through t");
        Observation obs;
        obs.values.reserve(static_cast<std::size_t>(layout_.size()));
        const auto& rec_at = [&](Step s) -> const StepRecord& {
            return records_[static_cast<std::size_t>(std::max<Step>(0, s))]; // padded below 0
        };
        const StepRecord& cur = records_[static_cast<std::size_t>(t)];
        for (int lag = cfg_.quote_history; lag >= 0; --lag) {
            const StepRecord& r = rec_at(t - lag);
            for (const auto* side : {&r.bid_levels, &r.ask_levels}) {
                for (const BookLevel& lvl : *side) {
                    obs.values.push_back(static_cast<double>(lvl.price));
                    obs.values.push_back(static_cast<double>(lvl.volume));
                }
            }
        }
        obs.values.push_back(static_cast<double>(cur.spread));
        obs.values.push_back(static_cast<double>(cur.depth_x2) / 2.0);
        const StepRecord& prev = rec_at(t - 1);
        const int self = player;
        const int other = 1 - player;
        obs.values.push_back(static_cast<double>(prev.inventory[static_cast<std::size_t>(self)]));
        obs.values.push_back(static_cast<double>(cur.inventory[static_cast<std::size_t>(self)]));
        obs.values.push_back(static_cast<double>(prev.cash[static_cast<std::size_t>(self)]));
        obs.values.push_back(static_cast<double>(cur.cash[static_cast<std::size_t>(self)]));
        if (cfg_.observe_both_players) {
            obs.values.push_back(static_cast<double>(prev.inventory[static_cast<std::size_t>(other)]));
            obs.values.push_back(static_cast<double>(cur.inventory[static_cast<std::size_t>(other)]));
            obs.values.push_back(static_cast<double>(prev.cash[static_cast<std::size_t>(other)]));
            obs.values.push_back(static_cast<double>(cur.cash[static_cast<std::size_t>(other)]));
        }
        for (int k : {1, 10, 30}) {
            if (t >= k) {
                const double mid_now = static_cast<double>(cur.mid_x2);
                const double mid_then = static_cast<double>(records_[static_cast<std::size_t>(t - k)].mid_x2);
                obs.values.push_back(mid_now / mid_then);
            } else {
                obs.values.push_back(1.0);
            }
        }
        const auto read = delay_buffer_.read(t, delay);
        obs.delayed_sentinel = read.sentinel;
        if (read.sentinel) {
            obs.values.insert(obs.values.end(), static_cast<std::size_t>(layout_.delayed_size), 0.0);
        } else {
            obs.values.insert(obs.values.end(), read.block->begin(), read.block->end());
        }
        return obs;
    }

    const DelayBuffer& delay_buffer() const { return delay_buffer_; }
    const OrderBook& book() const { return book_; }
    const AgentAccount& account(int agent_id) const {
        return accounts_.at(static_cast<std::size_t>(agent_id));
    }
    int agent_count() const { return static_cast<int>(accounts_.size()); }
    double fundamental() const { return fundamental_; }

    struct StepRecord {
        HalfCents mid_x2 = 0;
        Cents spread = 0;
        HalfCents depth_x2 = 0;
        bool stats_held = false; // a side emptied; mid/spread/depth carried over
        std::vector<BookLevel> bid_levels;
        std::vector<BookLevel> ask_levels;
        std::array<Cents, 2> cash{};
        std::array<Volume, 2> inventory{};
        double traded_vwap = 0.0;   // cents; 0 when no trades that step
        double traded_volume = 0.0; // shares
    };

    const StepRecord& record(Step t) const { return records_.at(static_cast<std::size_t>(t)); }

private:
    enum class TraderKind : std::uint8_t { Consumer, Momentum, Value };

    struct RosterEntry {
        TraderKind kind;
        int agent_id;
    };

    int roster_size() const {
        return cfg_.background.consumer_count + cfg_.background.momentum_count +
               cfg_.background.value_count;
    }

    void build_roster() {
        roster_.clear();
        int agent_id = 3;
        for (int i = 0; i < cfg_.background.consumer_count; ++i)
            roster_.push_back({TraderKind::Consumer, agent_id++});
        for (int i = 0; i < cfg_.background.momentum_count; ++i)
            roster_.push_back({TraderKind::Momentum, agent_id++});
        for (int i = 0; i < cfg_.background.value_count; ++i)
            roster_.push_back({TraderKind::Value, agent_id++});
    }

    void cancel_if_any(std::uint64_t& id) {
        if (id != 0) {
            book_.cancel_order(id);
            id = 0;
        }
    }

    std::uint64_t submit_stamped(int agent_id, Side side, Cents price, Volume volume, Step step) {
        Order order;
        order.order_id = next_order_id_++;
        order.agent_id = agent_id;
        order.side = side;
        order.price = price;
        order.volume = volume;
        order.submit_step = step;
        const SubmitResult res = book_.submit_limit_order(order);
        if (res.status != SubmitStatus::Accepted)
            throw ContractViolation("internal order rejected by book");
        settle(res.trades);
        return order.order_id;
    }

    void settle(const std::vector<Trade>& trades) {
        for (const Trade& t : trades) {
            const int buyer = book_.order_account(t.buy_order_id).agent_id;
            const int seller = book_.order_account(t.sell_order_id).agent_id;
            const Cents notional = t.price * t.volume;
            accounts_[static_cast<std::size_t>(buyer)].cash -= notional;
            accounts_[static_cast<std::size_t>(buyer)].inventory += t.volume;
            accounts_[static_cast<std::size_t>(seller)].cash += notional;
            accounts_[static_cast<std::size_t>(seller)].inventory -= t.volume;
        }
    }

    // Live view for a background arrival mid-step; falls back to the last
    // archived values when a side is empty.
    void live_quote_view(HalfCents& mid_x2, Cents& best_bid, Cents& best_ask) const {
        const BookStats s = book_.market_stats(1);
        mid_x2 = s.available ? s.mid_x2 : records_.back().mid_x2;
        best_bid = book_.bids_empty() ? 0 : s.best_bid;
        best_ask = book_.asks_empty() ? 0 : s.best_ask;
    }

    void background_act(const RosterEntry& entry, Step step) {
        HalfCents mid_x2;
        Cents best_bid, best_ask;
        live_quote_view(mid_x2, best_bid, best_ask);
        std::optional<OrderRequest> req;
        switch (entry.kind) {
            case TraderKind::Consumer:
                req = consumer_act(cfg_.background.consumer, mid_x2, rng_);
                break;
            case TraderKind::Momentum:
                req = momentum_act(cfg_.background.momentum, mid_history_, best_bid, best_ask, rng_);
                break;
            case TraderKind::Value:
                req = value_act(cfg_.background.value, fundamental_, mid_x2, best_bid, best_ask, rng_);
                break;
        }
        if (req) submit_stamped(entry.agent_id, req->side, req->price, req->volume, step);
    }

    void archive_step(Step t, std::size_t tape_start) {
        const bool was_available = !book_.bids_empty() && !book_.asks_empty();

        // reseed emptied sides first so the record's book contents, trades
        // and accounts are settled before they are archived; the reseed is
        // clamped inside the surviving touch so it always rests
        if (!was_available) {
            const HalfCents mid = records_.empty() ? cfg_.initial_mid_x2 : records_.back().mid_x2;
            if (book_.bids_empty()) {
                Cents p = floor_half_to_cents(mid) - 5;
                if (!book_.asks_empty())
                    p = std::min(p, book_.market_stats(1).ask_levels[0].price - 1);
                if (p >= 1) submit_stamped(kExchangeAgent, Side::Buy, p, cfg_.order_size, t);
            }
            if (book_.asks_empty()) {
                Cents p = ceil_half_to_cents(mid) + 5;
                if (!book_.bids_empty())
                    p = std::max(p, book_.market_stats(1).bid_levels[0].price + 1);
                submit_stamped(kExchangeAgent, Side::Sell, p, cfg_.order_size, t);
            }
        }

        BookStats stats = book_.market_stats(cfg_.snapshot_levels);
        StepRecord rec;
        if (was_available) {
            rec.mid_x2 = stats.mid_x2;
            rec.spread = stats.spread;
            rec.depth_x2 = stats.depth_x2;
        } else {
            // mid/spread/depth hold their last defined values over the gap
            rec.stats_held = true;
            rec.mid_x2 = records_.empty() ? cfg_.initial_mid_x2 : records_.back().mid_x2;
            rec.spread = records_.empty() ? 0 : records_.back().spread;
            rec.depth_x2 = records_.empty() ? 0 : records_.back().depth_x2;
        }
        rec.bid_levels = std::move(stats.bid_levels);
        rec.ask_levels = std::move(stats.ask_levels);
        rec.cash = {accounts_[kMMAgent].cash, accounts_[kPTAgent].cash};
        rec.inventory = {accounts_[kMMAgent].inventory, accounts_[kPTAgent].inventory};

        Volume traded = 0;
        Cents notional = 0;
        for (std::size_t i = tape_start; i < book_.tape_size(); ++i) {
            const Trade& tr = book_.tape()[i];
            traded += tr.volume;
            notional += tr.price * tr.volume;
        }
        rec.traded_volume = static_cast<double>(traded);
        rec.traded_vwap =
            traded > 0 ? static_cast<double>(notional) / static_cast<double>(traded) : 0.0;

        records_.push_back(std::move(rec));
        mid_history_.push_back(static_cast<double>(records_.back().mid_x2) / 2.0);
        delay_buffer_.push(delayed_block(t));
    }

    // s_D(t): traded price and volume per step over the window t-M..t,
    // oldest first; pre-episode steps contribute zeros.
    std::vector<double> delayed_block(Step t) const {
        std::vector<double> block;
        block.reserve(static_cast<std::size_t>(layout_.delayed_size));
        for (int lag = cfg_.trade_history; lag >= 0; --lag) {
            const Step s = t - lag;
            if (s < 0) {
                block.push_back(0.0);
                block.push_back(0.0);
            } else {
                const StepRecord& r = records_[static_cast<std::size_t>(s)];
                block.push_back(r.traded_vwap);
                block.push_back(r.traded_volume);
            }
        }
        return block;
    }

    EnvConfig cfg_;
    FeatureLayout layout_;
    RandomStream rng_;
    OrderBook book_;
    std::vector<AgentAccount> accounts_;
    std::vector<RosterEntry> roster_;
    std::vector<StepRecord> records_;
    std::vector<double> mid_history_;
    DelayBuffer delay_buffer_{0};
    double fundamental_ = 0.0;
    std::uint64_t next_order_id_ = 1;
    std::array<std::uint64_t, 2> mm_order_ids_{0, 0};
    std::uint64_t pt_order_id_ = 0;
    Step t_ = 0;
    bool done_ = true;
};

} // namespace delaymarket
