#pragma once

#include "delaymarket/common.hpp"
#include "delaymarket/learner.hpp"
#include "delaymarket/market_env.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace delaymarket {

// Flat `key = value` configuration text: one assignment per line, `#` starts
// a comment, lists are comma separated. Unknown keys are reported as errors
// so typos cannot silently fall back to defaults.
class FlatConfig {
public:
    static FlatConfig parse_string(const std::string& text) {
        FlatConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const std::size_t eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            if (cfg.values_.count(key))
                throw ConfigError("config: duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static FlatConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_string(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_double(key, it->second);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_int(key, it->second);
    }

    bool get_bool(const std::string& key, bool fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config key '" + key + "': expected true/false");
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const std::string& item : split(it->second)) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key, std::vector<std::int64_t> fallback) {
        consumed_.insert(key);
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::int64_t> out;
        for (const std::string& item : split(it->second)) out.push_back(to_int(key, item));
        return out;
    }

    void ensure_all_consumed() const {
        for (const auto& [key, value] : values_) {
            if (!consumed_.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, ',')) {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
        }
        return out;
    }

    static double to_double(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad number '" + s + "'");
        }
    }

    static std::int64_t to_int(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
        }
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

struct ExperimentConfig {
    std::vector<Step> delays = {0, 60, 120, 180, 240, 300, 390};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int train_iterations = 40;
    int eval_episodes = 500;
    double kappa = 6.0;
    double epsilon_fraction = 0.01;
    bool welfare_per_episode = true;
    bool dump_trade_tape = false;
    EnvConfig env;
    LearnerConfig mm;
    LearnerConfig pt;

    void validate() const {
        if (seeds.empty()) throw ConfigError("seeds must be non-empty");
        if (delays.empty()) throw ConfigError("delays must be non-empty");
        for (Step d : delays)
            if (d < 0 || d > env.horizon)
                throw ConfigError("every delay must lie in [0, horizon]");
        if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
        if (train_iterations < 0) throw ConfigError("train_iterations must be >= 0");
        if (kappa == 0.0 || kappa == 1.0) throw ConfigError("kappa must avoid {0,1}");
        if (epsilon_fraction <= 0.0) throw ConfigError("epsilon_fraction must be positive");
        env.validate();
        mm.validate();
        pt.validate();
        if (mm.episodes_per_iteration != pt.episodes_per_iteration ||
            mm.total_iterations != pt.total_iterations)
            throw ConfigError("mm and pt must share the episode/iteration schedule");
    }

    static ExperimentConfig from_flat(FlatConfig& flat) {
        ExperimentConfig cfg;
        cfg.delays.clear();
        for (std::int64_t d : flat.get_int_list("delays", {0, 60, 120, 180, 240, 300, 390}))
            cfg.delays.push_back(static_cast<Step>(d));
        cfg.seeds.clear();
        for (std::int64_t s : flat.get_int_list("seeds", {1, 2, 3}))
            cfg.seeds.push_back(static_cast<std::uint64_t>(s));
        cfg.train_iterations = static_cast<int>(flat.get_int("train_iterations", 40));
        cfg.eval_episodes = static_cast<int>(flat.get_int("eval_episodes", 500));
        cfg.kappa = flat.get_double("kappa", 6.0);
        cfg.epsilon_fraction = flat.get_double("epsilon_fraction", 0.01);
        cfg.welfare_per_episode = flat.get_bool("welfare_per_episode", true);
        cfg.dump_trade_tape = flat.get_bool("dump_trade_tape", false);

        EnvConfig& env = cfg.env;
        env.horizon = static_cast<Step>(flat.get_int("env.horizon", 390));
        env.quote_history = static_cast<int>(flat.get_int("env.quote_history", 5));
        env.trade_history = static_cast<int>(flat.get_int("env.trade_history", 5));
        env.snapshot_levels = static_cast<int>(flat.get_int("env.snapshot_levels", 5));
        env.order_size = flat.get_int("env.order_size", 100);
        env.halfspreads_x2 = to_halfcents(
            flat.get_double_list("env.halfspreads", {0.5, 1.5, 2.5, 3.5, 4.5}), "env.halfspreads");
        env.gamma = flat.get_double("env.gamma", 0.9999);
        env.initial_mid_x2 =
            to_halfcents({flat.get_double("env.initial_mid", 10000.5)}, "env.initial_mid")[0];
        env.observe_both_players = flat.get_bool("env.observe_both_players", false);

        BackgroundRosterConfig& bg = env.background;
        bg.consumer_count = static_cast<int>(flat.get_int("background.consumers", 20));
        bg.consumer.arrival_prob = flat.get_double("background.consumer_arrival", 0.3);
        bg.consumer.max_offset = flat.get_int("background.consumer_max_offset", 5);
        bg.consumer.order_size = flat.get_int("background.consumer_order_size", 100);
        bg.momentum_count = static_cast<int>(flat.get_int("background.momentum_traders", 2));
        bg.momentum.arrival_prob = flat.get_double("background.momentum_arrival", 0.75);
        bg.momentum.short_window = static_cast<int>(flat.get_int("background.momentum_short_window", 5));
        bg.momentum.long_window = static_cast<int>(flat.get_int("background.momentum_long_window", 20));
        bg.momentum.order_size = flat.get_int("background.momentum_order_size", 100);
        bg.value_count = static_cast<int>(flat.get_int("background.value_traders", 2));
        bg.value.arrival_prob = flat.get_double("background.value_arrival", 0.75);
        bg.value.fundamental_mean = flat.get_double("background.value_mean", 10000.5);
        bg.value.reversion_rate = flat.get_double("background.value_reversion", 0.05);
        bg.value.volatility = flat.get_double("background.value_volatility", 2.0);
        bg.value.order_size = flat.get_int("background.value_order_size", 100);

        read_learner(flat, "mm.", cfg.mm);
        read_learner(flat, "pt.", cfg.pt);
        cfg.mm.total_iterations = cfg.train_iterations;
        cfg.pt.total_iterations = cfg.train_iterations;

        flat.ensure_all_consumed();
        cfg.validate();
        return cfg;
    }

    static ExperimentConfig from_file(const std::string& path) {
        FlatConfig flat = FlatConfig::parse_file(path);
        return from_flat(flat);
    }

    // fully-resolved key/value echo, written next to results so every run
    // reports the defaults it actually used
    std::string resolved_text() const {
        std::ostringstream out;
        auto list_int = [](const auto& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (i ? "," : "") + std::to_string(v[i]);
            return s;
        };
        out << "delays = " << list_int(delays) << "\n";
        out << "seeds = " << list_int(seeds) << "\n";
        out << "train_iterations = " << train_iterations << "\n";
        out << "eval_episodes = " << eval_episodes << "\n";
        out << "kappa = " << fmt_double(kappa) << "\n";
        out << "epsilon_fraction = " << fmt_double(epsilon_fraction) << "\n";
        out << "welfare_per_episode = " << (welfare_per_episode ? "true" : "false") << "\n";
        out << "dump_trade_tape = " << (dump_trade_tape ? "true" : "false") << "\n";
        out << "env.horizon = " << env.horizon << "\n";
        out << "env.quote_history = " << env.quote_history << "\n";
        out << "env.trade_history = " << env.trade_history << "\n";
        out << "env.snapshot_levels = " << env.snapshot_levels << "\n";
        out << "env.order_size = " << env.order_size << "\n";
        std::string hs;
        for (std::size_t i = 0; i < env.halfspreads_x2.size(); ++i)
            hs += (i ? "," : "") + fmt_double(static_cast<double>(env.halfspreads_x2[i]) / 2.0);
        out << "env.halfspreads = " << hs << "\n";
        out << "env.gamma = " << fmt_double(env.gamma) << "\n";
        out << "env.initial_mid = " << fmt_double(static_cast<double>(env.initial_mid_x2) / 2.0) << "\n";
        out << "env.observe_both_players = " << (env.observe_both_players ? "true" : "false") << "\n";
        const BackgroundRosterConfig& bg = env.background;
        out << "background.consumers = " << bg.consumer_count << "\n";
        out << "background.consumer_arrival = " << fmt_double(bg.consumer.arrival_prob) << "\n";
        out << "background.consumer_max_offset = " << bg.consumer.max_offset << "\n";
        out << "background.consumer_order_size = " << bg.consumer.order_size << "\n";
        out << "background.momentum_traders = " << bg.momentum_count << "\n";
        out << "background.momentum_arrival = " << fmt_double(bg.momentum.arrival_prob) << "\n";
        out << "background.momentum_short_window = " << bg.momentum.short_window << "\n";
        out << "background.momentum_long_window = " << bg.momentum.long_window << "\n";
        out << "background.momentum_order_size = " << bg.momentum.order_size << "\n";
        out << "background.value_traders = " << bg.value_count << "\n";
        out << "background.value_arrival = " << fmt_double(bg.value.arrival_prob) << "\n";
        out << "background.value_mean = " << fmt_double(bg.value.fundamental_mean) << "\n";
        out << "background.value_reversion = " << fmt_double(bg.value.reversion_rate) << "\n";
        out << "background.value_volatility = " << fmt_double(bg.value.volatility) << "\n";
        out << "background.value_order_size = " << bg.value.order_size << "\n";
        for (int p = 0; p < 2; ++p) {
            const LearnerConfig& lc = p == 0 ? mm : pt;
            const std::string pre = p == 0 ? "mm." : "pt.";
            out << pre << "learning_rate = " << fmt_double(lc.learning_rate) << "\n";
            out << pre << "clip = " << fmt_double(lc.clip) << "\n";
            out << pre << "epochs = " << lc.epochs << "\n";
            out << pre << "minibatch = " << lc.minibatch << "\n";
            out << pre << "gae_lambda = " << fmt_double(lc.gae_lambda) << "\n";
            out << pre << "gamma = " << fmt_double(lc.gamma) << "\n";
            out << pre << "entropy_coef = " << fmt_double(lc.entropy_coef) << "\n";
            out << pre << "value_coef = " << fmt_double(lc.value_coef) << "\n";
            out << pre << "episodes_per_iteration = " << lc.episodes_per_iteration << "\n";
            std::string hidden;
            for (std::size_t i = 0; i < lc.hidden.size(); ++i)
                hidden += (i ? "," : "") + std::to_string(lc.hidden[i]);
            out << pre << "hidden = " << hidden << "\n";
        }
        return out.str();
    }

private:
    static std::vector<HalfCents> to_halfcents(const std::vector<double>& cents,
                                               const std::string& key) {
        std::vector<HalfCents> out;
        for (double c : cents) {
            const double doubled = 2.0 * c;
            const double rounded = std::round(doubled);
            if (std::fabs(doubled - rounded) > 1e-9)
                throw ConfigError("config key '" + key + "': values must be multiples of 0.5 cents");
            out.push_back(static_cast<HalfCents>(rounded));
        }
        return out;
    }

    static void read_learner(FlatConfig& flat, const std::string& pre, LearnerConfig& lc) {
        lc.learning_rate = flat.get_double(pre + "learning_rate", lc.learning_rate);
        lc.clip = flat.get_double(pre + "clip", lc.clip);
        lc.epochs = static_cast<int>(flat.get_int(pre + "epochs", lc.epochs));
        lc.minibatch = static_cast<int>(flat.get_int(pre + "minibatch", lc.minibatch));
        lc.gae_lambda = flat.get_double(pre + "gae_lambda", lc.gae_lambda);
        lc.gamma = flat.get_double(pre + "gamma", lc.gamma);
        lc.entropy_coef = flat.get_double(pre + "entropy_coef", lc.entropy_coef);
        lc.value_coef = flat.get_double(pre + "value_coef", lc.value_coef);
        lc.episodes_per_iteration =
            static_cast<int>(flat.get_int(pre + "episodes_per_iteration", lc.episodes_per_iteration));
        std::vector<std::int64_t> hidden_default(lc.hidden.begin(), lc.hidden.end());
        lc.hidden.clear();
        for (std::int64_t h : flat.get_int_list(pre + "hidden", hidden_default))
            lc.hidden.push_back(static_cast<int>(h));
    }
};

} // namespace delaymarket
