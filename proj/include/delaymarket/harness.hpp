#pragma once

#include "delaymarket/config.hpp"
#include "delaymarket/importance.hpp"
#include "delaymarket/learner.hpp"
#include "delaymarket/svg.hpp"
#include "delaymarket/welfare.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace delaymarket {

struct RunStatus {
    int total_cells = 0;
    int failed_cells = 0;
    std::vector<std::string> warnings;

    bool ok() const { return failed_cells == 0 && warnings.empty(); }

    void merge(const RunStatus& other) {
        total_cells += other.total_cells;
        failed_cells += other.failed_cells;
        warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    }
};

struct SweepCell {
    Step delay;
    std::uint64_t seed;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg, std::uint64_t seed_offset) {
    std::vector<SweepCell> cells;
    for (Step d : cfg.delays)
        for (std::uint64_t s : cfg.seeds) cells.push_back({d, s + seed_offset});
    return cells;
}

inline std::string checkpoint_path(const std::string& out_dir, Step delay, std::uint64_t seed,
                                   const std::string& player) {
    return out_dir + "/checkpoints/delta" + std::to_string(delay) + "_seed" + std::to_string(seed) +
           "_" + player + ".ckpt";
}

inline void parallel_cells(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

// ---- deterministic CSV output ----

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write csv: " + path);
        out_ << header << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::runtime_error("csv column not found: " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read csv: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cur;
        std::istringstream ss(line);
        while (std::getline(ss, cur, ',')) cells.push_back(cur);
        if (line.back() == ',') cells.push_back("");
        if (first) {
            table.header = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    return table;
}

inline double sample_mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double ci95_halfwidth(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("ci of empty sample");
    if (v.size() == 1) return 0.0;
    const double m = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
}

// Per-cell welfare. Outcomes arrive in cents and the indices run on dollars;
// sanitization happens here, explicitly, with the shift reported.
inline WelfareReport cell_welfare(const std::vector<double>& mm_outcomes_cents,
                                  const std::vector<double>& pt_outcomes_cents, double kappa,
                                  double eps_fraction, bool per_episode) {
    const std::size_t n = mm_outcomes_cents.size();
    if (n == 0 || pt_outcomes_cents.size() != n)
        throw std::invalid_argument("cell_welfare: bad outcome vectors");
    auto one = [&](double mm_cents, double pt_cents) {
        const std::vector<double> dollars = {mm_cents / 100.0, pt_cents / 100.0};
        const SanitizedOutcomes s = sanitize_outcomes(dollars, eps_fraction, 0.01);
        return swf(s.values, kappa, s.applied_shift);
    };
    if (!per_episode)
        return one(sample_mean(mm_outcomes_cents), sample_mean(pt_outcomes_cents));
    WelfareReport acc;
    acc.equality_ge = acc.equality_theil = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        const WelfareReport r = one(mm_outcomes_cents[e], pt_outcomes_cents[e]);
        acc.mean += r.mean;
        acc.ge += r.ge;
        acc.theil += r.theil;
        acc.equality_ge += r.equality_ge;
        acc.equality_theil += r.equality_theil;
        acc.swf_ge += r.swf_ge;
        acc.swf_theil += r.swf_theil;
        acc.applied_shift += r.applied_shift;
    }
    const double inv = 1.0 / static_cast<double>(n);
    acc.mean *= inv;
    acc.ge *= inv;
    acc.theil *= inv;
    acc.equality_ge *= inv;
    acc.equality_theil *= inv;
    acc.swf_ge *= inv;
    acc.swf_theil *= inv;
    acc.applied_shift *= inv;
    return acc;
}

inline const char* player_name(int p) { return p == 0 ? "mm" : "pt"; }

// ---- train ----

inline RunStatus run_train(const ExperimentConfig& cfg, const std::string& out_dir, int workers,
                           std::uint64_t seed_offset) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/checkpoints");
    {
        std::ofstream echo(out_dir + "/config_used.txt");
        echo << cfg.resolved_text();
        echo << "seed_offset = " << seed_offset << "\n";
    }

    const std::vector<SweepCell> cells = sweep_cells(cfg, seed_offset);
    struct CellOut {
        bool ok = false;
        std::string error;
        std::vector<CurveRow> curves;
    };
    std::vector<CellOut> results(cells.size());

    parallel_cells(static_cast<int>(cells.size()), workers, [&](int idx) {
        const SweepCell cell = cells[static_cast<std::size_t>(idx)];
        CellOut& out = results[static_cast<std::size_t>(idx)];
        try {
            EnvConfig ec = cfg.env;
            ec.delay = cell.delay;
            ec.seed = cell.seed;
            const auto factory = [ec] { return MarketEnv(ec); };
            TrainResult tr = train(factory, cfg.mm, cfg.pt, cell.seed);
            save_checkpoint(checkpoint_path(out_dir, cell.delay, cell.seed, "mm"), tr.players[0]);
            save_checkpoint(checkpoint_path(out_dir, cell.delay, cell.seed, "pt"), tr.players[1]);
            out.curves = std::move(tr.curves);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    RunStatus status;
    status.total_cells = static_cast<int>(cells.size());
    CsvWriter curves(out_dir + "/training_curves.csv",
                     "delay,seed,iteration,player,mean_discounted_return,entropy,policy_loss,value_loss");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const SweepCell cell = cells[i];
        if (!results[i].ok) {
            ++status.failed_cells;
            status.warnings.push_back("train delta=" + std::to_string(cell.delay) + " seed=" +
                                      std::to_string(cell.seed) + ": " + results[i].error);
            continue;
        }
        for (const CurveRow& row : results[i].curves) {
            curves.row({std::to_string(cell.delay), std::to_string(cell.seed),
                        std::to_string(row.iteration), player_name(row.player),
                        fmt_double(row.mean_discounted_return), fmt_double(row.entropy),
                        fmt_double(row.policy_loss), fmt_double(row.value_loss)});
        }
    }
    return status;
}

// ---- eval ----

namespace harness_detail {

struct EpisodeLogRow {
    Step step;
    HalfCents mid_x2;
    Cents spread;
    int mm_halfspread_index;
    int pt_halfspread_index;
    PTSide pt_side;
    std::array<PlayerFills, 2> fills;
    std::array<double, 2> reward;
};

// greedy re-run of one evaluation episode for the optional diagnostics dumps
inline void dump_episode_diagnostics(const ExperimentConfig& cfg, const SweepCell& cell,
                                     const std::array<PolicyBundle, 2>& players,
                                     const std::string& out_dir) {
    EnvConfig ec = cfg.env;
    ec.delay = cell.delay;
    ec.seed = cell.seed;
    MarketEnv env(ec);
    std::array<Observation, 2> obs = env.reset(eval_episode_seed(cell.seed, 0));
    std::vector<EpisodeLogRow> log;
    while (!env.done()) {
        const GreedyActions act = greedy_actions(players, obs);
        const StepResult sr = env.step(act.mm, act.pt);
        log.push_back({env.t(), sr.info.mid_x2, sr.info.spread, act.mm.halfspread_index,
                       act.pt.halfspread_index, act.pt.side, sr.info.fills, sr.reward});
        obs = sr.obs;
    }
    const std::string suffix =
        "delta" + std::to_string(cell.delay) + "_seed" + std::to_string(cell.seed) + ".csv";
    CsvWriter tape(out_dir + "/tape_" + suffix, "step,price,volume,buy_agent,sell_agent");
    for (const Trade& t : env.book().tape()) {
        tape.row({std::to_string(t.step), std::to_string(t.price), std::to_string(t.volume),
                  std::to_string(env.book().order_account(t.buy_order_id).agent_id),
                  std::to_string(env.book().order_account(t.sell_order_id).agent_id)});
    }
    CsvWriter steps(out_dir + "/steplog_" + suffix,
                    "step,mid,spread,mm_halfspread,pt_halfspread,pt_side,mm_bought,mm_sold,"
                    "pt_bought,pt_sold,mm_reward,pt_reward");
    const auto& spreads = ec.halfspreads_x2;
    for (const EpisodeLogRow& r : log) {
        const char* side = r.pt_side == PTSide::Buy ? "buy" : (r.pt_side == PTSide::Sell ? "sell" : "hold");
        steps.row({std::to_string(r.step), fmt_double(static_cast<double>(r.mid_x2) / 2.0),
                   std::to_string(r.spread),
                   fmt_double(static_cast<double>(spreads[static_cast<std::size_t>(r.mm_halfspread_index)]) / 2.0),
                   fmt_double(static_cast<double>(spreads[static_cast<std::size_t>(r.pt_halfspread_index)]) / 2.0),
                   side, std::to_string(r.fills[0].bought), std::to_string(r.fills[0].sold),
                   std::to_string(r.fills[1].bought), std::to_string(r.fills[1].sold),
                   fmt_double(r.reward[0]), fmt_double(r.reward[1])});
    }
}

} // namespace harness_detail

inline RunStatus run_eval(const ExperimentConfig& cfg, const std::string& out_dir, int workers,
                          std::uint64_t seed_offset) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const std::vector<SweepCell> cells = sweep_cells(cfg, seed_offset);
    struct CellOut {
        bool ok = false;
        std::string error;
        EvalResult eval;
        WelfareReport welfare;
        std::array<std::vector<ImportanceScore>, 3> importance; // mm.halfspread, pt.halfspread, pt.side
    };
    std::vector<CellOut> results(cells.size());

    parallel_cells(static_cast<int>(cells.size()), workers, [&](int idx) {
        const SweepCell cell = cells[static_cast<std::size_t>(idx)];
        CellOut& out = results[static_cast<std::size_t>(idx)];
        try {
            std::array<PolicyBundle, 2> players = {
                load_checkpoint(checkpoint_path(out_dir, cell.delay, cell.seed, "mm")),
                load_checkpoint(checkpoint_path(out_dir, cell.delay, cell.seed, "pt"))};
            EnvConfig ec = cfg.env;
            ec.delay = cell.delay;
            ec.seed = cell.seed;
            const auto factory = [ec] { return MarketEnv(ec); };
            out.eval = evaluate(players, factory, cfg.eval_episodes, cell.seed);
            out.welfare = cell_welfare(out.eval.outcomes_cents[0], out.eval.outcomes_cents[1],
                                       cfg.kappa, cfg.epsilon_fraction, cfg.welfare_per_episode);
            const FeatureLayout layout = FeatureLayout::build(
                ec.quote_history, ec.trade_history, ec.snapshot_levels, ec.observe_both_players);
            int slot = 0;
            for (const auto& [player, head] : {std::pair<int, int>{0, 0}, {1, 0}, {1, 1}}) {
                RandomStream rng(combine_seed(cell.seed, 0x1337u + static_cast<std::uint64_t>(slot)));
                out.importance[static_cast<std::size_t>(slot)] = permutation_importance(
                    players[static_cast<std::size_t>(player)].net,
                    out.eval.obs_dataset[static_cast<std::size_t>(player)], head, layout, rng);
                ++slot;
            }
            if (cfg.dump_trade_tape)
                harness_detail::dump_episode_diagnostics(cfg, cell, players, out_dir);
            out.ok = true;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    });

    RunStatus status;
    status.total_cells = static_cast<int>(cells.size());
    CsvWriter episodes(out_dir + "/episodes.csv", "delay,seed,episode,player,outcome");
    CsvWriter outcomes(out_dir + "/outcomes.csv", "delay,seed,player,mean_outcome,ci95_halfwidth");
    CsvWriter strategies(out_dir + "/strategies.csv", "delay,seed,player,mean_halfspread,pct_hold");
    CsvWriter welfare_csv(out_dir + "/welfare.csv",
                          "delay,seed,mean,ge_index,theil_l,swf_ge,swf_theil,applied_shift");
    CsvWriter importance_csv(out_dir + "/importance.csv",
                             "delay,seed,player,head,feature_group,score,delayed,rank");
    const char* head_names[3] = {"halfspread", "halfspread", "side"};
    const int head_players[3] = {0, 1, 1};

    for (std::size_t i = 0; i < cells.size(); ++i) {
        const SweepCell cell = cells[i];
        const std::string d = std::to_string(cell.delay);
        const std::string s = std::to_string(cell.seed);
        if (!results[i].ok) {
            ++status.failed_cells;
            status.warnings.push_back("eval delta=" + d + " seed=" + s + ": " + results[i].error);
            continue;
        }
        const CellOut& out = results[i];
        for (int p = 0; p < 2; ++p) {
            // %.17g here: the aggregate rows must be exactly reconstructible
            // from the per-episode dump
            const auto& ys = out.eval.outcomes_cents[static_cast<std::size_t>(p)];
            for (std::size_t e = 0; e < ys.size(); ++e)
                episodes.row({d, s, std::to_string(e), player_name(p), fmt_double17(ys[e])});
            outcomes.row({d, s, player_name(p), fmt_double17(sample_mean(ys)),
                          fmt_double17(ci95_halfwidth(ys))});
            strategies.row({d, s, player_name(p),
                            fmt_double(out.eval.mean_halfspread_cents[static_cast<std::size_t>(p)]),
                            p == 1 ? fmt_double(out.eval.pt_pct_hold) : std::string()});
        }
        welfare_csv.row({d, s, fmt_double(out.welfare.mean), fmt_double(out.welfare.ge),
                         fmt_double(out.welfare.theil), fmt_double(out.welfare.swf_ge),
                         fmt_double(out.welfare.swf_theil), fmt_double(out.welfare.applied_shift)});
        for (int slot = 0; slot < 3; ++slot) {
            const auto& scores = out.importance[static_cast<std::size_t>(slot)];
            for (std::size_t r = 0; r < scores.size(); ++r) {
                importance_csv.row({d, s, player_name(head_players[slot]), head_names[slot],
                                    feature_group_name(scores[r].group), fmt_double(scores[r].score),
                                    scores[r].delayed ? "1" : "0", std::to_string(r + 1)});
            }
        }
    }
    return status;
}

// ---- report ----

inline RunStatus run_report(const std::string& out_dir) {
    namespace fs = std::filesystem;
    RunStatus status;
    const std::string report_dir = out_dir + "/report";
    fs::create_directories(report_dir);

    auto try_read = [&](const std::string& name, CsvTable& table) {
        try {
            table = read_csv(out_dir + "/" + name);
            return true;
        } catch (const std::exception& e) {
            status.warnings.push_back(std::string("report: ") + e.what());
            return false;
        }
    };

    // mean across seeds for every (delay, player) cell
    struct Series {
        std::map<Step, std::vector<double>> by_delay;
        std::vector<std::pair<double, double>> points() const {
            std::vector<std::pair<double, double>> pts;
            for (const auto& [d, v] : by_delay) pts.emplace_back(static_cast<double>(d), sample_mean(v));
            return pts;
        }
        std::vector<double> band() const {
            std::vector<double> b;
            for (const auto& [d, v] : by_delay) b.push_back(ci95_halfwidth(v));
            return b;
        }
    };

    CsvTable outcomes;
    if (try_read("outcomes.csv", outcomes)) {
        Series mean_out[2], ci_out[2];
        const int c_delay = outcomes.column("delay"), c_player = outcomes.column("player");
        const int c_mean = outcomes.column("mean_outcome"), c_ci = outcomes.column("ci95_halfwidth");
        for (const auto& row : outcomes.rows) {
            const int p = row[static_cast<std::size_t>(c_player)] == "mm" ? 0 : 1;
            const Step d = static_cast<Step>(std::stol(row[static_cast<std::size_t>(c_delay)]));
            mean_out[p].by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_mean)]));
            ci_out[p].by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_ci)]));
        }
        CsvWriter summary(report_dir + "/summary_outcomes.csv",
                          "delay,player,mean_outcome,ci95_halfwidth");
        std::vector<SvgSeries> series;
        const char* colors[2] = {"#1f77b4", "#d62728"};
        for (int p = 0; p < 2; ++p) {
            SvgSeries sv;
            sv.name = player_name(p);
            sv.color = colors[p];
            for (const auto& [d, v] : mean_out[p].by_delay) {
                const double ci = sample_mean(ci_out[p].by_delay[d]);
                summary.row({std::to_string(d), player_name(p), fmt_double(sample_mean(v)),
                             fmt_double(ci)});
                sv.points.emplace_back(static_cast<double>(d), sample_mean(v));
                sv.band_halfwidth.push_back(ci);
            }
            if (!sv.points.empty()) series.push_back(std::move(sv));
        }
        if (!series.empty())
            write_line_chart(report_dir + "/outcomes_vs_delay.svg",
                             "Player outcomes vs observation delay", "delay (steps)",
                             "episode profit (cents)", series);
    }

    CsvTable strategies;
    if (try_read("strategies.csv", strategies)) {
        Series spread_s[2], hold_s;
        const int c_delay = strategies.column("delay"), c_player = strategies.column("player");
        const int c_spread = strategies.column("mean_halfspread"), c_hold = strategies.column("pct_hold");
        for (const auto& row : strategies.rows) {
            const int p = row[static_cast<std::size_t>(c_player)] == "mm" ? 0 : 1;
            const Step d = static_cast<Step>(std::stol(row[static_cast<std::size_t>(c_delay)]));
            spread_s[p].by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_spread)]));
            if (p == 1 && !row[static_cast<std::size_t>(c_hold)].empty())
                hold_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_hold)]));
        }
        CsvWriter summary(report_dir + "/summary_strategies.csv",
                          "delay,player,mean_halfspread,pct_hold");
        for (int p = 0; p < 2; ++p) {
            for (const auto& [d, v] : spread_s[p].by_delay) {
                std::string hold;
                if (p == 1) hold = fmt_double(sample_mean(hold_s.by_delay[d]));
                summary.row({std::to_string(d), player_name(p), fmt_double(sample_mean(v)), hold});
            }
        }
        std::vector<SvgSeries> spread_series;
        const char* colors[2] = {"#1f77b4", "#d62728"};
        for (int p = 0; p < 2; ++p) {
            SvgSeries sv;
            sv.name = player_name(p);
            sv.color = colors[p];
            sv.points = spread_s[p].points();
            if (!sv.points.empty()) spread_series.push_back(std::move(sv));
        }
        if (!spread_series.empty())
            write_line_chart(report_dir + "/halfspread_vs_delay.svg",
                             "Mean half-spread vs observation delay", "delay (steps)",
                             "half-spread (cents)", spread_series);
        if (!hold_s.by_delay.empty()) {
            SvgSeries sv;
            sv.name = "pt holds";
            sv.color = "#2ca02c";
            sv.points = hold_s.points();
            write_line_chart(report_dir + "/pt_hold_vs_delay.svg",
                             "PT hold percentage vs observation delay", "delay (steps)", "% hold",
                             {sv});
        }
    }

    CsvTable welfare_tab;
    if (try_read("welfare.csv", welfare_tab)) {
        Series mean_s, ge_s, theil_s, swfge_s, swfth_s, shift_s;
        const int c_delay = welfare_tab.column("delay");
        const int c_mean = welfare_tab.column("mean"), c_ge = welfare_tab.column("ge_index");
        const int c_theil = welfare_tab.column("theil_l"), c_sge = welfare_tab.column("swf_ge");
        const int c_sth = welfare_tab.column("swf_theil"), c_shift = welfare_tab.column("applied_shift");
        for (const auto& row : welfare_tab.rows) {
            const Step d = static_cast<Step>(std::stol(row[static_cast<std::size_t>(c_delay)]));
            mean_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_mean)]));
            ge_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_ge)]));
            theil_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_theil)]));
            swfge_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_sge)]));
            swfth_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_sth)]));
            shift_s.by_delay[d].push_back(std::stod(row[static_cast<std::size_t>(c_shift)]));
        }
        CsvWriter summary(report_dir + "/summary_welfare.csv",
                          "delay,mean,ge_index,theil_l,swf_ge,swf_theil,applied_shift");
        for (const auto& [d, v] : mean_s.by_delay) {
            summary.row({std::to_string(d), fmt_double(sample_mean(v)),
                         fmt_double(sample_mean(ge_s.by_delay[d])),
                         fmt_double(sample_mean(theil_s.by_delay[d])),
                         fmt_double(sample_mean(swfge_s.by_delay[d])),
                         fmt_double(sample_mean(swfth_s.by_delay[d])),
                         fmt_double(sample_mean(shift_s.by_delay[d]))});
        }
        SvgSeries ge_series{"swf (general entropy)", "#1f77b4", swfge_s.points(), {}};
        SvgSeries th_series{"swf (theil-l)", "#d62728", swfth_s.points(), {}};
        if (!ge_series.points.empty())
            write_line_chart(report_dir + "/swf_vs_delay.svg",
                             "Social welfare vs observation delay", "delay (steps)",
                             "social welfare (dollars)", {ge_series, th_series});
    }

    CsvTable importance_tab;
    if (try_read("importance.csv", importance_tab)) {
        const int c_delay = importance_tab.column("delay"), c_player = importance_tab.column("player");
        const int c_head = importance_tab.column("head"), c_group = importance_tab.column("feature_group");
        const int c_score = importance_tab.column("score"), c_del = importance_tab.column("delayed");
        // key: delay | player | head | group -> scores across seeds
        std::map<std::tuple<Step, std::string, std::string, std::string>, std::vector<double>> acc;
        std::map<std::string, bool> delayed_flag;
        for (const auto& row : importance_tab.rows) {
            const Step d = static_cast<Step>(std::stol(row[static_cast<std::size_t>(c_delay)]));
            acc[{d, row[static_cast<std::size_t>(c_player)], row[static_cast<std::size_t>(c_head)],
                 row[static_cast<std::size_t>(c_group)]}]
                .push_back(std::stod(row[static_cast<std::size_t>(c_score)]));
            delayed_flag[row[static_cast<std::size_t>(c_group)]] =
                row[static_cast<std::size_t>(c_del)] == "1";
        }
        std::map<std::tuple<Step, std::string, std::string>, std::vector<std::pair<std::string, double>>>
            charts;
        for (const auto& [key, scores] : acc) {
            const auto& [d, player, head, group] = key;
            charts[{d, player, head}].emplace_back(group, sample_mean(scores));
        }
        for (auto& [key, bars] : charts) {
            const auto& [d, player, head] = key;
            std::stable_sort(bars.begin(), bars.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            std::vector<std::string> labels;
            std::vector<double> values;
            std::vector<bool> highlight;
            for (const auto& [group, score] : bars) {
                labels.push_back(group);
                values.push_back(score);
                highlight.push_back(delayed_flag[group]);
            }
            write_bar_chart(report_dir + "/importance_" + player + "_" + head + "_delta" +
                                std::to_string(d) + ".svg",
                            "Feature importance: " + player + " " + head + " (delay " +
                                std::to_string(d) + ")",
                            "action-change score", labels, values, highlight);
        }
    }

    if (!status.warnings.empty()) {
        std::ofstream warn(report_dir + "/warnings.txt");
        for (const std::string& w : status.warnings) warn << w << "\n";
    }
    return status;
}

inline RunStatus run_sweep(const ExperimentConfig& cfg, const std::string& out_dir, int workers,
                           std::uint64_t seed_offset) {
    RunStatus status = run_train(cfg, out_dir, workers, seed_offset);
    status.merge(run_eval(cfg, out_dir, workers, seed_offset));
    status.merge(run_report(out_dir));
    return status;
}

} // namespace delaymarket
