// delaymarket experiment runner: train / eval / report / sweep over a grid of
// observation delays and seeds. Exit codes: 0 success, 1 configuration error,
// 2 partial-sweep failure.

#include "delaymarket/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace delaymarket;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    int workers = 1;
    std::uint64_t seed_offset = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* opt = cmd->add_option("--config", args.config_path, "experiment config file");
    if (config_required) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--workers", args.workers, "parallel sweep-cell workers")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed-offset", args.seed_offset, "offset added to every configured seed");
}

int finish(const RunStatus& status) {
    for (const std::string& w : status.warnings) std::cerr << "warning: " << w << "\n";
    if (status.failed_cells > 0) {
        std::cerr << status.failed_cells << "/" << status.total_cells << " sweep cells failed\n";
        return 2;
    }
    return status.warnings.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"delaymarket: two adaptive traders in a simulated exchange under observation delay"};
    app.require_subcommand(1);

    CommonArgs train_args, eval_args, report_args, sweep_args;
    CLI::App* cmd_train = app.add_subcommand("train", "train both players for every (delay, seed)");
    add_common(cmd_train, train_args, true);
    CLI::App* cmd_eval = app.add_subcommand("eval", "greedy evaluation of trained checkpoints");
    add_common(cmd_eval, eval_args, true);
    CLI::App* cmd_report = app.add_subcommand("report", "aggregate CSVs and draw plots");
    add_common(cmd_report, report_args, false);
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "train + eval + report");
    add_common(cmd_sweep, sweep_args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_train->parsed()) {
            const ExperimentConfig cfg = ExperimentConfig::from_file(train_args.config_path);
            return finish(run_train(cfg, train_args.out_dir, train_args.workers, train_args.seed_offset));
        }
        if (cmd_eval->parsed()) {
            const ExperimentConfig cfg = ExperimentConfig::from_file(eval_args.config_path);
            return finish(run_eval(cfg, eval_args.out_dir, eval_args.workers, eval_args.seed_offset));
        }
        if (cmd_report->parsed()) {
            return finish(run_report(report_args.out_dir));
        }
        if (cmd_sweep->parsed()) {
            const ExperimentConfig cfg = ExperimentConfig::from_file(sweep_args.config_path);
            return finish(run_sweep(cfg, sweep_args.out_dir, sweep_args.workers, sweep_args.seed_offset));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
