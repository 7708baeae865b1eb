#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "surfsim/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Slotted-time cognitive radio dissemination simulator"};
    app.set_version_flag("--version", std::string(surfsim::cli::tool_version));
    app.require_subcommand(1);

    surfsim::cli::RunOptions run;
    std::uint64_t run_seed = 0;
    auto* run_cmd = app.add_subcommand("run", "Simulate one scenario and write metric CSVs");
    run_cmd->add_option("--config", run.config_path, "Scenario JSON")->required();
    auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override the config seed");
    run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
    run_cmd->add_flag("--emit-trace", run.emit_trace, "Also write trace.log");

    surfsim::cli::SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter x seed cross-product and aggregate");
    sweep_cmd->add_option("--config", sweep.config_path, "Base scenario JSON")->required();
    sweep_cmd->add_option("--sweep", sweep.sweep_path, "Sweep JSON (params, seeds)")->required();
    sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->required();
    sweep_cmd->add_option("--workers", sweep.workers, "Concurrent runs")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--emit-trace", sweep.emit_trace, "Also write one trace log per run");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario and print it with defaults filled");
    validate_cmd->add_option("--config", validate_path, "Scenario JSON")->required();

    std::string trace_path, replay_out;
    auto* replay_cmd = app.add_subcommand("trace-replay", "Recompute metric CSVs from a trace log");
    replay_cmd->add_option("--trace", trace_path, "Trace log")->required();
    replay_cmd->add_option("--out", replay_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (*run_cmd) {
        if (*seed_opt) run.seed = run_seed;
        return surfsim::cli::run_command(run, std::cerr);
    }
    if (*sweep_cmd) return surfsim::cli::sweep_command(sweep, std::cerr);
    if (*validate_cmd) return surfsim::cli::validate_command(validate_path, std::cout, std::cerr);
    if (*replay_cmd) return surfsim::cli::trace_replay_command(trace_path, replay_out, std::cerr);
    return 2;
}
