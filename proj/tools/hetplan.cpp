#include "hetplan/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, hetplan::RunConfig& cfg) {
    cmd->add_option("--model", cfg.model, "builtin:<name>[:key=value,...] or a model file")->required();
    cmd->add_option("--device-config", cfg.device_config, "FPGA and link parameters (key = value)");
    cmd->add_option("--calibration", cfg.calibration, "GPU calibration table (CSV)");
    cmd->add_option("--objective", cfg.objective, "latency | energy | weighted:<alpha>");
    cmd->add_option("--plan", cfg.plan, "plan document to reuse instead of optimizing");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--beam-width", cfg.beam_width, "beam width for large graphs")->check(CLI::PositiveNumber);
    cmd->add_option("--g-grid", cfg.g_grid, "extra channel-split values")->delimiter(',');
    cmd->add_flag("--exact-transfers", cfg.exact_transfers, "ship split partials at accumulator width");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneous FPGA-GPU partition planner"};
    app.require_subcommand(1);
    hetplan::RunConfig cfg;

    auto* plan = app.add_subcommand("plan", "optimize a partition plan and simulate it");
    add_common(plan, cfg);
    auto* simulate = app.add_subcommand("simulate", "cost a given plan (all GPU when none)");
    add_common(simulate, cfg);
    auto* verify = app.add_subcommand("verify", "check plan execution is bit-exact against the reference");
    add_common(verify, cfg);
    verify->add_option("--seed", cfg.seed, "seed for random inputs and weights");
    verify->add_option("--count", cfg.verify_count, "number of random runs")->check(CLI::PositiveNumber);
    plan->add_option("--seed", cfg.seed, "accepted for symmetry; planning is deterministic");
    simulate->add_option("--seed", cfg.seed, "accepted for symmetry; simulation is deterministic");
    auto* report = app.add_subcommand("report", "gain table from reports");
    report->add_option("reports", cfg.reports, "report.json or report.json:baseline.json")->required();
    report->add_option("--out", cfg.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (plan->parsed()) return hetplan::cmd_plan(cfg, std::cout, std::cerr);
    if (simulate->parsed()) return hetplan::cmd_simulate(cfg, std::cout, std::cerr);
    if (verify->parsed()) return hetplan::cmd_verify(cfg, std::cout, std::cerr);
    return hetplan::cmd_report(cfg, std::cout, std::cerr);
}
