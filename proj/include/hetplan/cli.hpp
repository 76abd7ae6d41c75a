#pragma once

#include "hetplan/cost_models.hpp"
#include "hetplan/model_ir.hpp"
#include "hetplan/plan.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hetplan {

std::filesystem::path default_calibration_path();

struct RunConfig {
    // "builtin:<name>" or "builtin:<name>:key=value,..." or a model file path.
    std::string model;
    std::string device_config;  // empty: built-in FPGA and link defaults
    std::string calibration;    // empty: default_calibration_path()
    std::string objective = "energy";
    std::string plan;     // reuse this plan instead of optimizing
    std::string out_dir;  // empty: write nothing, print only
    std::uint64_t seed = 1;
    int beam_width = 32;
    std::vector<int> g_grid;  // extra ChannelSplit values
    bool exact_transfers = false;
    int verify_count = 32;
    // report: "report.json" (baseline embedded) or "report.json:baseline.json"
    std::vector<std::string> reports;
};

ModelGraph load_model_source(const std::string& source);
DeviceModels load_device_models(const RunConfig& config);

// Each command prints a transcript to `out`, diagnostics to `err`, and
// returns the process exit status: 0 success, 1 verification mismatch,
// 2 invalid input.
int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err);

struct GainRow {
    std::string workload;
    double energy_gain = 1.0;
    double speedup = 1.0;
};

std::string gain_table_csv(const std::vector<GainRow>& rows);
std::string gain_table_text(const std::vector<GainRow>& rows);

}  // namespace hetplan
