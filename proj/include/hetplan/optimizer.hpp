#pragma once

#include "hetplan/cost_models.hpp"
#include "hetplan/model_ir.hpp"
#include "hetplan/plan.hpp"
#include "hetplan/schedule.hpp"

#include <cstddef>
#include <vector>

namespace hetplan {

struct OptimizeOptions {
    int beam_width = 32;
    std::vector<int> extra_g;  // appended to the default split grid
    int exhaustive_limit = 16;  // max decision points searched exhaustively
    SimOptions sim;
};

struct OptimizeResult {
    PartitionPlan plan;
    CostReport report;    // simulate(plan)
    CostReport baseline;  // all-GpuOnly
    double objective_value = 0.0;
    bool exhaustive = true;
    std::size_t decision_points = 0;
    std::size_t plans_evaluated = 0;
};

// Minimum-objective feasible plan. Exhaustive branch-and-bound up to
// `exhaustive_limit` decision points, beam search beyond. Ties are broken by
// lower energy, lower latency, fewer FPGA-mapped layers, then the
// lexicographically smallest decision vector. FpgaWhole runs are fused into
// maximal chains, which never costs more than leaving them split.
OptimizeResult optimize_detailed(const ModelGraph& graph, const DeviceModels& models, const Objective& objective,
                                 const OptimizeOptions& options = {});

PartitionPlan optimize(const ModelGraph& graph, const DeviceModels& models, const Objective& objective,
                       const OptimizeOptions& options = {});

}  // namespace hetplan
