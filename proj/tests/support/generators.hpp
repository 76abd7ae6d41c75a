#pragma once

#include "hetplan/cost_models.hpp"
#include "hetplan/model_ir.hpp"
#include "hetplan/plan.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace testing_support {

using hetplan::ModelGraph;
using hetplan::PartitionDecision;
using hetplan::PartitionPlan;

struct GraphLimits {
    int max_nodes = 7;
    int max_dim = 8;  // bound on h, w and c of every tensor
};

// Random DAG over every layer kind, shapes inferred. Depthwise layers are
// often followed by a pointwise on their output so DwSplit pairs and
// fusable chains show up regularly.
ModelGraph random_graph(std::mt19937_64& rng, const GraphLimits& limits = {});

// Straight chain of parametric layers (every node chained to the previous).
ModelGraph random_chain(std::mt19937_64& rng, int length, int max_dim = 8);

// Structurally valid plan, any decision kind, any g in (0, C), random fused
// groupings. Budgets are ignored.
PartitionPlan random_plan(const ModelGraph& graph, std::mt19937_64& rng);

// Calibration over all kinds with a few random rows at small work values.
hetplan::GpuCalibrationTable random_calibration(std::mt19937_64& rng);

// Every plan assembled from GpuOnly / FpgaWhole / ChannelSplit(grid g) /
// DwSplit per parametric node and every fused/unfused choice between
// adjacent FPGA layers, filtered to structurally valid, budget-feasible
// plans. Calls `visit` for each; returns the number visited.
std::size_t for_each_feasible_plan(const ModelGraph& graph, const hetplan::FpgaModel& fpga,
                                   std::span<const int> extra_g,
                                   const std::function<void(const PartitionPlan&)>& visit);

// Product of per-node option counts visited by for_each_feasible_plan
// (before fusion choices); used to keep brute force affordable.
double brute_force_size(const ModelGraph& graph, std::span<const int> extra_g);

}  // namespace testing_support
