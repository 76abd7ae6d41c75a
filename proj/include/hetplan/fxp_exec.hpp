#pragma once

#include "hetplan/fxp.hpp"
#include "hetplan/model_ir.hpp"
#include "hetplan/plan.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hetplan {

// Kernel block per parametric node id.
using WeightStore = std::map<std::string, FxpKernel>;

// Expected kernel dimensions for a parametric node (see FxpKernel).
FxpKernel kernel_layout(const ModelGraph& graph, int index, int fraction_bits = kDefaultFractionBits);

// Seeded integer draws in [-magnitude, magnitude]. Uses the raw engine output
// so streams are identical across standard library implementations.
WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed, int fraction_bits = kDefaultFractionBits,
                           int magnitude = 12);
FxpTensor random_tensor(const TensorShape& shape, std::uint64_t seed, int fraction_bits = kDefaultFractionBits,
                        int magnitude = 64);

// Reference evaluation in topological order. Throws SemanticError for
// missing weights and ShapeError for tensors that disagree with the graph.
FxpTensor execute_graph(const ModelGraph& graph, const FxpTensor& input, const WeightStore& weights);
// Same, returning every node's output (indexed like graph nodes).
std::vector<FxpTensor> execute_graph_trace(const ModelGraph& graph, const FxpTensor& input,
                                           const WeightStore& weights);

// Evaluates the graph as the plan rewrites it: ChannelSplit layers as two
// accumulator partials summed before requantization, DwSplit pairs as two
// separate stages, grouped convs on the FPGA as per-group convolutions
// concatenated. Fusion changes cost only. The plan is validated first.
FxpTensor execute_plan(const ModelGraph& graph, const PartitionPlan& plan, const FxpTensor& input,
                       const WeightStore& weights);
std::vector<FxpTensor> execute_plan_trace(const ModelGraph& graph, const PartitionPlan& plan,
                                          const FxpTensor& input, const WeightStore& weights);

}  // namespace hetplan
