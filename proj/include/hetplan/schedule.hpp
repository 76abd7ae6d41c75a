#pragma once

#include "hetplan/cost_models.hpp"
#include "hetplan/model_ir.hpp"
#include "hetplan/plan.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hetplan {

enum class StageMode { Gpu, Fpga, ParallelSplit, SequentialOffload, FusedSegment };

std::string_view to_string(StageMode mode);
std::optional<StageMode> stage_mode_from_string(std::string_view text);

struct SimOptions {
    // Split partials cross the link at accumulator width (4 bytes/element)
    // instead of requantized 8-bit values.
    bool exact_transfers = false;
};

struct StageCost {
    std::string stage_id;
    StageMode mode = StageMode::Gpu;
    std::vector<std::string> layers;
    double gpu_latency_s = 0.0;
    double fpga_latency_s = 0.0;
    double comm_latency_s = 0.0;
    double stage_latency_s = 0.0;
    double energy_j = 0.0;  // gpu + fpga + link energy, summed
    std::int64_t bytes_transferred = 0;
};

// Latency composition per stage:
//   parallel_split      max(gpu, fpga + comm)
//   sequential_offload  gpu + comm + fpga
//   gpu                 gpu (+ comm, always zero for GPU stages)
//   fpga, fused_segment fpga + comm, where comm is the inbound and outbound
//                       transfer of the FPGA-resident work
double stage_latency(StageMode mode, double gpu_s, double fpga_s, double comm_s);

struct CostReport {
    std::string workload;
    std::string objective;
    bool exact_transfers = false;
    std::vector<StageCost> stages;
    double total_latency_s = 0.0;
    double total_energy_j = 0.0;
    std::int64_t total_bytes_transferred = 0;
    std::optional<Cost> baseline;  // GPU-only totals when attached

    [[nodiscard]] Cost totals() const { return {total_latency_s, total_energy_j}; }
    [[nodiscard]] std::optional<double> energy_gain() const;
    [[nodiscard]] std::optional<double> speedup() const;
};

// Cost of the stage a single node opens under `decision`, evaluated on its
// own: GpuOnly, FpgaWhole as a one-layer segment, ChannelSplit, or DwSplit
// on the depthwise member (covering the pointwise partner as well).
StageCost node_stage_cost(const ModelGraph& graph, int index, const PartitionDecision& decision,
                          const DeviceModels& models, const SimOptions& options = {});

// Pipelined FPGA segment over consecutive nodes [first, last]: one inbound
// transfer of the segment input, latency (H_in*W_in + sum of depths)/clock,
// one outbound transfer of the segment output.
StageCost fpga_segment_cost(const ModelGraph& graph, int first, int last, const DeviceModels& models);

// Walks stages in topological order. Every FPGA-resident stage receives its
// input from and returns its result to GPU memory; fused segments keep
// their intermediates on chip. Throws InfeasibleError for plans over budget,
// SemanticError for malformed plans and CalibrationError for missing kinds.
CostReport simulate(const ModelGraph& graph, const PartitionPlan& plan, const DeviceModels& models,
                    const SimOptions& options = {});

CostReport baseline_gpu_only(const ModelGraph& graph, const DeviceModels& models, const SimOptions& options = {});

struct Gains {
    double energy_gain = 1.0;  // baseline energy / report energy
    double speedup = 1.0;      // baseline latency / report latency
};

// Throws SemanticError when either total is zero.
Gains compare(const Cost& report, const Cost& baseline);
Gains compare(const CostReport& report, const CostReport& baseline);

void attach_baseline(CostReport& report, const CostReport& baseline);

// Structured JSON and flat CSV stage table; schemas in docs/formats.md.
std::string report_to_json(const CostReport& report);
CostReport report_from_json(std::string_view text);
std::string report_to_csv(const CostReport& report);

// "1.34x"
std::string format_gain(double gain);

}  // namespace hetplan
