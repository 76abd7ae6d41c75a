#pragma once

#include "hetplan/cost_models.hpp"
#include "hetplan/model_ir.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hetplan {

enum class DecisionKind {
    GpuOnly,
    FpgaWhole,     // whole layer on the FPGA, member of a fused group
    ChannelSplit,  // trailing g input channels on the FPGA, rest on the GPU
    DwSplit,       // depthwise stage on the GPU, its pointwise partner on the FPGA
};

std::string_view to_string(DecisionKind kind);

struct PartitionDecision {
    DecisionKind kind = DecisionKind::GpuOnly;
    int fused_group = -1;  // FpgaWhole only
    int g = 0;             // ChannelSplit only

    static PartitionDecision gpu_only() { return {}; }
    static PartitionDecision fpga_whole(int group) { return {DecisionKind::FpgaWhole, group, 0}; }
    static PartitionDecision channel_split(int g) { return {DecisionKind::ChannelSplit, -1, g}; }
    static PartitionDecision dw_split() { return {DecisionKind::DwSplit, -1, 0}; }

    friend bool operator==(const PartitionDecision&, const PartitionDecision&) = default;
};

std::string to_string(const PartitionDecision& d);

// Total order used for deterministic tie-breaking. Fused group ids are
// ignored: GpuOnly < FpgaWhole < ChannelSplit (by g) < DwSplit.
int compare_decisions(const PartitionDecision& a, const PartitionDecision& b);
int compare_decision_vectors(std::span<const PartitionDecision> a, std::span<const PartitionDecision> b);

struct Objective {
    enum class Kind { Latency, Energy, Weighted };
    Kind kind = Kind::Energy;
    double alpha = 0.0;  // Weighted: alpha*L/L_base + (1-alpha)*E/E_base

    static Objective latency() { return {Kind::Latency, 0.0}; }
    static Objective energy() { return {Kind::Energy, 0.0}; }
    static Objective weighted(double alpha) { return {Kind::Weighted, alpha}; }

    // "latency", "energy" or "weighted:<alpha>" with alpha in [0, 1].
    static Objective parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    // Linear in (latency, energy); `baseline` normalizes the weighted form.
    [[nodiscard]] double value(const Cost& total, const Cost& baseline) const;

    friend bool operator==(const Objective& a, const Objective& b) {
        return a.kind == b.kind && (a.kind != Kind::Weighted || a.alpha == b.alpha);
    }
};

struct PartitionPlan {
    std::vector<PartitionDecision> decisions;  // indexed like graph nodes
    Objective objective;
    FpgaResources resource_usage;

    [[nodiscard]] std::size_t fpga_mapped_nodes(const ModelGraph& graph) const;

    friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

PartitionPlan all_gpu_plan(const ModelGraph& graph, Objective objective = {});

// Pointwise node that may pair with depthwise node `index` for DwSplit: the
// depthwise output feeds only that pointwise, which has no other input.
std::optional<int> dw_split_partner(const ModelGraph& graph, int index);
// Inverse lookup: depthwise node paired with pointwise node `index`.
std::optional<int> dw_split_owner(const ModelGraph& graph, int index);

// {ceil(C/4), ceil(C/2), ceil(3C/4)} plus extras, restricted to (0, C),
// sorted and deduplicated.
std::vector<int> split_grid(int channels, std::span<const int> extra_g = {});

bool channel_split_allowed(const LayerSpec& spec);

// FPGA-side resources charged for one node's decision.
FpgaResources decision_resources(const ModelGraph& graph, int index, const PartitionDecision& decision);

// Always GpuOnly; FpgaWhole (singleton group, id = node index) when the layer
// fits alone; ChannelSplit for each grid value whose slice fits alone;
// DwSplit on both members of a qualifying depthwise -> pointwise pair when
// the pointwise stage fits alone.
std::vector<PartitionDecision> enumerate_candidates(const ModelGraph& graph, int index, const FpgaModel& fpga,
                                                    std::span<const int> extra_g = {});

struct PlanVerdict {
    bool feasible = false;
    FpgaResources usage;
    std::string reason;  // empty when feasible
};

// Structural checks throw SemanticError: decision count, kinds applied to
// unsupported layers, g outside (0, C_I), unpaired DwSplit, non-contiguous
// fused groups, and a depthwise-partner pointwise placed on the FPGA alone
// while its depthwise stays on the GPU (that placement is spelled DwSplit).
// Budget checks produce an infeasible verdict.
PlanVerdict validate_plan(const ModelGraph& graph, const PartitionPlan& plan, const FpgaModel& fpga);

// Renumbers fused groups 0, 1, ... in order of first member.
void canonicalize_groups(std::vector<PartitionDecision>& decisions);

// Merges every run of chained FpgaWhole nodes into one fused group.
void fuse_maximal_chains(const ModelGraph& graph, std::vector<PartitionDecision>& decisions);

// JSON plan document (schema in docs/formats.md).
std::string serialize_plan(const ModelGraph& graph, const PartitionPlan& plan);
PartitionPlan parse_plan(const ModelGraph& graph, std::string_view text);

}  // namespace hetplan
