#include "hetplan/plan.hpp"

#include "hetplan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

namespace hetplan {

using json = nlohmann::ordered_json;

std::string_view to_string(DecisionKind kind) {
    switch (kind) {
    case DecisionKind::GpuOnly:
        return "gpu_only";
    case DecisionKind::FpgaWhole:
        return "fpga_whole";
    case DecisionKind::ChannelSplit:
        return "channel_split";
    case DecisionKind::DwSplit:
        return "dw_split";
    }
    return "unknown";
}

std::string to_string(const PartitionDecision& d) {
    switch (d.kind) {
    case DecisionKind::FpgaWhole:
        return "fpga_whole(" + std::to_string(d.fused_group) + ")";
    case DecisionKind::ChannelSplit:
        return "channel_split(g=" + std::to_string(d.g) + ")";
    default:
        return std::string(to_string(d.kind));
    }
}

int compare_decisions(const PartitionDecision& a, const PartitionDecision& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind) ? -1 : 1;
    if (a.kind == DecisionKind::ChannelSplit && a.g != b.g) return a.g < b.g ? -1 : 1;
    return 0;
}

int compare_decision_vectors(std::span<const PartitionDecision> a, std::span<const PartitionDecision> b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare_decisions(a[i], b[i]); c != 0) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

Objective Objective::parse(std::string_view text) {
    if (text == "latency") return latency();
    if (text == "energy") return energy();
    constexpr std::string_view prefix = "weighted:";
    if (text.substr(0, prefix.size()) == prefix) {
        const auto rest = text.substr(prefix.size());
        double alpha = 0.0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), alpha);
        if (ec == std::errc{} && ptr == rest.data() + rest.size() && alpha >= 0.0 && alpha <= 1.0) {
            return weighted(alpha);
        }
    }
    throw SemanticError("objective must be 'latency', 'energy' or 'weighted:<alpha in [0,1]>', got '" +
                        std::string(text) + "'");
}

std::string Objective::to_string() const {
    switch (kind) {
    case Kind::Latency:
        return "latency";
    case Kind::Energy:
        return "energy";
    case Kind::Weighted: {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, alpha);
        (void)ec;
        return "weighted:" + std::string(buf, ptr);
    }
    }
    return "energy";
}

double Objective::value(const Cost& total, const Cost& baseline) const {
    switch (kind) {
    case Kind::Latency:
        return total.latency_s;
    case Kind::Energy:
        return total.energy_j;
    case Kind::Weighted: {
        const double l = baseline.latency_s > 0 ? total.latency_s / baseline.latency_s : total.latency_s;
        const double e = baseline.energy_j > 0 ? total.energy_j / baseline.energy_j : total.energy_j;
        return alpha * l + (1.0 - alpha) * e;
    }
    }
    return total.energy_j;
}

std::size_t PartitionPlan::fpga_mapped_nodes(const ModelGraph& graph) const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        if (d.kind == DecisionKind::FpgaWhole || d.kind == DecisionKind::ChannelSplit) ++count;
        if (d.kind == DecisionKind::DwSplit && graph.node(static_cast<int>(i)).spec.kind == LayerKind::Pointwise) {
            ++count;
        }
    }
    return count;
}

PartitionPlan all_gpu_plan(const ModelGraph& graph, Objective objective) {
    PartitionPlan plan;
    plan.decisions.assign(static_cast<std::size_t>(graph.size()), PartitionDecision::gpu_only());
    plan.objective = objective;
    return plan;
}

std::optional<int> dw_split_partner(const ModelGraph& graph, int index) {
    if (index < 0 || index >= graph.size()) return std::nullopt;
    if (graph.node(index).spec.kind != LayerKind::DepthwiseConv) return std::nullopt;
    const auto& consumers = graph.consumers(index);
    if (consumers.size() != 1) return std::nullopt;
    const int pw = consumers.front();
    const auto& node = graph.node(pw);
    if (node.spec.kind != LayerKind::Pointwise || node.inputs.size() != 1 || node.inputs.front() != index) {
        return std::nullopt;
    }
    return pw;
}

std::optional<int> dw_split_owner(const ModelGraph& graph, int index) {
    if (index < 0 || index >= graph.size()) return std::nullopt;
    const auto& node = graph.node(index);
    if (node.spec.kind != LayerKind::Pointwise || node.inputs.size() != 1) return std::nullopt;
    const int pred = node.inputs.front();
    if (pred == kGraphInput) return std::nullopt;
    auto partner = dw_split_partner(graph, pred);
    if (partner && *partner == index) return pred;
    return std::nullopt;
}

std::vector<int> split_grid(int channels, std::span<const int> extra_g) {
    std::set<int> values;
    for (int v : {(channels + 3) / 4, (channels + 1) / 2, (3 * channels + 3) / 4}) values.insert(v);
    for (int v : extra_g) values.insert(v);
    std::vector<int> out;
    for (int v : values) {
        if (v > 0 && v < channels) out.push_back(v);
    }
    return out;
}

bool channel_split_allowed(const LayerSpec& spec) {
    return (spec.kind == LayerKind::Conv && spec.groups == 1) || spec.kind == LayerKind::Pointwise;
}

FpgaResources decision_resources(const ModelGraph& graph, int index, const PartitionDecision& decision) {
    const auto& node = graph.node(index);
    const TensorShape in = graph.input_shape_of(index);
    switch (decision.kind) {
    case DecisionKind::GpuOnly:
        return {};
    case DecisionKind::FpgaWhole:
        return fpga_resources(node.spec, in);
    case DecisionKind::ChannelSplit: {
        TensorShape slice = in;
        slice.c = decision.g;
        return fpga_resources(node.spec, slice);
    }
    case DecisionKind::DwSplit:
        // Charged once, on the pointwise member of the pair.
        if (node.spec.kind == LayerKind::Pointwise) return fpga_resources(node.spec, in);
        return {};
    }
    return {};
}

std::vector<PartitionDecision> enumerate_candidates(const ModelGraph& graph, int index, const FpgaModel& fpga,
                                                    std::span<const int> extra_g) {
    std::vector<PartitionDecision> out{PartitionDecision::gpu_only()};
    const auto& node = graph.node(index);
    if (!node.spec.is_parametric()) return out;

    const TensorShape in = graph.input_shape_of(index);
    if (fpga_resources(node.spec, in).fits(fpga)) out.push_back(PartitionDecision::fpga_whole(index));

    if (channel_split_allowed(node.spec)) {
        for (int g : split_grid(in.c, extra_g)) {
            auto d = PartitionDecision::channel_split(g);
            if (decision_resources(graph, index, d).fits(fpga)) out.push_back(d);
        }
    }

    std::optional<int> pointwise;
    if (auto partner = dw_split_partner(graph, index)) pointwise = partner;
    if (dw_split_owner(graph, index)) pointwise = index;
    if (pointwise && fpga_resources(graph.node(*pointwise).spec, graph.input_shape_of(*pointwise)).fits(fpga)) {
        out.push_back(PartitionDecision::dw_split());
    }
    return out;
}

PlanVerdict validate_plan(const ModelGraph& graph, const PartitionPlan& plan, const FpgaModel& fpga) {
    const auto& ds = plan.decisions;
    if (static_cast<int>(ds.size()) != graph.size()) {
        throw SemanticError("plan has " + std::to_string(ds.size()) + " decisions for " +
                            std::to_string(graph.size()) + " layers");
    }

    std::map<int, std::vector<int>> groups;
    FpgaResources usage;
    for (int i = 0; i < graph.size(); ++i) {
        const auto& node = graph.node(i);
        const auto& d = ds[static_cast<std::size_t>(i)];
        const std::string where = "layer '" + node.id + "': ";
        switch (d.kind) {
        case DecisionKind::GpuOnly:
            break;
        case DecisionKind::FpgaWhole:
            if (!node.spec.is_parametric()) {
                throw SemanticError(where + "fpga_whole needs a conv, depthwise or pointwise layer");
            }
            if (d.fused_group < 0) throw SemanticError(where + "fpga_whole needs a nonnegative fused_group");
            groups[d.fused_group].push_back(i);
            if (auto owner = dw_split_owner(graph, i)) {
                const auto& od = ds[static_cast<std::size_t>(*owner)];
                if (od.kind != DecisionKind::FpgaWhole || od.fused_group != d.fused_group) {
                    throw SemanticError(where + "pointwise after depthwise '" + graph.node(*owner).id +
                                        "' goes to the FPGA alone only via dw_split");
                }
            }
            break;
        case DecisionKind::ChannelSplit: {
            if (!channel_split_allowed(node.spec)) {
                throw SemanticError(where + "channel_split needs an ungrouped conv or pointwise layer");
            }
            const int c = graph.input_shape_of(i).c;
            if (d.g <= 0 || d.g >= c) {
                throw SemanticError(where + "channel_split g=" + std::to_string(d.g) + " outside (0, " +
                                    std::to_string(c) + ")");
            }
            break;
        }
        case DecisionKind::DwSplit: {
            auto partner = dw_split_partner(graph, i);
            auto owner = dw_split_owner(graph, i);
            const int other = partner ? *partner : (owner ? *owner : -1);
            if (other < 0) throw SemanticError(where + "dw_split needs an adjacent depthwise -> pointwise pair");
            if (ds[static_cast<std::size_t>(other)].kind != DecisionKind::DwSplit) {
                throw SemanticError(where + "dw_split partner '" + graph.node(other).id + "' is not dw_split");
            }
            break;
        }
        }
        usage += decision_resources(graph, i, d);
    }

    for (const auto& [id, members] : groups) {
        for (std::size_t k = 1; k < members.size(); ++k) {
            if (members[k] != members[k - 1] + 1 || !graph.chained_to_previous(members[k])) {
                throw SemanticError("fused group " + std::to_string(id) + " is not a contiguous chain at layer '" +
                                    graph.node(members[k]).id + "'");
            }
        }
    }

    PlanVerdict v;
    v.usage = usage;
    if (usage.macs > fpga.mac_budget) {
        v.reason = "FPGA multipliers " + std::to_string(usage.macs) + " exceed budget " + std::to_string(fpga.mac_budget);
    } else if (usage.memory_bytes() > fpga.memory_budget_bytes) {
        v.reason = "FPGA memory " + std::to_string(usage.memory_bytes()) + " bytes exceeds budget " +
                   std::to_string(fpga.memory_budget_bytes);
    } else {
        v.feasible = true;
    }
    return v;
}

void canonicalize_groups(std::vector<PartitionDecision>& decisions) {
    std::map<int, int> remap;
    for (auto& d : decisions) {
        if (d.kind != DecisionKind::FpgaWhole) continue;
        auto [it, inserted] = remap.emplace(d.fused_group, static_cast<int>(remap.size()));
        d.fused_group = it->second;
    }
}

void fuse_maximal_chains(const ModelGraph& graph, std::vector<PartitionDecision>& decisions) {
    int next = 0;
    for (int i = 0; i < graph.size(); ++i) {
        auto& d = decisions[static_cast<std::size_t>(i)];
        if (d.kind != DecisionKind::FpgaWhole) continue;
        const bool extend = i > 0 && decisions[static_cast<std::size_t>(i - 1)].kind == DecisionKind::FpgaWhole &&
                            graph.chained_to_previous(i);
        d.fused_group = extend ? decisions[static_cast<std::size_t>(i - 1)].fused_group : next++;
    }
}

std::string serialize_plan(const ModelGraph& graph, const PartitionPlan& plan) {
    json doc;
    doc["format"] = "hetplan-plan";
    doc["version"] = 1;
    doc["model"] = graph.name();
    doc["objective"] = plan.objective.to_string();
    json decisions = json::array();
    for (int i = 0; i < graph.size(); ++i) {
        const auto& d = plan.decisions.at(static_cast<std::size_t>(i));
        json entry;
        entry["layer"] = graph.node(i).id;
        entry["decision"] = std::string(to_string(d.kind));
        if (d.kind == DecisionKind::FpgaWhole) entry["fused_group"] = d.fused_group;
        if (d.kind == DecisionKind::ChannelSplit) entry["g"] = d.g;
        decisions.push_back(std::move(entry));
    }
    doc["decisions"] = std::move(decisions);
    doc["resource_usage"] = {{"macs", plan.resource_usage.macs},
                             {"weight_bytes", plan.resource_usage.weight_bytes},
                             {"buffer_bytes", plan.resource_usage.buffer_bytes}};
    return doc.dump(2) + "\n";
}

PartitionPlan parse_plan(const ModelGraph& graph, std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("plan document: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "hetplan-plan") throw SyntaxError("plan document: field format must be 'hetplan-plan'");
        if (doc.value("version", 0) != 1) throw SyntaxError("plan document: unsupported version");

        PartitionPlan plan;
        plan.objective = Objective::parse(doc.value("objective", "energy"));
        std::vector<std::optional<PartitionDecision>> slots(static_cast<std::size_t>(graph.size()));
        for (const auto& entry : doc.at("decisions")) {
            const std::string layer = entry.at("layer").get<std::string>();
            const auto index = graph.index_of(layer);
            if (!index) throw SemanticError("plan document: decision references absent layer '" + layer + "'");
            auto& slot = slots[static_cast<std::size_t>(*index)];
            if (slot) throw SemanticError("plan document: duplicate decision for layer '" + layer + "'");

            const std::string kind = entry.at("decision").get<std::string>();
            if (kind == "gpu_only") {
                slot = PartitionDecision::gpu_only();
            } else if (kind == "fpga_whole") {
                slot = PartitionDecision::fpga_whole(entry.at("fused_group").get<int>());
            } else if (kind == "channel_split") {
                slot = PartitionDecision::channel_split(entry.at("g").get<int>());
            } else if (kind == "dw_split") {
                slot = PartitionDecision::dw_split();
            } else {
                throw SyntaxError("plan document: layer '" + layer + "': unknown decision '" + kind + "'");
            }
        }
        for (int i = 0; i < graph.size(); ++i) {
            const auto& slot = slots[static_cast<std::size_t>(i)];
            if (!slot) throw SemanticError("plan document: no decision for layer '" + graph.node(i).id + "'");
            plan.decisions.push_back(*slot);
        }
        for (int i = 0; i < graph.size(); ++i) {
            plan.resource_usage += decision_resources(graph, i, plan.decisions[static_cast<std::size_t>(i)]);
        }
        return plan;
    } catch (const json::exception& e) {
        throw SyntaxError(std::string("plan document: ") + e.what());
    }
}

}  // namespace hetplan
