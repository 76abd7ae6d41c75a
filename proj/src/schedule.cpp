#include "hetplan/schedule.hpp"

#include "hetplan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace hetplan {

using json = nlohmann::ordered_json;

namespace {

constexpr std::pair<StageMode, std::string_view> kModeNames[] = {
    {StageMode::Gpu, "gpu"},
    {StageMode::Fpga, "fpga"},
    {StageMode::ParallelSplit, "parallel_split"},
    {StageMode::SequentialOffload, "sequential_offload"},
    {StageMode::FusedSegment, "fused_segment"},
};

// Concat reads every input, so its GPU work is measured on the output.
TensorShape gpu_query_shape(const ModelGraph& graph, int index) {
    if (graph.node(index).spec.kind == LayerKind::Concat) return graph.output_shape_of(index);
    return graph.input_shape_of(index);
}

void finish(StageCost& s) { s.stage_latency_s = stage_latency(s.mode, s.gpu_latency_s, s.fpga_latency_s, s.comm_latency_s); }

std::string format_number(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

std::string_view to_string(StageMode mode) {
    for (const auto& [m, name] : kModeNames) {
        if (m == mode) return name;
    }
    return "unknown";
}

std::optional<StageMode> stage_mode_from_string(std::string_view text) {
    for (const auto& [m, name] : kModeNames) {
        if (name == text) return m;
    }
    return std::nullopt;
}

double stage_latency(StageMode mode, double gpu_s, double fpga_s, double comm_s) {
    switch (mode) {
    case StageMode::ParallelSplit:
        return std::max(gpu_s, fpga_s + comm_s);
    case StageMode::SequentialOffload:
        return gpu_s + comm_s + fpga_s;
    case StageMode::Gpu:
        return gpu_s + comm_s;
    case StageMode::Fpga:
    case StageMode::FusedSegment:
        return fpga_s + comm_s;
    }
    return 0.0;
}

std::optional<double> CostReport::energy_gain() const {
    if (!baseline || total_energy_j <= 0.0) return std::nullopt;
    return baseline->energy_j / total_energy_j;
}

std::optional<double> CostReport::speedup() const {
    if (!baseline || total_latency_s <= 0.0) return std::nullopt;
    return baseline->latency_s / total_latency_s;
}

StageCost fpga_segment_cost(const ModelGraph& graph, int first, int last, const DeviceModels& models) {
    StageCost s;
    s.mode = first == last ? StageMode::Fpga : StageMode::FusedSegment;
    std::int64_t macs = 0;
    for (int i = first; i <= last; ++i) {
        const auto& node = graph.node(i);
        const TensorShape in = graph.input_shape_of(i);
        if (!fpga_resources(node.spec, in).fits(models.fpga)) {
            throw InfeasibleError("layer '" + node.id + "' does not fit the FPGA budget");
        }
        macs += mac_count(node.spec, in);
        s.layers.push_back(node.id);
    }
    const TensorShape in = graph.input_shape_of(first);
    const Cost compute = fpga_pipeline_cost(in.pixels(), last - first + 1, macs, models.fpga);
    const std::int64_t in_bytes = in.byte_size();
    const std::int64_t out_bytes = graph.output_shape_of(last).byte_size();
    const Cost inbound = link_cost(in_bytes, models.link);
    const Cost outbound = link_cost(out_bytes, models.link);

    s.fpga_latency_s = compute.latency_s;
    s.comm_latency_s = inbound.latency_s + outbound.latency_s;
    s.energy_j = compute.energy_j + inbound.energy_j + outbound.energy_j;
    s.bytes_transferred = in_bytes + out_bytes;
    finish(s);
    return s;
}

StageCost node_stage_cost(const ModelGraph& graph, int index, const PartitionDecision& decision,
                          const DeviceModels& models, const SimOptions& options) {
    const auto& node = graph.node(index);
    StageCost s;
    switch (decision.kind) {
    case DecisionKind::GpuOnly: {
        const Cost c = gpu_cost(node.spec, gpu_query_shape(graph, index), models.gpu);
        s.mode = StageMode::Gpu;
        s.layers = {node.id};
        s.gpu_latency_s = c.latency_s;
        s.energy_j = c.energy_j;
        break;
    }
    case DecisionKind::FpgaWhole:
        return fpga_segment_cost(graph, index, index, models);
    case DecisionKind::ChannelSplit: {
        const TensorShape in = graph.input_shape_of(index);
        const TensorShape out = graph.output_shape_of(index);
        if (decision.g <= 0 || decision.g >= in.c) throw SemanticError("layer '" + node.id + "': g out of range");
        TensorShape gpu_in = in;
        gpu_in.c = in.c - decision.g;
        TensorShape fpga_in = in;
        fpga_in.c = decision.g;
        if (!fpga_resources(node.spec, fpga_in).fits(models.fpga)) {
            throw InfeasibleError("layer '" + node.id + "': FPGA slice does not fit the budget");
        }
        const Cost gpu = gpu_cost(node.spec, gpu_in, models.gpu);
        const Cost fpga = fpga_pipeline_cost(in.pixels(), 1, mac_count(node.spec, fpga_in), models.fpga);
        const std::int64_t in_bytes = fpga_in.byte_size();
        const std::int64_t out_bytes = out.byte_size() * (options.exact_transfers ? 4 : 1);
        const Cost inbound = link_cost(in_bytes, models.link);
        const Cost outbound = link_cost(out_bytes, models.link);

        s.mode = StageMode::ParallelSplit;
        s.layers = {node.id};
        s.gpu_latency_s = gpu.latency_s;
        s.fpga_latency_s = fpga.latency_s;
        s.comm_latency_s = inbound.latency_s + outbound.latency_s;
        s.energy_j = gpu.energy_j + fpga.energy_j + inbound.energy_j + outbound.energy_j;
        s.bytes_transferred = in_bytes + out_bytes;
        break;
    }
    case DecisionKind::DwSplit: {
        const auto partner = dw_split_partner(graph, index);
        if (!partner) throw SemanticError("layer '" + node.id + "': dw_split stage must start at the depthwise layer");
        const auto& pw = graph.node(*partner);
        const Cost gpu = gpu_cost(node.spec, graph.input_shape_of(index), models.gpu);
        const Cost fpga = fpga_cost(pw.spec, graph.input_shape_of(*partner), models.fpga);
        const std::int64_t in_bytes = graph.output_shape_of(index).byte_size();
        const std::int64_t out_bytes = graph.output_shape_of(*partner).byte_size();
        const Cost inbound = link_cost(in_bytes, models.link);
        const Cost outbound = link_cost(out_bytes, models.link);

        s.mode = StageMode::SequentialOffload;
        s.layers = {node.id, pw.id};
        s.gpu_latency_s = gpu.latency_s;
        s.fpga_latency_s = fpga.latency_s;
        s.comm_latency_s = inbound.latency_s + outbound.latency_s;
        s.energy_j = gpu.energy_j + fpga.energy_j + inbound.energy_j + outbound.energy_j;
        s.bytes_transferred = in_bytes + out_bytes;
        break;
    }
    }
    finish(s);
    return s;
}

CostReport simulate(const ModelGraph& graph, const PartitionPlan& plan, const DeviceModels& models,
                    const SimOptions& options) {
    const PlanVerdict verdict = validate_plan(graph, plan, models.fpga);
    if (!verdict.feasible) throw InfeasibleError("plan is infeasible: " + verdict.reason);

    CostReport report;
    report.workload = graph.name();
    report.objective = plan.objective.to_string();
    report.exact_transfers = options.exact_transfers;

    const auto& ds = plan.decisions;
    for (int i = 0; i < graph.size();) {
        const auto& d = ds[static_cast<std::size_t>(i)];
        StageCost stage;
        int next = i + 1;
        if (d.kind == DecisionKind::FpgaWhole) {
            int last = i;
            while (last + 1 < graph.size() && ds[static_cast<std::size_t>(last + 1)].kind == DecisionKind::FpgaWhole &&
                   ds[static_cast<std::size_t>(last + 1)].fused_group == d.fused_group) {
                ++last;
            }
            stage = fpga_segment_cost(graph, i, last, models);
            next = last + 1;
        } else if (d.kind == DecisionKind::DwSplit && dw_split_owner(graph, i)) {
            // Pointwise member: already costed with its depthwise stage.
            i = next;
            continue;
        } else {
            stage = node_stage_cost(graph, i, d, models, options);
        }
        stage.stage_id = std::to_string(report.stages.size());
        report.total_latency_s += stage.stage_latency_s;
        report.total_energy_j += stage.energy_j;
        report.total_bytes_transferred += stage.bytes_transferred;
        report.stages.push_back(std::move(stage));
        i = next;
    }
    return report;
}

CostReport baseline_gpu_only(const ModelGraph& graph, const DeviceModels& models, const SimOptions& options) {
    return simulate(graph, all_gpu_plan(graph), models, options);
}

Gains compare(const Cost& report, const Cost& baseline) {
    if (!(report.energy_j > 0.0) || !(report.latency_s > 0.0) || !(baseline.energy_j > 0.0) ||
        !(baseline.latency_s > 0.0)) {
        throw SemanticError("cannot compare reports with zero totals");
    }
    return {baseline.energy_j / report.energy_j, baseline.latency_s / report.latency_s};
}

Gains compare(const CostReport& report, const CostReport& baseline) {
    return compare(report.totals(), baseline.totals());
}

void attach_baseline(CostReport& report, const CostReport& baseline) { report.baseline = baseline.totals(); }

std::string format_gain(double gain) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fx", gain);
    return buf;
}

std::string report_to_json(const CostReport& r) {
    json doc;
    doc["format"] = "hetplan-report";
    doc["version"] = 1;
    doc["workload"] = r.workload;
    doc["objective"] = r.objective;
    doc["exact_transfers"] = r.exact_transfers;
    json stages = json::array();
    for (const auto& s : r.stages) {
        json e;
        e["stage_id"] = s.stage_id;
        e["mode"] = std::string(to_string(s.mode));
        e["layers"] = s.layers;
        e["gpu_latency_s"] = s.gpu_latency_s;
        e["fpga_latency_s"] = s.fpga_latency_s;
        e["comm_latency_s"] = s.comm_latency_s;
        e["stage_latency_s"] = s.stage_latency_s;
        e["energy_j"] = s.energy_j;
        e["bytes_transferred"] = s.bytes_transferred;
        stages.push_back(std::move(e));
    }
    doc["stages"] = std::move(stages);
    doc["total_latency_s"] = r.total_latency_s;
    doc["total_energy_j"] = r.total_energy_j;
    doc["total_bytes_transferred"] = r.total_bytes_transferred;
    if (r.baseline) {
        doc["baseline"] = {{"total_latency_s", r.baseline->latency_s}, {"total_energy_j", r.baseline->energy_j}};
        if (auto g = r.energy_gain()) {
            doc["energy_gain"] = *g;
            doc["energy_reduction_pct"] = 100.0 * (1.0 - r.total_energy_j / r.baseline->energy_j);
        }
        if (auto s = r.speedup()) {
            doc["speedup"] = *s;
            doc["latency_reduction_pct"] = 100.0 * (1.0 - r.total_latency_s / r.baseline->latency_s);
        }
    }
    return doc.dump(2) + "\n";
}

CostReport report_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("report document: ") + e.what());
    }
    try {
        if (doc.value("format", "") != "hetplan-report" || doc.value("version", 0) != 1) {
            throw SemanticError("report document: schema is not hetplan-report version 1");
        }
        CostReport r;
        r.workload = doc.at("workload").get<std::string>();
        r.objective = doc.value("objective", "");
        r.exact_transfers = doc.value("exact_transfers", false);
        for (const auto& e : doc.at("stages")) {
            StageCost s;
            s.stage_id = e.at("stage_id").get<std::string>();
            const auto mode = stage_mode_from_string(e.at("mode").get<std::string>());
            if (!mode) throw SemanticError("report document: unknown stage mode");
            s.mode = *mode;
            s.layers = e.at("layers").get<std::vector<std::string>>();
            s.gpu_latency_s = e.at("gpu_latency_s").get<double>();
            s.fpga_latency_s = e.at("fpga_latency_s").get<double>();
            s.comm_latency_s = e.at("comm_latency_s").get<double>();
            s.stage_latency_s = e.at("stage_latency_s").get<double>();
            s.energy_j = e.at("energy_j").get<double>();
            s.bytes_transferred = e.at("bytes_transferred").get<std::int64_t>();
            r.stages.push_back(std::move(s));
        }
        r.total_latency_s = doc.at("total_latency_s").get<double>();
        r.total_energy_j = doc.at("total_energy_j").get<double>();
        r.total_bytes_transferred = doc.at("total_bytes_transferred").get<std::int64_t>();
        if (doc.contains("baseline")) {
            const auto& b = doc.at("baseline");
            r.baseline = Cost{b.at("total_latency_s").get<double>(), b.at("total_energy_j").get<double>()};
        }
        return r;
    } catch (const json::exception& e) {
        throw SemanticError(std::string("report document: ") + e.what());
    }
}

std::string report_to_csv(const CostReport& r) {
    std::ostringstream out;
    out << "stage_id,mode,layers,gpu_latency_s,fpga_latency_s,comm_latency_s,stage_latency_s,energy_j,bytes_transferred\n";
    for (const auto& s : r.stages) {
        std::string layers;
        for (const auto& l : s.layers) layers += (layers.empty() ? "" : "+") + l;
        out << s.stage_id << "," << to_string(s.mode) << "," << layers << "," << format_number(s.gpu_latency_s) << ","
            << format_number(s.fpga_latency_s) << "," << format_number(s.comm_latency_s) << ","
            << format_number(s.stage_latency_s) << "," << format_number(s.energy_j) << "," << s.bytes_transferred
            << "\n";
    }
    return out.str();
}

}  // namespace hetplan
