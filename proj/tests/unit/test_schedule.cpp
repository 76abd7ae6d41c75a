#include "hetplan/calibration.hpp"
#include "hetplan/errors.hpp"
#include "hetplan/schedule.hpp"
#include "hetplan/templates.hpp"

#include "generators.hpp"

#include <doctest.h>

using namespace hetplan;

namespace {

DeviceModels favorable() {
    DeviceModels m;
    m.gpu = load_calibration_file(std::string(HETPLAN_DATA_DIR) + "/calibration/fpga_favorable.csv");
    return m;
}

}  // namespace

TEST_CASE("stage latency composition") {
    CHECK(stage_latency(StageMode::ParallelSplit, 10e-3, 4e-3, 3e-3) == 10e-3);
    CHECK(stage_latency(StageMode::ParallelSplit, 2e-3, 4e-3, 3e-3) == 7e-3);
    CHECK(stage_latency(StageMode::SequentialOffload, 2e-3, 4e-3, 3e-3) == doctest::Approx(9e-3));
    CHECK(stage_latency(StageMode::Gpu, 2e-3, 0.0, 0.0) == 2e-3);
    CHECK(stage_latency(StageMode::FusedSegment, 0.0, 4e-3, 1e-3) == 5e-3);
}

TEST_CASE("simulate all-GPU equals the baseline") {
    const auto m = favorable();
    const auto fire = fire_module();
    const auto r = simulate(fire, all_gpu_plan(fire), m);
    const auto b = baseline_gpu_only(fire, m);
    CHECK(r.total_bytes_transferred == 0);
    CHECK(r.stages.size() == 4);
    double sum = 0.0;
    for (int i = 0; i < fire.size(); ++i) {
        sum += gpu_cost(fire.node(i).spec, i == 3 ? fire.output_shape_of(3) : fire.input_shape_of(i), m.gpu).latency_s;
    }
    CHECK(r.total_latency_s == doctest::Approx(sum).epsilon(1e-12));
    CHECK(report_to_json(r) == report_to_json(b));

    const auto one = infer_shapes(ModelGraph::build("one", {8, 8, 4}, {{"a", LayerSpec::pointwise(4), {"input"}}}));
    const Cost c = gpu_cost(LayerSpec::pointwise(4), {8, 8, 4}, m.gpu);
    CHECK(baseline_gpu_only(one, m).total_latency_s == c.latency_s);
    CHECK(baseline_gpu_only(one, m).total_energy_j == c.energy_j);

    const auto empty = infer_shapes(ModelGraph::build("empty", {8, 8, 4}, {}));
    CHECK(baseline_gpu_only(empty, m).total_energy_j == 0.0);
    CHECK(baseline_gpu_only(empty, m).total_latency_s == 0.0);
}

TEST_CASE("fused segment skips its intermediate transfer") {
    const auto g = infer_shapes(ModelGraph::build(
        "pair", {56, 56, 8}, {{"a", LayerSpec::pointwise(16), {"input"}}, {"b", LayerSpec::pointwise(8), {"a"}}}));
    const auto m = favorable();
    PartitionPlan fused = all_gpu_plan(g);
    fused.decisions = {PartitionDecision::fpga_whole(0), PartitionDecision::fpga_whole(0)};
    PartitionPlan apart = fused;
    apart.decisions[1].fused_group = 1;
    const auto rf = simulate(g, fused, m);
    const auto ra = simulate(g, apart, m);
    CHECK(ra.total_bytes_transferred - rf.total_bytes_transferred == 2 * 50176);
    CHECK(rf.total_bytes_transferred == 56 * 56 * 8 * 2);
    REQUIRE(rf.stages.size() == 1);
    CHECK(rf.stages[0].mode == StageMode::FusedSegment);
    CHECK(rf.stages[0].fpga_latency_s == doctest::Approx((56.0 * 56 + 2 * 50) / 100e6));
}

TEST_CASE("channel split hides FPGA latency behind the GPU") {
    const auto g = infer_shapes(ModelGraph::build("one", {56, 56, 96}, {{"a", LayerSpec::pointwise(16), {"input"}}}));
    DeviceModels m = favorable();
    PartitionPlan p = all_gpu_plan(g);
    p.decisions[0] = PartitionDecision::channel_split(8);
    const auto r = simulate(g, p, m);
    REQUIRE(r.stages.size() == 1);
    const auto& s = r.stages[0];
    CHECK(s.mode == StageMode::ParallelSplit);
    const Cost gpu_part = gpu_cost(LayerSpec::pointwise(16), {56, 56, 88}, m.gpu);
    CHECK(s.gpu_latency_s == gpu_part.latency_s);
    CHECK(s.bytes_transferred == 56 * 56 * 8 + 56 * 56 * 16);
    REQUIRE(s.fpga_latency_s + s.comm_latency_s <= s.gpu_latency_s);
    CHECK(s.stage_latency_s == gpu_part.latency_s);

    const auto exact = simulate(g, p, m, SimOptions{true});
    CHECK(exact.total_bytes_transferred == 56 * 56 * 8 + 4 * 56 * 56 * 16);
}

TEST_CASE("dw split is a sequential offload") {
    const auto g = bottleneck_module();
    const auto m = favorable();
    PartitionPlan p = all_gpu_plan(g);
    p.decisions[1] = p.decisions[2] = PartitionDecision::dw_split();
    const auto r = simulate(g, p, m);
    REQUIRE(r.stages.size() == 3);
    const auto& s = r.stages[1];
    CHECK(s.mode == StageMode::SequentialOffload);
    CHECK(s.layers == std::vector<std::string>{"depthwise", "project"});
    CHECK(s.stage_latency_s == doctest::Approx(s.gpu_latency_s + s.comm_latency_s + s.fpga_latency_s));
    CHECK(s.bytes_transferred == 56 * 56 * 96 + 56 * 56 * 16);
}

TEST_CASE("energy is additive over stages") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        const auto g = testing_support::random_graph(rng);
        DeviceModels m;
        m.gpu = testing_support::random_calibration(rng);
        m.fpga.mac_budget = 1 << 20;
        const auto p = testing_support::random_plan(g, rng);
        const auto r = simulate(g, p, m);
        double e = 0.0;
        double l = 0.0;
        std::int64_t b = 0;
        for (const auto& s : r.stages) {
            e += s.energy_j;
            l += s.stage_latency_s;
            b += s.bytes_transferred;
            CHECK(s.energy_j > 0.0);
        }
        CHECK(r.total_energy_j == e);
        CHECK(r.total_latency_s == l);
        CHECK(r.total_bytes_transferred == b);
    }
}

TEST_CASE("simulate rejects infeasible and uncovered plans") {
    const auto g = infer_shapes(ModelGraph::build("big", {224, 224, 3}, {{"a", LayerSpec::conv(7, 64), {"input"}}}));
    DeviceModels m = favorable();
    PartitionPlan p = all_gpu_plan(g);
    p.decisions[0] = PartitionDecision::fpga_whole(0);
    CHECK_THROWS_AS(simulate(g, p, m), InfeasibleError);

    DeviceModels missing;
    missing.gpu = GpuCalibrationTable::from_rows({{LayerKind::Pointwise, 1, 1, 1, 1, 1, 1e-6, 1.0},
                                                  {LayerKind::Pointwise, 2, 2, 1, 1, 1, 2e-6, 1.0}});
    CHECK_THROWS_AS(baseline_gpu_only(g, missing), CalibrationError);
}

TEST_CASE("gains") {
    const Gains g = compare(Cost{1.0e-3, 72e-3}, Cost{1.26e-3, 100e-3});
    CHECK(g.energy_gain == doctest::Approx(1.389).epsilon(1e-3));
    CHECK(g.speedup == doctest::Approx(1.26));
    CHECK(format_gain(g.energy_gain) == "1.39x");
    CHECK(format_gain(g.speedup) == "1.26x");
    const Gains same = compare(Cost{1.0, 2.0}, Cost{1.0, 2.0});
    CHECK(same.energy_gain == 1.0);
    CHECK(same.speedup == 1.0);
    CHECK_THROWS(compare(Cost{0.0, 1.0}, Cost{1.0, 1.0}));

    const auto m = favorable();
    const auto fire = fire_module();
    const auto b = baseline_gpu_only(fire, m);
    CostReport r = b;
    CHECK_FALSE(r.energy_gain().has_value());
    attach_baseline(r, b);
    CHECK(r.energy_gain() == 1.0);
    CHECK(r.speedup() == 1.0);
}

TEST_CASE("report documents") {
    const auto m = favorable();
    const auto g = bottleneck_module();
    PartitionPlan p = all_gpu_plan(g);
    p.decisions[1] = p.decisions[2] = PartitionDecision::dw_split();
    auto r = simulate(g, p, m);
    attach_baseline(r, baseline_gpu_only(g, m));
    const auto json = report_to_json(r);
    const auto back = report_from_json(json);
    CHECK(report_to_json(back) == json);
    CHECK(json.find("energy_reduction_pct") != std::string::npos);
    CHECK(json.find("latency_reduction_pct") != std::string::npos);
    CHECK(json.find("speedup") != std::string::npos);
    CHECK_THROWS_AS(report_from_json(R"({"format":"something-else","version":1})"), SemanticError);

    const auto csv = report_to_csv(r);
    CHECK(csv.rfind("stage_id,mode,layers,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.stages.size()) + 1);
}
