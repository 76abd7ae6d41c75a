#include "hetplan/calibration.hpp"
#include "hetplan/cost_models.hpp"
#include "hetplan/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace hetplan;

namespace {

GpuCalibrationRow row(LayerKind kind, int side, int c, int k, int n, double latency_s, double power_w) {
    GpuCalibrationRow r;
    r.op_kind = kind;
    r.h = side;
    r.w = side;
    r.c_in = c;
    r.k = k;
    r.n = n;
    r.latency_s = latency_s;
    r.power_w = power_w;
    return r;
}

// Pointwise rows at work 100, 400 and 900 (side^2 with c = n = 1... scaled).
GpuCalibrationTable three_rows() {
    return GpuCalibrationTable::from_rows({row(LayerKind::Pointwise, 10, 1, 1, 1, 10e-6, 1.0),
                                           row(LayerKind::Pointwise, 20, 1, 1, 1, 20e-6, 2.0),
                                           row(LayerKind::Pointwise, 30, 1, 1, 1, 40e-6, 2.0)});
}

}  // namespace

TEST_CASE("fpga resources") {
    const auto r5 = fpga_resources(LayerSpec::conv(5, 64), {224, 224, 3});
    CHECK(r5.macs == 4800);
    CHECK(r5.weight_bytes == 4800);
    CHECK(r5.buffer_bytes == 4 * 224 * 3);
    CHECK(fpga_resources(LayerSpec::conv(7, 64), {224, 224, 3}).macs == 9408);
    const auto pw = fpga_resources(LayerSpec::pointwise(16), {56, 56, 16});
    CHECK(pw.macs == 256);
    CHECK(pw.buffer_bytes == 0);
    CHECK(fpga_resources(LayerSpec::depthwise(3), {8, 8, 4}).macs == 36);
    CHECK(fpga_resources(LayerSpec::conv(3, 8, 1, Padding::Same, 2), {8, 8, 4}).macs == 9 * 2 * 8);
    CHECK(fpga_resources(LayerSpec::concat(), {8, 8, 4}) == FpgaResources{});

    const FpgaModel defaults;
    CHECK(r5.fits(defaults));
    CHECK_FALSE(fpga_resources(LayerSpec::conv(7, 64), {224, 224, 3}).fits(defaults));
}

TEST_CASE("fpga cost") {
    const FpgaModel m;
    const auto big = fpga_cost(LayerSpec::pointwise(4), {224, 224, 3}, m);
    CHECK(big.latency_s == doctest::Approx(502.26e-6).epsilon(1e-12));
    const auto small = fpga_cost(LayerSpec::pointwise(4), {4, 4, 3}, m);
    CHECK(small.latency_s == doctest::Approx(0.66e-6).epsilon(1e-12));
    CHECK(small.energy_j == doctest::Approx(m.static_power_w * 0.66e-6 + m.energy_per_mac_j * 16 * 3 * 4));

    const auto concat = fpga_cost(LayerSpec::concat(), {4, 4, 3}, m);
    CHECK(concat.energy_j == doctest::Approx(m.static_power_w * concat.latency_s));

    // Latency independent of N and k; energy increasing in MACs.
    const auto a = fpga_cost(LayerSpec::conv(3, 4), {16, 16, 3}, m);
    const auto b = fpga_cost(LayerSpec::conv(5, 8), {16, 16, 3}, m);
    CHECK(a.latency_s == b.latency_s);
    CHECK(a.energy_j < b.energy_j);

    CHECK_THROWS_AS(fpga_cost(LayerSpec::conv(7, 64), {224, 224, 3}, m), InfeasibleError);
}

TEST_CASE("link cost") {
    LinkModel paper{2.5e9, 0.0, 1e-10};
    const auto c = link_cost(301056, paper);
    CHECK(std::abs(c.latency_s - 301056 / 2.5e9) <= 1e-9 * c.latency_s);
    CHECK(std::round(c.latency_s * 1e8) / 100.0 == doctest::Approx(120.42));

    LinkModel fixed{2.5e9, 5e-6, 1e-10};
    CHECK(link_cost(0, fixed).latency_s == 5e-6);
    CHECK(link_cost(0, fixed).energy_j == 0.0);
    CHECK(link_cost(2500000000LL, fixed).latency_s == doctest::Approx(1.0 + 5e-6));
    CHECK(link_cost(1000, fixed).energy_j == doctest::Approx(1e-7));
}

TEST_CASE("gpu interpolation") {
    const auto t = three_rows();
    // On a knot.
    const auto on = gpu_cost_at_work(LayerKind::Pointwise, 400, t);
    CHECK(on.latency_s == 20e-6);
    CHECK(on.energy_j == doctest::Approx(2.0 * 20e-6));
    // Midway: arithmetic mean of the latencies.
    CHECK(gpu_cost_at_work(LayerKind::Pointwise, 250, t).latency_s == doctest::Approx(15e-6));
    // Beyond the last row: slope of the last two (20 us per 500 work).
    const auto beyond = gpu_cost_at_work(LayerKind::Pointwise, 1400, t);
    CHECK(beyond.latency_s == doctest::Approx(60e-6));
    CHECK(beyond.energy_j == doctest::Approx(2.0 * 60e-6));
    // Below the table: clamped at the first row's latency.
    CHECK(gpu_cost_at_work(LayerKind::Pointwise, 1, t).latency_s == 10e-6);
    CHECK_THROWS_AS(gpu_cost_at_work(LayerKind::Conv, 100, t), CalibrationError);

    // Layer queries go through MACs.
    CHECK(gpu_cost(LayerSpec::pointwise(1), {20, 20, 1}, t).latency_s == 20e-6);
}

TEST_CASE("gpu latency is monotone for monotone rows") {
    const auto t = three_rows();
    double prev = 0.0;
    for (std::int64_t w = 1; w < 3000; w += 7) {
        const double l = gpu_cost_at_work(LayerKind::Pointwise, w, t).latency_s;
        CHECK(l >= prev);
        prev = l;
    }
}

TEST_CASE("calibration documents") {
    const std::string two = "# synthetic\nop_kind,h,w,c_in,k,n,latency_us,power_mw\n"
                            "pointwise,8,8,4,1,4,12.5,1500\n"
                            "pointwise,4,4,4,1,4,5,1000\n";
    const auto t = load_calibration(two);
    REQUIRE(t.rows().size() == 2);
    CHECK(t.rows()[0].h == 4);  // sorted by work
    CHECK(t.rows()[1].latency_s == doctest::Approx(12.5e-6));
    CHECK(t.rows()[1].power_w == doctest::Approx(1.5));
    const auto back = load_calibration(serialize_calibration(t)).rows();
    REQUIRE(back.size() == t.rows().size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].op_kind == t.rows()[i].op_kind);
        CHECK(back[i].n == t.rows()[i].n);
        CHECK(back[i].latency_s == doctest::Approx(t.rows()[i].latency_s).epsilon(1e-15));
        CHECK(back[i].power_w == doctest::Approx(t.rows()[i].power_w).epsilon(1e-15));
    }

    CHECK_THROWS_AS(load_calibration("op_kind,h,w,c_in,k,n,latency_us,power_mw\npointwise,8,8,4,1,4,0,1500\n"
                                     "pointwise,4,4,4,1,4,5,1000\n"),
                    CalibrationError);
    CHECK_THROWS_AS(load_calibration("op_kind,h,w,c_in,k,n,latency_us,power_mw\npointwise,8,8,4,1,4,3,1500\n"),
                    CalibrationError);
    CHECK_THROWS_AS(load_calibration("op_kind,h,w,c_in,k,n,latency_us\n"), SyntaxError);
    CHECK_THROWS_AS(load_calibration("op_kind,h,w,c_in,k,n,latency_us,power_mw\nwarp,8,8,4,1,4,3,1500\n"),
                    SyntaxError);
    try {
        load_calibration("op_kind,h,w,c_in,k,n,latency_us,power_mw\npointwise,8,x,4,1,4,3,1500\n", "cal.csv");
        FAIL("expected a syntax error");
    } catch (const SyntaxError& e) {
        CHECK(std::string(e.what()).find("cal.csv:2") != std::string::npos);
        CHECK(std::string(e.what()).find("w") != std::string::npos);
    }
    CHECK_THROWS(load_calibration_file("/nonexistent/cal.csv"));
}

TEST_CASE("shipped calibration fixtures cover every kind") {
    for (const char* name : {"fpga_favorable", "gpu_dominant", "crossover"}) {
        const auto t = load_calibration_file(std::string(HETPLAN_DATA_DIR) + "/calibration/" + name + ".csv");
        for (auto kind : {LayerKind::Conv, LayerKind::DepthwiseConv, LayerKind::Pointwise, LayerKind::MaxPool,
                          LayerKind::AvgPool, LayerKind::Concat, LayerKind::Add, LayerKind::ChannelSplit,
                          LayerKind::ChannelShuffle}) {
            CHECK(t.rows_for(kind).size() >= 2);
        }
    }
}

TEST_CASE("device config") {
    const auto dc = load_device_config("# c\nfpga.mac_budget = 1000\nlink.fixed_latency_s = 0\n");
    CHECK(dc.fpga.mac_budget == 1000);
    CHECK(dc.fpga.clock_hz == 100e6);
    CHECK(dc.link.fixed_latency_s == 0.0);
    const auto round = load_device_config(serialize_device_config(dc));
    CHECK(round.fpga.mac_budget == 1000);
    CHECK(round.link.bandwidth_bytes_per_s == dc.link.bandwidth_bytes_per_s);
    CHECK_THROWS_AS(load_device_config("fpga.mac_budget = 0\n"), SemanticError);
    CHECK_THROWS_AS(load_device_config("fpga.warp = 1\n"), SyntaxError);
    CHECK_THROWS_AS(load_device_config("fpga.clock_hz 1\n"), SyntaxError);
    CHECK(load_device_config_file(std::string(HETPLAN_DATA_DIR) + "/device/default.cfg").fpga.mac_budget == 4800);
}
