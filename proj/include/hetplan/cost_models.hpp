#pragma once

#include "hetplan/model_ir.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hetplan {

struct Cost {
    double latency_s = 0.0;
    double energy_j = 0.0;
};

// Direct-hardware-mapped FPGA: every kernel tap of every mapped layer is a
// dedicated multiplier and all weights stay on chip, so everything mapped
// must fit at once. Streams one input pixel per clock.
struct FpgaModel {
    std::int64_t mac_budget = 4800;  // 64 filters of 5x5 over 3 channels
    std::int64_t memory_budget_bytes = 2 * 1024 * 1024;
    double clock_hz = 100e6;
    double energy_per_mac_j = 5e-12;
    double static_power_w = 0.6;
    std::int64_t pipeline_depth_per_layer = 50;  // cycles

    void validate() const;  // all fields strictly positive; throws SemanticError
};

struct LinkModel {
    double bandwidth_bytes_per_s = 2.5e9;
    double fixed_latency_s = 5e-6;
    double energy_per_byte_j = 1e-10;

    void validate() const;
};

struct FpgaResources {
    std::int64_t macs = 0;  // physical multipliers
    std::int64_t weight_bytes = 0;
    std::int64_t buffer_bytes = 0;  // line buffers

    [[nodiscard]] std::int64_t memory_bytes() const { return weight_bytes + buffer_bytes; }
    [[nodiscard]] bool fits(const FpgaModel& model) const {
        return macs <= model.mac_budget && memory_bytes() <= model.memory_budget_bytes;
    }

    FpgaResources& operator+=(const FpgaResources& o) {
        macs += o.macs;
        weight_bytes += o.weight_bytes;
        buffer_bytes += o.buffer_bytes;
        return *this;
    }
    friend FpgaResources operator+(FpgaResources a, const FpgaResources& b) { return a += b; }
    friend bool operator==(const FpgaResources&, const FpgaResources&) = default;
};

// Multipliers k_h*k_w*(C_I/groups)*N, weights per weight_bytes(), line
// buffers (k_h-1)*W_I*C_I. Non-parametric layers cost nothing.
FpgaResources fpga_resources(const LayerSpec& spec, const TensorShape& in);

// Streaming pipeline over `stages` mapped layers fed `input_pixels` pixels:
// latency (pixels + stages*depth)/clock; energy static*latency + e_mac*macs.
Cost fpga_pipeline_cost(std::int64_t input_pixels, std::int64_t stages, std::int64_t macs, const FpgaModel& model);

// Single layer on the FPGA. Throws InfeasibleError when the layer alone
// exceeds the budget.
Cost fpga_cost(const LayerSpec& spec, const TensorShape& in, const FpgaModel& model);

Cost link_cost(std::int64_t bytes, const LinkModel& model);

struct GpuCalibrationRow {
    LayerKind op_kind = LayerKind::Conv;
    int h = 1;
    int w = 1;
    int c_in = 1;
    int k = 1;
    int n = 1;
    double latency_s = 0.0;
    double power_w = 0.0;

    // Interpolation key: MACs of a stride-1 same-padded layer for parametric
    // kinds, input elements h*w*c_in for everything else.
    [[nodiscard]] std::int64_t work() const;

    friend bool operator==(const GpuCalibrationRow&, const GpuCalibrationRow&) = default;
};

// Measurement-shaped GPU latency/power table, interpolated piecewise-linearly
// in work within each op kind.
class GpuCalibrationTable {
public:
    GpuCalibrationTable() = default;

    // Validates (positive latency/power, >= 2 rows per present kind, distinct
    // work per kind) and sorts by (op_kind, work). Throws CalibrationError.
    static GpuCalibrationTable from_rows(std::vector<GpuCalibrationRow> rows);

    [[nodiscard]] const std::vector<GpuCalibrationRow>& rows() const { return rows_; }
    [[nodiscard]] std::span<const GpuCalibrationRow> rows_for(LayerKind kind) const;
    [[nodiscard]] bool has(LayerKind kind) const { return !rows_for(kind).empty(); }

private:
    std::vector<GpuCalibrationRow> rows_;
};

// Work measure of a query, matching GpuCalibrationRow::work(). For
// multi-input layers pass the output shape (elements read in total).
std::int64_t gpu_work(const LayerSpec& spec, const TensorShape& in);

// Piecewise-linear in work between bracketing rows; linear extrapolation
// beyond either end with latency clamped below at the smallest row's
// latency and power held at the boundary row. Throws CalibrationError when
// the op kind is absent.
Cost gpu_cost(const LayerSpec& spec, const TensorShape& in, const GpuCalibrationTable& table);
Cost gpu_cost_at_work(LayerKind kind, std::int64_t work, const GpuCalibrationTable& table);

struct DeviceModels {
    FpgaModel fpga;
    GpuCalibrationTable gpu;
    LinkModel link;
};

}  // namespace hetplan
