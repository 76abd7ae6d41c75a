#include "hetplan/cost_models.hpp"

#include "hetplan/errors.hpp"

#include <algorithm>
#include <tuple>

namespace hetplan {

namespace {

template <typename T>
void require_positive(T value, const char* key) {
    if (!(value > T{0})) throw SemanticError(std::string(key) + " must be strictly positive");
}

}  // namespace

void FpgaModel::validate() const {
    require_positive(mac_budget, "fpga.mac_budget");
    require_positive(memory_budget_bytes, "fpga.memory_budget_bytes");
    require_positive(clock_hz, "fpga.clock_hz");
    require_positive(energy_per_mac_j, "fpga.energy_per_mac_j");
    require_positive(static_power_w, "fpga.static_power_w");
    require_positive(pipeline_depth_per_layer, "fpga.pipeline_depth_cycles");
}

void LinkModel::validate() const {
    require_positive(bandwidth_bytes_per_s, "link.bandwidth_bytes_per_s");
    if (!(fixed_latency_s >= 0.0)) throw SemanticError("link.fixed_latency_s must be nonnegative");
    if (!(energy_per_byte_j >= 0.0)) throw SemanticError("link.energy_per_byte_j must be nonnegative");
}

FpgaResources fpga_resources(const LayerSpec& spec, const TensorShape& in) {
    if (!spec.is_parametric()) return {};
    FpgaResources r;
    switch (spec.kind) {
    case LayerKind::Conv:
        r.macs = std::int64_t{spec.kernel_h} * spec.kernel_w * (in.c / spec.groups) * spec.filters;
        break;
    case LayerKind::DepthwiseConv:
        r.macs = std::int64_t{spec.kernel_h} * spec.kernel_w * in.c;
        break;
    case LayerKind::Pointwise:
        r.macs = std::int64_t{in.c} * spec.filters;
        break;
    default:
        break;
    }
    r.weight_bytes = weight_bytes(spec, in);
    r.buffer_bytes = std::int64_t{spec.kernel_h - 1} * in.w * in.c;
    return r;
}

Cost fpga_pipeline_cost(std::int64_t input_pixels, std::int64_t stages, std::int64_t macs, const FpgaModel& model) {
    const double cycles = static_cast<double>(input_pixels + stages * model.pipeline_depth_per_layer);
    const double latency = cycles / model.clock_hz;
    return {latency, model.static_power_w * latency + model.energy_per_mac_j * static_cast<double>(macs)};
}

Cost fpga_cost(const LayerSpec& spec, const TensorShape& in, const FpgaModel& model) {
    const FpgaResources r = fpga_resources(spec, in);
    if (!r.fits(model)) {
        throw InfeasibleError(std::string(to_string(spec.kind)) + " layer needs " + std::to_string(r.macs) +
                              " multipliers and " + std::to_string(r.memory_bytes()) +
                              " bytes; budget is " + std::to_string(model.mac_budget) + " multipliers and " +
                              std::to_string(model.memory_budget_bytes) + " bytes");
    }
    return fpga_pipeline_cost(in.pixels(), 1, mac_count(spec, in), model);
}

Cost link_cost(std::int64_t bytes, const LinkModel& model) {
    const double b = static_cast<double>(bytes);
    return {model.fixed_latency_s + b / model.bandwidth_bytes_per_s, model.energy_per_byte_j * b};
}

std::int64_t GpuCalibrationRow::work() const {
    const std::int64_t pixels = std::int64_t{h} * w;
    switch (op_kind) {
    case LayerKind::Conv:
        return pixels * k * k * c_in * n;
    case LayerKind::DepthwiseConv:
        return pixels * k * k * c_in;
    case LayerKind::Pointwise:
        return pixels * c_in * n;
    default:
        return pixels * c_in;
    }
}

GpuCalibrationTable GpuCalibrationTable::from_rows(std::vector<GpuCalibrationRow> rows) {
    for (const auto& r : rows) {
        if (!(r.latency_s > 0.0)) {
            throw CalibrationError("row " + std::string(to_string(r.op_kind)) + " has nonpositive latency");
        }
        if (!(r.power_w > 0.0)) {
            throw CalibrationError("row " + std::string(to_string(r.op_kind)) + " has nonpositive power");
        }
        if (r.h < 1 || r.w < 1 || r.c_in < 1 || r.k < 1 || r.n < 1) {
            throw CalibrationError("row " + std::string(to_string(r.op_kind)) + " has nonpositive dimensions");
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::make_tuple(static_cast<int>(a.op_kind), a.work()) <
               std::make_tuple(static_cast<int>(b.op_kind), b.work());
    });
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].op_kind == rows[i].op_kind) {
            if (j > i && rows[j].work() == rows[j - 1].work()) {
                throw CalibrationError("duplicate " + std::string(to_string(rows[i].op_kind)) + " rows at work " +
                                       std::to_string(rows[j].work()));
            }
            ++j;
        }
        if (j - i < 2) {
            throw CalibrationError("op kind " + std::string(to_string(rows[i].op_kind)) +
                                   " needs at least 2 rows for interpolation");
        }
        i = j;
    }
    GpuCalibrationTable t;
    t.rows_ = std::move(rows);
    return t;
}

std::span<const GpuCalibrationRow> GpuCalibrationTable::rows_for(LayerKind kind) const {
    auto lo = std::find_if(rows_.begin(), rows_.end(), [&](const auto& r) { return r.op_kind == kind; });
    auto hi = std::find_if(lo, rows_.end(), [&](const auto& r) { return r.op_kind != kind; });
    return {lo, hi};
}

std::int64_t gpu_work(const LayerSpec& spec, const TensorShape& in) {
    if (spec.is_parametric()) return mac_count(spec, in);
    return in.byte_size();
}

Cost gpu_cost_at_work(LayerKind kind, std::int64_t work, const GpuCalibrationTable& table) {
    const auto rows = table.rows_for(kind);
    if (rows.size() < 2) {
        throw CalibrationError("calibration has no rows for op kind '" + std::string(to_string(kind)) + "'");
    }
    const double x = static_cast<double>(work);
    auto lerp = [x](const GpuCalibrationRow& a, const GpuCalibrationRow& b, double ya, double yb) {
        const double xa = static_cast<double>(a.work());
        const double xb = static_cast<double>(b.work());
        return ya + (yb - ya) * (x - xa) / (xb - xa);
    };

    double latency = 0.0;
    double power = 0.0;
    if (work < rows.front().work() || work > rows.back().work()) {
        const bool below = work < rows.front().work();
        const auto& a = below ? rows[0] : rows[rows.size() - 2];
        const auto& b = below ? rows[1] : rows[rows.size() - 1];
        latency = std::max(lerp(a, b, a.latency_s, b.latency_s), rows.front().latency_s);
        power = below ? rows.front().power_w : rows.back().power_w;
    } else {
        // First row with work >= query.
        auto it = std::lower_bound(rows.begin(), rows.end(), work,
                                   [](const GpuCalibrationRow& r, std::int64_t v) { return r.work() < v; });
        if (it->work() == work) {
            latency = it->latency_s;
            power = it->power_w;
        } else {
            const auto& b = *it;
            const auto& a = *(it - 1);
            latency = lerp(a, b, a.latency_s, b.latency_s);
            power = lerp(a, b, a.power_w, b.power_w);
        }
    }
    return {latency, power * latency};
}

Cost gpu_cost(const LayerSpec& spec, const TensorShape& in, const GpuCalibrationTable& table) {
    return gpu_cost_at_work(spec.kind, gpu_work(spec, in), table);
}

}  // namespace hetplan
