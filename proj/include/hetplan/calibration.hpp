#pragma once

#include "hetplan/cost_models.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hetplan {

inline constexpr std::string_view kCalibrationHeader = "op_kind,h,w,c_in,k,n,latency_us,power_mw";

// Comma-separated calibration document. Lines starting with '#' are comments;
// the first non-comment line must be kCalibrationHeader. Latency is in
// microseconds and power in milliwatts. Throws SyntaxError for malformed rows
// and CalibrationError for invalid values.
GpuCalibrationTable load_calibration(std::string_view text, std::string_view source = "<calibration>");
GpuCalibrationTable load_calibration_file(const std::filesystem::path& path);
std::string serialize_calibration(const GpuCalibrationTable& table);

struct DeviceConfig {
    FpgaModel fpga;
    LinkModel link;
};

// key = value lines; keys carry their SI unit (fpga.clock_hz,
// link.fixed_latency_s, ...). Missing keys keep their defaults.
DeviceConfig load_device_config(std::string_view text, std::string_view source = "<device-config>");
DeviceConfig load_device_config_file(const std::filesystem::path& path);
std::string serialize_device_config(const DeviceConfig& config);

}  // namespace hetplan
