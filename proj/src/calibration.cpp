#include "hetplan/calibration.hpp"

#include "hetplan/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace hetplan {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc{} && ptr == end && !text.empty();
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + std::string(what) + " '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

GpuCalibrationTable load_calibration(std::string_view text, std::string_view source) {
    const std::string src(source);
    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    bool header_seen = false;
    std::vector<GpuCalibrationRow> rows;

    while (std::getline(stream, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = src + ":" + std::to_string(line_no) + ": ";
        if (!header_seen) {
            std::string compact;
            for (char ch : line) {
                if (ch != ' ' && ch != '\t') compact.push_back(ch);
            }
            if (compact != kCalibrationHeader) {
                throw SyntaxError(where + "expected header '" + std::string(kCalibrationHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_commas(line);
        if (fields.size() != 8) {
            throw SyntaxError(where + "expected 8 fields, got " + std::to_string(fields.size()));
        }
        GpuCalibrationRow row;
        const auto kind = layer_kind_from_string(fields[0]);
        if (!kind) throw SyntaxError(where + "field op_kind: unknown kind '" + fields[0] + "'");
        row.op_kind = *kind;
        const char* names[] = {"h", "w", "c_in", "k", "n"};
        int* targets[] = {&row.h, &row.w, &row.c_in, &row.k, &row.n};
        for (int i = 0; i < 5; ++i) {
            if (!parse_number(fields[static_cast<std::size_t>(i + 1)], *targets[i])) {
                throw SyntaxError(where + "field " + names[i] + ": expected integer, got '" +
                                  fields[static_cast<std::size_t>(i + 1)] + "'");
            }
        }
        double latency_us = 0.0;
        double power_mw = 0.0;
        if (!parse_number(fields[6], latency_us)) throw SyntaxError(where + "field latency_us: expected number");
        if (!parse_number(fields[7], power_mw)) throw SyntaxError(where + "field power_mw: expected number");
        if (!(latency_us > 0.0)) throw CalibrationError(where + "field latency_us must be positive");
        if (!(power_mw > 0.0)) throw CalibrationError(where + "field power_mw must be positive");
        row.latency_s = latency_us * 1e-6;
        row.power_w = power_mw * 1e-3;
        rows.push_back(row);
    }
    if (!header_seen) throw SyntaxError(src + ": missing header '" + std::string(kCalibrationHeader) + "'");
    try {
        return GpuCalibrationTable::from_rows(std::move(rows));
    } catch (const CalibrationError& e) {
        throw CalibrationError(src + ": " + e.what());
    }
}

GpuCalibrationTable load_calibration_file(const std::filesystem::path& path) {
    return load_calibration(read_file(path, "calibration file"), path.string());
}

std::string serialize_calibration(const GpuCalibrationTable& table) {
    std::ostringstream out;
    out << kCalibrationHeader << "\n";
    for (const auto& r : table.rows()) {
        out << to_string(r.op_kind) << "," << r.h << "," << r.w << "," << r.c_in << "," << r.k << "," << r.n << ","
            << format_double(r.latency_s * 1e6) << "," << format_double(r.power_w * 1e3) << "\n";
    }
    return out.str();
}

DeviceConfig load_device_config(std::string_view text, std::string_view source) {
    DeviceConfig cfg;
    const std::string src(source);

    using Setter = std::function<bool(const std::string&)>;
    auto real = [](double& field) -> Setter {
        return [&field](const std::string& v) { return parse_number(v, field); };
    };
    auto integer = [](std::int64_t& field) -> Setter {
        return [&field](const std::string& v) { return parse_number(v, field); };
    };
    const std::map<std::string, Setter> setters{
        {"fpga.mac_budget", integer(cfg.fpga.mac_budget)},
        {"fpga.memory_budget_bytes", integer(cfg.fpga.memory_budget_bytes)},
        {"fpga.clock_hz", real(cfg.fpga.clock_hz)},
        {"fpga.energy_per_mac_j", real(cfg.fpga.energy_per_mac_j)},
        {"fpga.static_power_w", real(cfg.fpga.static_power_w)},
        {"fpga.pipeline_depth_cycles", integer(cfg.fpga.pipeline_depth_per_layer)},
        {"link.bandwidth_bytes_per_s", real(cfg.link.bandwidth_bytes_per_s)},
        {"link.fixed_latency_s", real(cfg.link.fixed_latency_s)},
        {"link.energy_per_byte_j", real(cfg.link.energy_per_byte_j)},
    };

    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::string where = src + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw SyntaxError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) throw SyntaxError(where + "unknown key '" + key + "'");
        if (!it->second(value)) throw SyntaxError(where + "key " + key + ": cannot parse '" + value + "'");
    }
    try {
        cfg.fpga.validate();
        cfg.link.validate();
    } catch (const SemanticError& e) {
        throw SemanticError(src + ": " + e.what());
    }
    return cfg;
}

DeviceConfig load_device_config_file(const std::filesystem::path& path) {
    return load_device_config(read_file(path, "device config"), path.string());
}

std::string serialize_device_config(const DeviceConfig& c) {
    std::ostringstream out;
    out << "fpga.mac_budget = " << c.fpga.mac_budget << "\n"
        << "fpga.memory_budget_bytes = " << c.fpga.memory_budget_bytes << "\n"
        << "fpga.clock_hz = " << format_double(c.fpga.clock_hz) << "\n"
        << "fpga.energy_per_mac_j = " << format_double(c.fpga.energy_per_mac_j) << "\n"
        << "fpga.static_power_w = " << format_double(c.fpga.static_power_w) << "\n"
        << "fpga.pipeline_depth_cycles = " << c.fpga.pipeline_depth_per_layer << "\n"
        << "link.bandwidth_bytes_per_s = " << format_double(c.link.bandwidth_bytes_per_s) << "\n"
        << "link.fixed_latency_s = " << format_double(c.link.fixed_latency_s) << "\n"
        << "link.energy_per_byte_j = " << format_double(c.link.energy_per_byte_j) << "\n";
    return out.str();
}

}  // namespace hetplan
