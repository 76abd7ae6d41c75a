#include "hetplan/cli.hpp"

#include "hetplan/calibration.hpp"
#include "hetplan/errors.hpp"
#include "hetplan/fxp_exec.hpp"
#include "hetplan/model_format.hpp"
#include "hetplan/optimizer.hpp"
#include "hetplan/schedule.hpp"
#include "hetplan/templates.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

namespace hetplan {

namespace {

constexpr std::string_view kBuiltinPrefix = "builtin:";

int parse_int(std::string_view text, const std::string& what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw SyntaxError(what + ": expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

// Collects every output, then writes them only once the command succeeded,
// so failures never leave partial report files behind.
class Outputs {
public:
    explicit Outputs(const std::string& dir) : dir_(dir) {}
    void add(const std::string& name, std::string text) { files_.emplace_back(name, std::move(text)); }
    void commit(std::ostream& out) const {
        if (dir_.empty()) return;
        std::filesystem::create_directories(dir_);
        for (const auto& [name, text] : files_) {
            write_text(dir_ / name, text);
            out << "wrote " << (dir_ / name).string() << '\n';
        }
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string us(double seconds) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << seconds * 1e6;
    return s.str();
}

std::string uj(double joules) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << joules * 1e6;
    return s.str();
}

void print_report(std::ostream& out, const CostReport& r) {
    out << std::left << std::setw(22) << "stage" << std::setw(20) << "mode" << std::right << std::setw(12)
        << "latency_us" << std::setw(12) << "energy_uj" << std::setw(12) << "bytes" << '\n';
    for (const auto& s : r.stages) {
        out << std::left << std::setw(22) << s.stage_id << std::setw(20) << to_string(s.mode) << std::right
            << std::setw(12) << us(s.stage_latency_s) << std::setw(12) << uj(s.energy_j) << std::setw(12)
            << s.bytes_transferred << '\n';
    }
    out << "total latency " << us(r.total_latency_s) << " us, energy " << uj(r.total_energy_j) << " uJ, "
        << r.total_bytes_transferred << " bytes over the link\n";
    if (auto g = r.energy_gain()) out << "energy gain " << format_gain(*g) << '\n';
    if (auto s = r.speedup()) out << "speedup " << format_gain(*s) << '\n';
}

void print_plan(std::ostream& out, const ModelGraph& graph, const PartitionPlan& plan) {
    for (int i = 0; i < graph.size(); ++i) {
        out << "  " << std::left << std::setw(20) << graph.node(i).id << to_string(plan.decisions[static_cast<std::size_t>(i)])
            << '\n';
    }
    out << "fpga usage: " << plan.resource_usage.macs << " MACs, " << plan.resource_usage.memory_bytes()
        << " bytes\n";
}

PartitionPlan load_plan(const RunConfig& config, const ModelGraph& graph) {
    try {
        return parse_plan(graph, read_text(config.plan));
    } catch (const SyntaxError& e) {
        throw SyntaxError(config.plan + ": " + e.what());
    } catch (const SemanticError& e) {
        throw SemanticError(config.plan + ": " + e.what());
    }
}

SimOptions sim_options(const RunConfig& config) { return {config.exact_transfers}; }

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

std::pair<std::string, std::string> split_pair(const std::string& spec) {
    // Windows drive letters are not a concern; the first ':' after a
    // ".json" suffix separates the pair.
    const auto pos = spec.find(".json:");
    if (pos == std::string::npos) return {spec, {}};
    return {spec.substr(0, pos + 5), spec.substr(pos + 6)};
}

CostReport load_report(const std::string& path) {
    try {
        return report_from_json(read_text(path));
    } catch (const SyntaxError& e) {
        throw SyntaxError(path + ": " + e.what());
    } catch (const SemanticError& e) {
        throw SemanticError(path + ": " + e.what());
    }
}

}  // namespace

std::filesystem::path default_calibration_path() {
    return std::filesystem::path(HETPLAN_DATA_DIR) / "calibration" / "fpga_favorable.csv";
}

ModelGraph load_model_source(const std::string& source) {
    if (source.empty()) throw SemanticError("no model given (--model)");
    if (!source.starts_with(kBuiltinPrefix)) return load_model_file(source);
    std::string_view rest = std::string_view(source).substr(kBuiltinPrefix.size());
    const auto colon = rest.find(':');
    const std::string name(rest.substr(0, colon));
    std::map<std::string, int> params;
    if (colon != std::string_view::npos) {
        std::string_view list = rest.substr(colon + 1);
        while (!list.empty()) {
            const auto comma = list.find(',');
            const std::string_view item = list.substr(0, comma);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos || eq == 0) {
                throw SyntaxError("model parameter '" + std::string(item) + "': expected key=value");
            }
            const std::string key(item.substr(0, eq));
            params[key] = parse_int(item.substr(eq + 1), "model parameter '" + key + "'");
            if (comma == std::string_view::npos) break;
            list.remove_prefix(comma + 1);
        }
    }
    return builtin_module(name, params);
}

DeviceModels load_device_models(const RunConfig& config) {
    DeviceModels models;
    if (!config.device_config.empty()) {
        const DeviceConfig dc = load_device_config_file(config.device_config);
        models.fpga = dc.fpga;
        models.link = dc.link;
    }
    const std::filesystem::path cal = config.calibration.empty() ? default_calibration_path()
                                                                 : std::filesystem::path(config.calibration);
    models.gpu = load_calibration_file(cal);
    return models;
}

int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ModelGraph graph = load_model_source(config.model);
        const DeviceModels models = load_device_models(config);
        const Objective objective = Objective::parse(config.objective);

        OptimizeOptions options;
        options.beam_width = config.beam_width;
        options.extra_g = config.g_grid;
        options.sim = sim_options(config);

        CostReport report;
        CostReport baseline = baseline_gpu_only(graph, models, options.sim);
        baseline.objective = objective.to_string();
        PartitionPlan plan;
        if (!config.plan.empty()) {
            plan = load_plan(config, graph);
            plan.objective = objective;
            report = simulate(graph, plan, models, options.sim);
            attach_baseline(report, baseline);
            out << "plan " << graph.name() << " (from " << config.plan << ")\n";
        } else {
            OptimizeResult r = optimize_detailed(graph, models, objective, options);
            plan = std::move(r.plan);
            report = std::move(r.report);
            out << "plan " << graph.name() << ": " << r.decision_points << " decision points, "
                << (r.exhaustive ? "exhaustive" : "beam") << " search, " << r.plans_evaluated
                << " plans evaluated\n";
        }
        report.objective = objective.to_string();
        out << "objective " << objective.to_string() << '\n';
        print_plan(out, graph, plan);
        print_report(out, report);

        Outputs files(config.out_dir);
        files.add("plan.json", serialize_plan(graph, plan));
        files.add("report.json", report_to_json(report));
        files.add("baseline.json", report_to_json(baseline));
        files.add("stages.csv", report_to_csv(report));
        files.commit(out);
        return 0;
    });
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ModelGraph graph = load_model_source(config.model);
        const DeviceModels models = load_device_models(config);
        const Objective objective = Objective::parse(config.objective);
        const SimOptions options = sim_options(config);

        PartitionPlan plan = config.plan.empty() ? all_gpu_plan(graph, objective) : load_plan(config, graph);
        plan.objective = objective;
        CostReport baseline = baseline_gpu_only(graph, models, options);
        baseline.objective = objective.to_string();
        CostReport report = simulate(graph, plan, models, options);
        report.objective = objective.to_string();
        attach_baseline(report, baseline);

        out << "simulate " << graph.name() << (config.plan.empty() ? " (all GPU)" : " with " + config.plan) << '\n';
        print_report(out, report);

        Outputs files(config.out_dir);
        files.add("report.json", report_to_json(report));
        files.add("baseline.json", report_to_json(baseline));
        files.add("stages.csv", report_to_csv(report));
        files.commit(out);
        return 0;
    });
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ModelGraph graph = load_model_source(config.model);
        PartitionPlan plan;
        if (!config.plan.empty()) {
            plan = load_plan(config, graph);
            validate_plan(graph, plan, FpgaModel{});
        } else {
            OptimizeOptions options;
            options.beam_width = config.beam_width;
            options.extra_g = config.g_grid;
            options.sim = sim_options(config);
            plan = optimize(graph, load_device_models(config), Objective::parse(config.objective), options);
        }
        if (config.verify_count < 1) throw SemanticError("verify count must be positive");

        out << "verify " << graph.name() << ", " << config.verify_count << " runs, seed " << config.seed << '\n';
        for (int run = 0; run < config.verify_count; ++run) {
            const std::uint64_t base = config.seed + 2 * static_cast<std::uint64_t>(run);
            const WeightStore weights = random_weights(graph, base);
            const FxpTensor input = random_tensor(graph.input_shape(), base + 1);
            const auto expected = execute_graph_trace(graph, input, weights);
            const auto actual = execute_plan_trace(graph, plan, input, weights);
            for (int i = 0; i < graph.size(); ++i) {
                const auto& a = expected[static_cast<std::size_t>(i)].values;
                const auto& b = actual[static_cast<std::size_t>(i)].values;
                const auto [ea, eb] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
                if (ea != a.end() || eb != b.end()) {
                    const auto element = std::distance(a.begin(), ea);
                    out << "FAIL run " << run << ": layer '" << graph.node(i).id << "' element " << element << '\n';
                    err << "mismatch at layer '" << graph.node(i).id << "' element " << element << '\n';
                    return 1;
                }
            }
        }
        out << "PASS " << config.verify_count << "/" << config.verify_count << " bit-exact\n";
        return 0;
    });
}

int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.reports.empty()) throw SemanticError("no reports given");
        std::vector<GainRow> rows;
        for (const auto& spec : config.reports) {
            const auto [report_path, baseline_path] = split_pair(spec);
            const CostReport report = load_report(report_path);
            Cost baseline;
            if (!baseline_path.empty()) {
                const CostReport b = load_report(baseline_path);
                if (b.workload != report.workload) {
                    throw SemanticError(baseline_path + ": workload '" + b.workload + "' does not match '" +
                                        report.workload + "' in " + report_path);
                }
                baseline = b.totals();
            } else if (report.baseline) {
                baseline = *report.baseline;
            } else {
                throw SemanticError(report_path + ": no baseline embedded and none given");
            }
            const Gains g = compare(report.totals(), baseline);
            rows.push_back({report.workload, g.energy_gain, g.speedup});
        }
        out << gain_table_text(rows);
        Outputs files(config.out_dir);
        files.add("gains.csv", gain_table_csv(rows));
        files.add("gains.txt", gain_table_text(rows));
        files.commit(out);
        return 0;
    });
}

std::string gain_table_csv(const std::vector<GainRow>& rows) {
    std::ostringstream s;
    s << "workload,energy_gain,speedup\n";
    for (const auto& r : rows) s << r.workload << ',' << format_gain(r.energy_gain) << ',' << format_gain(r.speedup) << '\n';
    return s.str();
}

std::string gain_table_text(const std::vector<GainRow>& rows) {
    std::size_t width = 8;
    for (const auto& r : rows) width = std::max(width, r.workload.size());
    std::ostringstream s;
    s << std::left << std::setw(static_cast<int>(width) + 2) << "workload" << std::setw(14) << "energy gain"
      << "speedup\n";
    for (const auto& r : rows) {
        s << std::left << std::setw(static_cast<int>(width) + 2) << r.workload << std::setw(14)
          << format_gain(r.energy_gain) << format_gain(r.speedup) << '\n';
    }
    return s.str();
}

}  // namespace hetplan
