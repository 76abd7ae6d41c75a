#include "hetplan/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace hetplan {

namespace {

struct Candidate {
    PartitionDecision decision;
    FpgaResources resources;
    double bound = 0.0;     // lower bound on this node's objective contribution
    double estimate = 0.0;  // standalone contribution, used to rank beams
};

struct Scored {
    PartitionPlan plan;
    CostReport report;
    double objective = 0.0;
    std::size_t fpga_nodes = 0;
};

bool preferred(const Scored& a, const Scored& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.report.total_energy_j != b.report.total_energy_j) return a.report.total_energy_j < b.report.total_energy_j;
    if (a.report.total_latency_s != b.report.total_latency_s) return a.report.total_latency_s < b.report.total_latency_s;
    if (a.fpga_nodes != b.fpga_nodes) return a.fpga_nodes < b.fpga_nodes;
    return compare_decision_vectors(a.plan.decisions, b.plan.decisions) < 0;
}

class Search {
public:
    Search(const ModelGraph& graph, const DeviceModels& models, const Objective& objective,
           const OptimizeOptions& options, const Cost& baseline)
        : graph_(graph), models_(models), objective_(objective), options_(options), baseline_(baseline) {
        const int n = graph.size();
        candidates_.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (const auto& d : enumerate_candidates(graph, i, models.fpga, options.extra_g)) {
                candidates_[static_cast<std::size_t>(i)].push_back(make_candidate(i, d));
            }
            if (candidates_[static_cast<std::size_t>(i)].size() > 1) ++decision_points_;
        }
        suffix_bound_.assign(static_cast<std::size_t>(n) + 1, 0.0);
        suffix_estimate_.assign(static_cast<std::size_t>(n) + 1, 0.0);
        for (int i = n - 1; i >= 0; --i) {
            double b = INFINITY;
            double e = INFINITY;
            for (const auto& c : candidates_[static_cast<std::size_t>(i)]) {
                b = std::min(b, c.bound);
                e = std::min(e, c.estimate);
            }
            suffix_bound_[static_cast<std::size_t>(i)] = suffix_bound_[static_cast<std::size_t>(i) + 1] + b;
            suffix_estimate_[static_cast<std::size_t>(i)] = suffix_estimate_[static_cast<std::size_t>(i) + 1] + e;
        }
    }

    [[nodiscard]] std::size_t decision_points() const { return decision_points_; }
    [[nodiscard]] std::size_t evaluated() const { return evaluated_; }

    Scored run_exhaustive() {
        consider(std::vector<PartitionDecision>(static_cast<std::size_t>(graph_.size())));
        std::vector<PartitionDecision> decisions(static_cast<std::size_t>(graph_.size()));
        dfs(0, decisions, {}, 0.0);
        return *best_;
    }

    Scored run_beam() {
        consider(std::vector<PartitionDecision>(static_cast<std::size_t>(graph_.size())));
        struct State {
            std::vector<PartitionDecision> decisions;
            FpgaResources resources;
            double estimate = 0.0;
        };
        std::vector<State> beam{State{}};
        const auto width = static_cast<std::size_t>(std::max(1, options_.beam_width));
        for (int i = 0; i < graph_.size(); ++i) {
            std::vector<State> next;
            for (const auto& s : beam) {
                for (const auto& c : candidates_[static_cast<std::size_t>(i)]) {
                    if (!allowed(i, c, s.decisions, s.resources)) continue;
                    State t = s;
                    t.decisions.push_back(c.decision);
                    t.resources += c.resources;
                    t.estimate += c.estimate;
                    next.push_back(std::move(t));
                }
            }
            std::stable_sort(next.begin(), next.end(), [](const State& a, const State& b) {
                if (a.estimate != b.estimate) return a.estimate < b.estimate;
                return compare_decision_vectors(a.decisions, b.decisions) < 0;
            });
            if (next.size() > width) next.resize(width);
            beam = std::move(next);
        }
        for (const auto& s : beam) consider(s.decisions);
        return *best_;
    }

private:
    Candidate make_candidate(int index, const PartitionDecision& d) {
        Candidate c;
        c.decision = d;
        c.resources = decision_resources(graph_, index, d);
        const bool pointwise_member = d.kind == DecisionKind::DwSplit && dw_split_owner(graph_, index).has_value();
        if (pointwise_member) return c;  // costed on the depthwise member
        const StageCost standalone = node_stage_cost(graph_, index, d, models_, options_.sim);
        c.estimate = objective_.value({standalone.stage_latency_s, standalone.energy_j}, baseline_);
        if (d.kind == DecisionKind::FpgaWhole) {
            // Inside a fused segment a layer adds at least its pipeline depth
            // and its MAC energy; transfers and fill may be shared.
            const auto& node = graph_.node(index);
            const Cost marginal = fpga_pipeline_cost(0, 1, mac_count(node.spec, graph_.input_shape_of(index)), models_.fpga);
            c.bound = objective_.value(marginal, baseline_);
        } else {
            c.bound = c.estimate;
        }
        return c;
    }

    bool allowed(int index, const Candidate& c, const std::vector<PartitionDecision>& decisions,
                 const FpgaResources& resources) const {
        if (auto owner = dw_split_owner(graph_, index)) {
            const auto& od = decisions[static_cast<std::size_t>(*owner)];
            if (od.kind == DecisionKind::DwSplit) {
                if (c.decision.kind != DecisionKind::DwSplit) return false;
            } else {
                if (c.decision.kind == DecisionKind::DwSplit) return false;
                if (c.decision.kind == DecisionKind::FpgaWhole &&
                    (od.kind != DecisionKind::FpgaWhole || *owner != index - 1)) {
                    return false;
                }
            }
        }
        return (resources + c.resources).fits(models_.fpga);
    }

    void dfs(int index, std::vector<PartitionDecision>& decisions, const FpgaResources& resources, double bound) {
        if (index == graph_.size()) {
            consider(decisions);
            return;
        }
        for (const auto& c : candidates_[static_cast<std::size_t>(index)]) {
            if (!allowed(index, c, decisions, resources)) continue;
            const double b = bound + c.bound;
            if (prunable(b + suffix_bound_[static_cast<std::size_t>(index) + 1])) continue;
            decisions[static_cast<std::size_t>(index)] = c.decision;
            dfs(index + 1, decisions, resources + c.resources, b);
        }
        decisions[static_cast<std::size_t>(index)] = PartitionDecision::gpu_only();
    }

    [[nodiscard]] bool prunable(double lower_bound) const {
        if (!best_) return false;
        const double slack = 1e-9 * std::abs(best_->objective);
        return lower_bound > best_->objective + slack;
    }

    void consider(std::vector<PartitionDecision> decisions) {
        fuse_maximal_chains(graph_, decisions);
        Scored s;
        s.plan.decisions = std::move(decisions);
        s.plan.objective = objective_;
        for (int i = 0; i < graph_.size(); ++i) {
            s.plan.resource_usage += decision_resources(graph_, i, s.plan.decisions[static_cast<std::size_t>(i)]);
        }
        s.report = simulate(graph_, s.plan, models_, options_.sim);
        s.objective = objective_.value(s.report.totals(), baseline_);
        s.fpga_nodes = s.plan.fpga_mapped_nodes(graph_);
        ++evaluated_;
        if (!best_ || preferred(s, *best_)) best_ = std::move(s);
    }

    const ModelGraph& graph_;
    const DeviceModels& models_;
    const Objective& objective_;
    const OptimizeOptions& options_;
    Cost baseline_;
    std::vector<std::vector<Candidate>> candidates_;
    std::vector<double> suffix_bound_;
    std::vector<double> suffix_estimate_;
    std::size_t decision_points_ = 0;
    std::size_t evaluated_ = 0;
    std::optional<Scored> best_;
};

}  // namespace

OptimizeResult optimize_detailed(const ModelGraph& graph, const DeviceModels& models, const Objective& objective,
                                 const OptimizeOptions& options) {
    OptimizeResult result;
    result.baseline = baseline_gpu_only(graph, models, options.sim);
    result.baseline.objective = objective.to_string();

    Search search(graph, models, objective, options, result.baseline.totals());
    result.decision_points = search.decision_points();
    result.exhaustive = static_cast<int>(search.decision_points()) <= options.exhaustive_limit;
    Scored best = result.exhaustive ? search.run_exhaustive() : search.run_beam();

    result.plan = std::move(best.plan);
    result.report = std::move(best.report);
    result.objective_value = best.objective;
    result.plans_evaluated = search.evaluated();
    attach_baseline(result.report, result.baseline);
    return result;
}

PartitionPlan optimize(const ModelGraph& graph, const DeviceModels& models, const Objective& objective,
                       const OptimizeOptions& options) {
    return optimize_detailed(graph, models, objective, options).plan;
}

}  // namespace hetplan
