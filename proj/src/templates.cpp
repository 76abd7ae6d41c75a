#include "hetplan/templates.hpp"

#include "hetplan/errors.hpp"

#include <set>

namespace hetplan {

namespace {

void require_positive(int value, const char* what) {
    if (value < 1) throw SemanticError(std::string(what) + " must be positive, got " + std::to_string(value));
}

void require_stride(int stride) {
    if (stride != 1 && stride != 2) throw SemanticError("stride must be 1 or 2, got " + std::to_string(stride));
}

TensorShape input_from(const std::map<std::string, int>& params, TensorShape shape) {
    if (auto it = params.find("h"); it != params.end()) shape.h = it->second;
    if (auto it = params.find("w"); it != params.end()) shape.w = it->second;
    if (auto it = params.find("c"); it != params.end()) shape.c = it->second;
    return shape;
}

int value_or(const std::map<std::string, int>& params, const std::string& key, int fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, int>& params, std::set<std::string> allowed) {
    allowed.insert({"h", "w", "c"});
    for (const auto& [key, value] : params) {
        if (allowed.count(key) == 0) throw SemanticError("unknown template parameter '" + key + "'");
    }
}

}  // namespace

ModelGraph fire_module(const FireParams& p) {
    require_positive(p.squeeze, "squeeze channels");
    require_positive(p.expand1x1, "expand 1x1 channels");
    require_positive(p.expand3x3, "expand 3x3 channels");
    return infer_shapes(ModelGraph::build(
        "fire", p.input,
        {
            {"squeeze", LayerSpec::pointwise(p.squeeze), {"input"}},
            {"expand1x1", LayerSpec::pointwise(p.expand1x1), {"squeeze"}},
            {"expand3x3", LayerSpec::conv(3, p.expand3x3), {"squeeze"}},
            {"concat", LayerSpec::concat(), {"expand1x1", "expand3x3"}},
        }));
}

ModelGraph bottleneck_module(const BottleneckParams& p) {
    require_positive(p.expansion, "expansion");
    require_positive(p.out_channels, "output channels");
    require_stride(p.stride);
    std::vector<NodeDraft> nodes;
    std::string dw_input = "input";
    if (p.expansion > 1) {
        nodes.push_back({"expand", LayerSpec::pointwise(p.input.c * p.expansion), {"input"}});
        dw_input = "expand";
    }
    nodes.push_back({"depthwise", LayerSpec::depthwise(3, p.stride), {dw_input}});
    nodes.push_back({"project", LayerSpec::pointwise(p.out_channels), {"depthwise"}});
    if (p.stride == 1 && p.input.c == p.out_channels) {
        nodes.push_back({"residual", LayerSpec::add(), {"input", "project"}});
    }
    return infer_shapes(ModelGraph::build("bottleneck", p.input, nodes));
}

ModelGraph shufflenet_unit(const ShuffleUnitParams& p) {
    if (p.input.c < 2 || p.input.c % 2 != 0) {
        throw SemanticError("shufflenet unit needs an even channel count, got " + std::to_string(p.input.c));
    }
    const int half = p.input.c / 2;
    return infer_shapes(ModelGraph::build(
        "shufflenet_unit", p.input,
        {
            {"split_left", LayerSpec::channel_split(0, half), {"input"}},
            {"split_right", LayerSpec::channel_split(half, half), {"input"}},
            {"branch_pw1", LayerSpec::pointwise(half), {"split_right"}},
            {"branch_dw", LayerSpec::depthwise(3), {"branch_pw1"}},
            {"branch_pw2", LayerSpec::pointwise(half), {"branch_dw"}},
            {"concat", LayerSpec::concat(), {"split_left", "branch_pw2"}},
            {"shuffle", LayerSpec::channel_shuffle(2), {"concat"}},
        }));
}

ModelGraph shufflenet_unit_down(const ShuffleDownParams& p) {
    if (p.out_channels < 2 || p.out_channels % 2 != 0) {
        throw SemanticError("shufflenet down unit needs an even output channel count, got " +
                            std::to_string(p.out_channels));
    }
    const int half = p.out_channels / 2;
    return infer_shapes(ModelGraph::build(
        "shufflenet_unit_down", p.input,
        {
            {"left_dw", LayerSpec::depthwise(3, 2), {"input"}},
            {"left_pw", LayerSpec::pointwise(half), {"left_dw"}},
            {"right_pw1", LayerSpec::pointwise(half), {"input"}},
            {"right_dw", LayerSpec::depthwise(3, 2), {"right_pw1"}},
            {"right_pw2", LayerSpec::pointwise(half), {"right_dw"}},
            {"concat", LayerSpec::concat(), {"left_pw", "right_pw2"}},
            {"shuffle", LayerSpec::channel_shuffle(2), {"concat"}},
        }));
}

ModelGraph builtin_module(std::string_view name, const std::map<std::string, int>& params) {
    if (name == "fire") {
        reject_unknown(params, {"s1", "e1", "e3"});
        FireParams p;
        p.input = input_from(params, p.input);
        p.squeeze = value_or(params, "s1", p.squeeze);
        p.expand1x1 = value_or(params, "e1", p.expand1x1);
        p.expand3x3 = value_or(params, "e3", p.expand3x3);
        return fire_module(p);
    }
    if (name == "bottleneck") {
        reject_unknown(params, {"expansion", "out", "stride"});
        BottleneckParams p;
        p.input = input_from(params, p.input);
        p.expansion = value_or(params, "expansion", p.expansion);
        p.out_channels = value_or(params, "out", p.out_channels);
        p.stride = value_or(params, "stride", p.stride);
        return bottleneck_module(p);
    }
    if (name == "shufflenet_unit") {
        reject_unknown(params, {});
        ShuffleUnitParams p;
        p.input = input_from(params, p.input);
        return shufflenet_unit(p);
    }
    if (name == "shufflenet_unit_down") {
        reject_unknown(params, {"out"});
        ShuffleDownParams p;
        p.input = input_from(params, p.input);
        p.out_channels = value_or(params, "out", p.out_channels);
        return shufflenet_unit_down(p);
    }
    throw SemanticError("unknown builtin module '" + std::string(name) + "'");
}

std::vector<std::string> builtin_module_names() {
    return {"fire", "bottleneck", "shufflenet_unit", "shufflenet_unit_down"};
}

}  // namespace hetplan
