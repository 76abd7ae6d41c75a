#include "hetplan/fxp_exec.hpp"

#include "hetplan/errors.hpp"

#include <random>

namespace hetplan {

namespace {

int draw(std::mt19937_64& rng, int magnitude) {
    const auto span = static_cast<std::uint64_t>(2 * magnitude + 1);
    return static_cast<int>(rng() % span) - magnitude;
}

const FxpKernel& kernel_for(const ModelGraph& graph, int index, const WeightStore& weights, int fraction_bits) {
    const auto& node = graph.node(index);
    auto it = weights.find(node.id);
    if (it == weights.end()) throw SemanticError("missing weights for layer '" + node.id + "'");
    const FxpKernel expected = kernel_layout(graph, index, fraction_bits);
    const FxpKernel& k = it->second;
    if (k.kernel_h != expected.kernel_h || k.kernel_w != expected.kernel_w || k.in_channels != expected.in_channels ||
        k.filters != expected.filters || k.values.size() != k.size()) {
        throw ShapeError("weights for layer '" + node.id + "' do not match its kernel dimensions");
    }
    if (k.fraction_bits != fraction_bits) {
        throw ShapeError("weights for layer '" + node.id + "' use a different fraction_bits");
    }
    return k;
}

std::vector<FxpTensor> run(const ModelGraph& graph, const PartitionPlan* plan, const FxpTensor& input,
                           const WeightStore& weights) {
    if (!graph.shapes_inferred()) throw ShapeError("graph shapes are not inferred");
    if (input.shape != graph.input_shape()) {
        throw ShapeError("input tensor " + to_string(input.shape) + " does not match graph input " +
                         to_string(graph.input_shape()));
    }
    if (input.values.size() != static_cast<std::size_t>(input.shape.byte_size())) {
        throw ShapeError("input tensor holds the wrong number of values");
    }
    const int f = input.fraction_bits;
    std::vector<FxpTensor> out;
    out.reserve(static_cast<std::size_t>(graph.size()));
    auto value_of = [&](int ref) -> const FxpTensor& {
        return ref == kGraphInput ? input : out[static_cast<std::size_t>(ref)];
    };

    for (int i = 0; i < graph.size(); ++i) {
        const auto& node = graph.node(i);
        const auto& spec = node.spec;
        const PartitionDecision decision =
            plan ? plan->decisions[static_cast<std::size_t>(i)] : PartitionDecision::gpu_only();
        const FxpTensor& x = value_of(node.inputs.front());
        FxpTensor y;
        switch (spec.kind) {
        case LayerKind::Conv:
        case LayerKind::Pointwise: {
            const FxpKernel& k = kernel_for(graph, i, weights, f);
            if (decision.kind == DecisionKind::ChannelSplit) {
                y = combine_partials(channel_split_conv(x, k, spec, decision.g));
            } else if (decision.kind == DecisionKind::FpgaWhole && spec.groups > 1) {
                y = grouped_conv2d(x, k, spec);
            } else {
                y = conv2d(x, k, spec);
            }
            break;
        }
        case LayerKind::DepthwiseConv:
            y = depthwise_conv2d(x, kernel_for(graph, i, weights, f), spec);
            break;
        case LayerKind::MaxPool:
            y = max_pool(x, spec);
            break;
        case LayerKind::AvgPool:
            y = avg_pool(x, spec);
            break;
        case LayerKind::Concat: {
            std::vector<FxpTensor> parts;
            parts.reserve(node.inputs.size());
            for (int ref : node.inputs) parts.push_back(value_of(ref));
            y = concat_channels(parts);
            break;
        }
        case LayerKind::Add:
            y = add_saturate(x, value_of(node.inputs[1]));
            for (std::size_t j = 2; j < node.inputs.size(); ++j) y = add_saturate(y, value_of(node.inputs[j]));
            break;
        case LayerKind::ChannelSplit:
            y = channel_slice(x, spec.split_begin, spec.split_count);
            break;
        case LayerKind::ChannelShuffle:
            y = channel_shuffle(x, spec.groups);
            break;
        }
        if (y.shape != graph.output_shape_of(i)) {
            throw ShapeError("layer '" + node.id + "' produced " + to_string(y.shape) + ", expected " +
                             to_string(graph.output_shape_of(i)));
        }
        out.push_back(std::move(y));
    }
    return out;
}

}  // namespace

FxpKernel kernel_layout(const ModelGraph& graph, int index, int fraction_bits) {
    const auto& node = graph.node(index);
    const auto& spec = node.spec;
    const TensorShape in = graph.input_shape_of(index);
    switch (spec.kind) {
    case LayerKind::Conv:
    case LayerKind::Pointwise:
        return FxpKernel::zeros(spec.kernel_h, spec.kernel_w, in.c / spec.groups, spec.filters, fraction_bits);
    case LayerKind::DepthwiseConv:
        return FxpKernel::zeros(spec.kernel_h, spec.kernel_w, 1, in.c, fraction_bits);
    default:
        throw SemanticError("layer '" + node.id + "' has no weights");
    }
}

WeightStore random_weights(const ModelGraph& graph, std::uint64_t seed, int fraction_bits, int magnitude) {
    std::mt19937_64 rng(seed);
    WeightStore store;
    for (int i = 0; i < graph.size(); ++i) {
        if (!graph.node(i).spec.is_parametric()) continue;
        FxpKernel k = kernel_layout(graph, i, fraction_bits);
        for (auto& v : k.values) v = static_cast<std::int8_t>(draw(rng, magnitude));
        store.emplace(graph.node(i).id, std::move(k));
    }
    return store;
}

FxpTensor random_tensor(const TensorShape& shape, std::uint64_t seed, int fraction_bits, int magnitude) {
    std::mt19937_64 rng(seed);
    FxpTensor t = FxpTensor::zeros(shape, fraction_bits);
    for (auto& v : t.values) v = saturate_int8(draw(rng, magnitude));
    return t;
}

std::vector<FxpTensor> execute_graph_trace(const ModelGraph& graph, const FxpTensor& input,
                                           const WeightStore& weights) {
    return run(graph, nullptr, input, weights);
}

FxpTensor execute_graph(const ModelGraph& graph, const FxpTensor& input, const WeightStore& weights) {
    if (graph.empty()) return input;
    return std::move(execute_graph_trace(graph, input, weights).back());
}

std::vector<FxpTensor> execute_plan_trace(const ModelGraph& graph, const PartitionPlan& plan,
                                          const FxpTensor& input, const WeightStore& weights) {
    // Structural errors throw here; budgets do not affect arithmetic.
    validate_plan(graph, plan, FpgaModel{});
    return run(graph, &plan, input, weights);
}

FxpTensor execute_plan(const ModelGraph& graph, const PartitionPlan& plan, const FxpTensor& input,
                       const WeightStore& weights) {
    if (graph.empty()) return input;
    return std::move(execute_plan_trace(graph, plan, input, weights).back());
}

}  // namespace hetplan
