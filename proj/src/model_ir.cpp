#include "hetplan/model_ir.hpp"

#include "hetplan/errors.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <unordered_map>
#include <utility>

namespace hetplan {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::Conv, "conv"},
    {LayerKind::DepthwiseConv, "depthwise"},
    {LayerKind::Pointwise, "pointwise"},
    {LayerKind::MaxPool, "maxpool"},
    {LayerKind::AvgPool, "avgpool"},
    {LayerKind::Concat, "concat"},
    {LayerKind::Add, "add"},
    {LayerKind::ChannelSplit, "split"},
    {LayerKind::ChannelShuffle, "shuffle"},
}};

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::string to_string(const TensorShape& shape) {
    return std::to_string(shape.h) + "x" + std::to_string(shape.w) + "x" + std::to_string(shape.c);
}

std::string_view to_string(LayerKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<LayerKind> layer_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Padding padding) { return padding == Padding::Same ? "same" : "valid"; }

LayerSpec LayerSpec::conv(int kernel, int filters, int stride, Padding padding, int groups) {
    return conv(kernel, kernel, filters, stride, padding, groups);
}

LayerSpec LayerSpec::conv(int kernel_h, int kernel_w, int filters, int stride, Padding padding,
                          int groups) {
    LayerSpec s;
    s.kind = LayerKind::Conv;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    s.filters = filters;
    s.stride = stride;
    s.padding = padding;
    s.groups = groups;
    return s;
}

LayerSpec LayerSpec::depthwise(int kernel, int stride, Padding padding) {
    LayerSpec s;
    s.kind = LayerKind::DepthwiseConv;
    s.kernel_h = kernel;
    s.kernel_w = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::pointwise(int filters) {
    LayerSpec s;
    s.kind = LayerKind::Pointwise;
    s.filters = filters;
    return s;
}

LayerSpec LayerSpec::max_pool(int kernel, int stride, Padding padding) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.kernel_h = kernel;
    s.kernel_w = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::avg_pool(int kernel, int stride, Padding padding) {
    LayerSpec s = max_pool(kernel, stride, padding);
    s.kind = LayerKind::AvgPool;
    return s;
}

LayerSpec LayerSpec::concat() {
    LayerSpec s;
    s.kind = LayerKind::Concat;
    return s;
}

LayerSpec LayerSpec::add() {
    LayerSpec s;
    s.kind = LayerKind::Add;
    return s;
}

LayerSpec LayerSpec::channel_split(int begin, int count) {
    LayerSpec s;
    s.kind = LayerKind::ChannelSplit;
    s.split_begin = begin;
    s.split_count = count;
    return s;
}

LayerSpec LayerSpec::channel_shuffle(int groups) {
    LayerSpec s;
    s.kind = LayerKind::ChannelShuffle;
    s.groups = groups;
    return s;
}

bool LayerSpec::is_parametric() const {
    return kind == LayerKind::Conv || kind == LayerKind::DepthwiseConv || kind == LayerKind::Pointwise;
}

bool LayerSpec::is_multi_input() const { return kind == LayerKind::Concat || kind == LayerKind::Add; }

bool LayerSpec::has_window() const {
    return kind == LayerKind::Conv || kind == LayerKind::DepthwiseConv || kind == LayerKind::MaxPool ||
           kind == LayerKind::AvgPool;
}

int window_output_extent(int in, int kernel, int stride, Padding padding) {
    if (padding == Padding::Same) return static_cast<int>(ceil_div(in, stride));
    if (kernel > in) return 0;
    return (in - kernel) / stride + 1;
}

int pad_before(int in, int kernel, int stride, Padding padding) {
    if (padding == Padding::Valid) return 0;
    const int out = window_output_extent(in, kernel, stride, padding);
    const int total = std::max((out - 1) * stride + kernel - in, 0);
    return total / 2;
}

TensorShape layer_output_shape(const LayerSpec& spec, const TensorShape& in) {
    if (!in.valid()) throw ShapeError("invalid input shape " + to_string(in));

    auto window = [&](int channels) {
        if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.stride < 1) {
            throw SemanticError("kernel and stride must be positive");
        }
        if (spec.padding == Padding::Valid && (spec.kernel_h > in.h || spec.kernel_w > in.w)) {
            throw ShapeError("valid-padding kernel " + std::to_string(spec.kernel_h) + "x" +
                             std::to_string(spec.kernel_w) + " larger than input " + to_string(in));
        }
        return TensorShape{window_output_extent(in.h, spec.kernel_h, spec.stride, spec.padding),
                           window_output_extent(in.w, spec.kernel_w, spec.stride, spec.padding), channels};
    };

    switch (spec.kind) {
    case LayerKind::Conv:
        if (spec.filters < 1 || spec.groups < 1) throw SemanticError("conv filters and groups must be positive");
        if (in.c % spec.groups != 0 || spec.filters % spec.groups != 0) {
            throw SemanticError("groups " + std::to_string(spec.groups) + " must divide input channels " +
                                std::to_string(in.c) + " and filters " + std::to_string(spec.filters));
        }
        return window(spec.filters);
    case LayerKind::DepthwiseConv:
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
        return window(in.c);
    case LayerKind::Pointwise:
        if (spec.filters < 1) throw SemanticError("pointwise filters must be positive");
        return {in.h, in.w, spec.filters};
    case LayerKind::ChannelSplit:
        if (spec.split_count < 1 || spec.split_begin < 0 || spec.split_begin + spec.split_count > in.c) {
            throw SemanticError("channel range [" + std::to_string(spec.split_begin) + ", " +
                                std::to_string(spec.split_begin + spec.split_count) + ") outside " +
                                std::to_string(in.c) + " channels");
        }
        return {in.h, in.w, spec.split_count};
    case LayerKind::ChannelShuffle:
        if (spec.groups < 1 || in.c % spec.groups != 0) {
            throw SemanticError("shuffle groups " + std::to_string(spec.groups) + " must divide " +
                                std::to_string(in.c) + " channels");
        }
        return in;
    case LayerKind::Concat:
    case LayerKind::Add:
        return in;
    }
    return in;
}

std::int64_t mac_count(const LayerSpec& spec, const TensorShape& in) {
    switch (spec.kind) {
    case LayerKind::Conv: {
        const TensorShape out = layer_output_shape(spec, in);
        return out.pixels() * spec.kernel_h * spec.kernel_w * (in.c / spec.groups) * spec.filters;
    }
    case LayerKind::DepthwiseConv: {
        const TensorShape out = layer_output_shape(spec, in);
        return out.pixels() * spec.kernel_h * spec.kernel_w * in.c;
    }
    case LayerKind::Pointwise:
        return in.pixels() * in.c * spec.filters;
    default:
        return 0;
    }
}

std::int64_t weight_bytes(const LayerSpec& spec, const TensorShape& in) {
    switch (spec.kind) {
    case LayerKind::Conv:
        return std::int64_t{spec.kernel_h} * spec.kernel_w * (in.c / spec.groups) * spec.filters;
    case LayerKind::DepthwiseConv:
        return std::int64_t{spec.kernel_h} * spec.kernel_w * in.c;
    case LayerKind::Pointwise:
        return std::int64_t{in.c} * spec.filters;
    default:
        return 0;
    }
}

ModelGraph ModelGraph::build(std::string name, TensorShape input_shape, const std::vector<NodeDraft>& drafts) {
    if (!input_shape.valid()) throw SemanticError("invalid graph input shape " + to_string(input_shape));

    std::unordered_map<std::string, int> draft_index;
    for (int i = 0; i < static_cast<int>(drafts.size()); ++i) {
        const auto& id = drafts[static_cast<std::size_t>(i)].id;
        if (id.empty()) throw SemanticError("node id must not be empty");
        if (id == kGraphInputName) throw SemanticError("node id '" + id + "' is reserved");
        if (!draft_index.emplace(id, i).second) throw SemanticError("duplicate node id '" + id + "'");
    }

    // Resolve predecessors and check arity.
    const int n = static_cast<int>(drafts.size());
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
    std::vector<std::vector<int>> succs(static_cast<std::size_t>(n));
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        const auto& d = drafts[static_cast<std::size_t>(i)];
        if (d.inputs.empty()) throw SemanticError("node '" + d.id + "' has no predecessors");
        if (d.spec.is_multi_input() && d.inputs.size() < 2) {
            throw SemanticError("node '" + d.id + "' (" + std::string(to_string(d.spec.kind)) +
                                ") needs at least two predecessors");
        }
        if (!d.spec.is_multi_input() && d.inputs.size() != 1) {
            throw SemanticError("node '" + d.id + "' (" + std::string(to_string(d.spec.kind)) +
                                ") takes exactly one predecessor");
        }
        for (const auto& p : d.inputs) {
            if (p == kGraphInputName) {
                preds[static_cast<std::size_t>(i)].push_back(kGraphInput);
                continue;
            }
            auto it = draft_index.find(p);
            if (it == draft_index.end()) {
                throw SemanticError("node '" + d.id + "' references undefined predecessor '" + p + "'");
            }
            preds[static_cast<std::size_t>(i)].push_back(it->second);
            succs[static_cast<std::size_t>(it->second)].push_back(i);
            ++indegree[static_cast<std::size_t>(i)];
        }
    }

    // Kahn's algorithm, always taking the lowest draft index that is ready.
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int i = 0; i < n; ++i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.push(i);
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    while (!ready.empty()) {
        const int i = ready.top();
        ready.pop();
        order.push_back(i);
        for (int s : succs[static_cast<std::size_t>(i)]) {
            if (--indegree[static_cast<std::size_t>(s)] == 0) ready.push(s);
        }
    }
    if (static_cast<int>(order.size()) != n) throw SemanticError("graph contains a cycle");

    std::vector<int> position(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) position[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;

    ModelGraph g;
    g.name_ = std::move(name);
    g.input_shape_ = input_shape;
    g.nodes_.reserve(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        const auto& d = drafts[static_cast<std::size_t>(i)];
        Node node{d.id, d.spec, {}, std::nullopt};
        for (int p : preds[static_cast<std::size_t>(i)]) {
            node.inputs.push_back(p == kGraphInput ? kGraphInput : position[static_cast<std::size_t>(p)]);
        }
        g.nodes_.push_back(std::move(node));
    }
    g.index_consumers();
    return g;
}

void ModelGraph::index_consumers() {
    consumers_.assign(nodes_.size(), {});
    input_consumers_.clear();
    for (int i = 0; i < size(); ++i) {
        for (int p : nodes_[static_cast<std::size_t>(i)].inputs) {
            auto& list = p == kGraphInput ? input_consumers_ : consumers_[static_cast<std::size_t>(p)];
            if (list.empty() || list.back() != i) list.push_back(i);
        }
    }
}

std::optional<int> ModelGraph::index_of(std::string_view id) const {
    for (int i = 0; i < size(); ++i) {
        if (nodes_[static_cast<std::size_t>(i)].id == id) return i;
    }
    return std::nullopt;
}

const std::vector<int>& ModelGraph::consumers(int index) const {
    if (index == kGraphInput) return input_consumers_;
    return consumers_.at(static_cast<std::size_t>(index));
}

bool ModelGraph::shapes_inferred() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.output_shape.has_value(); });
}

TensorShape ModelGraph::tensor_shape(int ref) const {
    if (ref == kGraphInput) return input_shape_;
    const auto& shape = node(ref).output_shape;
    if (!shape) throw ShapeError("shape of node '" + node(ref).id + "' not inferred");
    return *shape;
}

TensorShape ModelGraph::input_shape_of(int index) const { return tensor_shape(node(index).inputs.front()); }

TensorShape ModelGraph::output_shape_of(int index) const { return tensor_shape(index); }

TensorShape ModelGraph::output_shape() const {
    if (empty()) return input_shape_;
    return tensor_shape(output_index());
}

bool ModelGraph::chained_to_previous(int index) const {
    if (index <= 0 || index >= size()) return false;
    const auto& n = node(index);
    return n.inputs.size() == 1 && n.inputs.front() == index - 1 && consumers(index - 1).size() == 1;
}

ModelGraph infer_shapes(const ModelGraph& graph) {
    ModelGraph out = graph;
    for (int i = 0; i < out.size(); ++i) {
        Node& node = out.nodes_[static_cast<std::size_t>(i)];
        std::vector<TensorShape> ins;
        ins.reserve(node.inputs.size());
        for (int p : node.inputs) ins.push_back(out.tensor_shape(p));

        TensorShape result;
        try {
            if (node.spec.kind == LayerKind::Concat) {
                result = ins.front();
                result.c = 0;
                for (const auto& s : ins) {
                    if (s.h != ins.front().h || s.w != ins.front().w) {
                        throw ShapeError("concat inputs differ spatially: " + to_string(ins.front()) + " vs " +
                                         to_string(s));
                    }
                    result.c += s.c;
                }
            } else if (node.spec.kind == LayerKind::Add) {
                for (const auto& s : ins) {
                    if (s != ins.front()) {
                        throw ShapeError("add inputs differ: " + to_string(ins.front()) + " vs " + to_string(s));
                    }
                }
                result = ins.front();
            } else {
                result = layer_output_shape(node.spec, ins.front());
            }
        } catch (const ShapeError& e) {
            throw ShapeError("node '" + node.id + "': " + e.what());
        } catch (const SemanticError& e) {
            throw SemanticError("node '" + node.id + "': " + e.what());
        }
        node.output_shape = result;
    }
    return out;
}

}  // namespace hetplan
