#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hetplan {

// Activation tensor shape, row-major (h, w, c). Elements are 8-bit, so the
// element count is also the byte size.
struct TensorShape {
    int h = 1;
    int w = 1;
    int c = 1;

    [[nodiscard]] std::int64_t pixels() const { return std::int64_t{h} * w; }
    [[nodiscard]] std::int64_t byte_size() const { return pixels() * c; }
    [[nodiscard]] bool valid() const { return h >= 1 && w >= 1 && c >= 1; }

    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& shape);

enum class LayerKind {
    Conv,
    DepthwiseConv,
    Pointwise,
    MaxPool,
    AvgPool,
    Concat,
    Add,
    ChannelSplit,
    ChannelShuffle,
};

enum class Padding { Same, Valid };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> layer_kind_from_string(std::string_view name);
std::string_view to_string(Padding padding);

// Flat layer description. Only the fields relevant to `kind` are meaningful;
// the named constructors below fill the rest with canonical values so that
// two specs describing the same layer compare equal.
struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int kernel_h = 1;
    int kernel_w = 1;
    int filters = 0;  // output channels N (Conv, Pointwise)
    int stride = 1;
    Padding padding = Padding::Same;
    int groups = 1;       // Conv groups, or ChannelShuffle group count
    int split_begin = 0;  // ChannelSplit: first selected channel
    int split_count = 0;  // ChannelSplit: number of selected channels

    static LayerSpec conv(int kernel, int filters, int stride = 1, Padding padding = Padding::Same,
                          int groups = 1);
    static LayerSpec conv(int kernel_h, int kernel_w, int filters, int stride, Padding padding,
                          int groups);
    static LayerSpec depthwise(int kernel, int stride = 1, Padding padding = Padding::Same);
    static LayerSpec pointwise(int filters);
    static LayerSpec max_pool(int kernel, int stride, Padding padding = Padding::Valid);
    static LayerSpec avg_pool(int kernel, int stride, Padding padding = Padding::Valid);
    static LayerSpec concat();
    static LayerSpec add();
    static LayerSpec channel_split(int begin, int count);
    static LayerSpec channel_shuffle(int groups);

    // Conv, DepthwiseConv and Pointwise carry weights; everything else is
    // data movement or a reduction without parameters.
    [[nodiscard]] bool is_parametric() const;
    [[nodiscard]] bool is_multi_input() const;
    [[nodiscard]] bool has_window() const;  // sliding-window layers

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Leading (top/left) zero padding for a window along one axis. "Same"
// padding splits the total deficit with the smaller half first.
int pad_before(int in, int kernel, int stride, Padding padding);
int window_output_extent(int in, int kernel, int stride, Padding padding);

// Output shape of a single-input layer. Throws ShapeError / SemanticError.
TensorShape layer_output_shape(const LayerSpec& spec, const TensorShape& in);

// Multiply-accumulate count of one inference of this layer (biases excluded).
std::int64_t mac_count(const LayerSpec& spec, const TensorShape& in);

// Bytes of 8-bit weights resident for this layer (biases excluded).
std::int64_t weight_bytes(const LayerSpec& spec, const TensorShape& in);

// Index used in Node::inputs to denote the graph input tensor.
inline constexpr int kGraphInput = -1;
inline constexpr std::string_view kGraphInputName = "input";

struct Node {
    std::string id;
    LayerSpec spec;
    std::vector<int> inputs;  // node indices or kGraphInput
    std::optional<TensorShape> output_shape;

    friend bool operator==(const Node&, const Node&) = default;
};

// Draft node used when assembling a graph: predecessors are named by id.
struct NodeDraft {
    std::string id;
    LayerSpec spec;
    std::vector<std::string> inputs;
};

// Directed acyclic graph of layers with a single input tensor. Nodes are kept
// in topological order; the last node produces the graph output. Instances
// are immutable once built.
class ModelGraph {
public:
    ModelGraph() = default;

    // Validates structure (unique ids, known predecessors, arity, acyclicity)
    // and orders nodes topologically, keeping the draft order where possible.
    // Throws SemanticError.
    static ModelGraph build(std::string name, TensorShape input_shape,
                            const std::vector<NodeDraft>& drafts);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const TensorShape& input_shape() const { return input_shape_; }
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] const Node& node(int index) const { return nodes_.at(static_cast<std::size_t>(index)); }
    [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
    [[nodiscard]] bool empty() const { return nodes_.empty(); }

    [[nodiscard]] std::optional<int> index_of(std::string_view id) const;
    [[nodiscard]] const std::vector<int>& consumers(int index) const;
    [[nodiscard]] int output_index() const { return size() - 1; }

    [[nodiscard]] bool shapes_inferred() const;
    // Shape of the tensor referenced by a Node::inputs entry.
    [[nodiscard]] TensorShape tensor_shape(int ref) const;
    // Shape of the first input of a node.
    [[nodiscard]] TensorShape input_shape_of(int index) const;
    [[nodiscard]] TensorShape output_shape_of(int index) const;
    [[nodiscard]] TensorShape output_shape() const;

    // Node i is the sole consumer of node i-1 and node i-1 is its sole input.
    [[nodiscard]] bool chained_to_previous(int index) const;

    void set_name(std::string name) { name_ = std::move(name); }

    friend bool operator==(const ModelGraph& a, const ModelGraph& b) {
        return a.name_ == b.name_ && a.input_shape_ == b.input_shape_ && a.nodes_ == b.nodes_;
    }

private:
    friend ModelGraph infer_shapes(const ModelGraph& graph);

    void index_consumers();

    std::string name_;
    TensorShape input_shape_;
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> consumers_;
    std::vector<int> input_consumers_;
};

// Annotates every node with its output shape. Same padding with stride s
// gives ceil(H/s); valid padding gives floor((H-k)/s)+1. Throws ShapeError on
// Add mismatches or oversized valid windows, SemanticError on divisibility.
ModelGraph infer_shapes(const ModelGraph& graph);

}  // namespace hetplan
