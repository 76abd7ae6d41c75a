#include "hetplan/model_format.hpp"

#include "hetplan/errors.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace hetplan {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw SyntaxError("line " + std::to_string(line) + ": " + msg);
}

int parse_int(std::string_view text, int line, std::string_view what) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) fail(line, "expected integer for " + std::string(what) + ", got '" + std::string(text) + "'");
    return value;
}

class Params {
public:
    Params(std::map<std::string, std::string> values, int line) : values_(std::move(values)), line_(line) {}

    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            if (!fallback) fail(line_, "missing parameter '" + key + "'");
            return *fallback;
        }
        std::string text = it->second;
        values_.erase(it);
        return parse_int(text, line_, key);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    Padding padding(Padding fallback) {
        auto it = values_.find("padding");
        if (it == values_.end()) return fallback;
        std::string text = it->second;
        values_.erase(it);
        if (text == "same") return Padding::Same;
        if (text == "valid") return Padding::Valid;
        fail(line_, "padding must be 'same' or 'valid', got '" + text + "'");
    }

    void expect_consumed() const {
        if (!values_.empty()) fail(line_, "unknown parameter '" + values_.begin()->first + "'");
    }

private:
    std::map<std::string, std::string> values_;
    int line_;
};

LayerSpec parse_spec(LayerKind kind, Params& p) {
    switch (kind) {
    case LayerKind::Conv: {
        int kh = 0;
        int kw = 0;
        if (p.has("k")) {
            kh = kw = p.integer("k");
        } else {
            kh = p.integer("kh");
            kw = p.integer("kw");
        }
        const int n = p.integer("n");
        const int stride = p.integer("stride", 1);
        const Padding pad = p.padding(Padding::Same);
        const int groups = p.integer("groups", 1);
        return LayerSpec::conv(kh, kw, n, stride, pad, groups);
    }
    case LayerKind::DepthwiseConv: {
        const int k = p.integer("k");
        const int stride = p.integer("stride", 1);
        return LayerSpec::depthwise(k, stride, p.padding(Padding::Same));
    }
    case LayerKind::Pointwise:
        return LayerSpec::pointwise(p.integer("n"));
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
        const int k = p.integer("k");
        const int stride = p.integer("stride", k);
        const Padding pad = p.padding(Padding::Valid);
        return kind == LayerKind::MaxPool ? LayerSpec::max_pool(k, stride, pad) : LayerSpec::avg_pool(k, stride, pad);
    }
    case LayerKind::Concat:
        return LayerSpec::concat();
    case LayerKind::Add:
        return LayerSpec::add();
    case LayerKind::ChannelSplit: {
        const int begin = p.integer("begin");
        return LayerSpec::channel_split(begin, p.integer("count"));
    }
    case LayerKind::ChannelShuffle:
        return LayerSpec::channel_shuffle(p.integer("groups"));
    }
    return {};
}

std::string spec_params(const LayerSpec& s) {
    std::ostringstream out;
    switch (s.kind) {
    case LayerKind::Conv:
        if (s.kernel_h == s.kernel_w) {
            out << " k=" << s.kernel_h;
        } else {
            out << " kh=" << s.kernel_h << " kw=" << s.kernel_w;
        }
        out << " n=" << s.filters << " stride=" << s.stride << " padding=" << to_string(s.padding)
            << " groups=" << s.groups;
        break;
    case LayerKind::DepthwiseConv:
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
        out << " k=" << s.kernel_h << " stride=" << s.stride << " padding=" << to_string(s.padding);
        break;
    case LayerKind::Pointwise:
        out << " n=" << s.filters;
        break;
    case LayerKind::ChannelSplit:
        out << " begin=" << s.split_begin << " count=" << s.split_count;
        break;
    case LayerKind::ChannelShuffle:
        out << " groups=" << s.groups;
        break;
    case LayerKind::Concat:
    case LayerKind::Add:
        break;
    }
    return out.str();
}

}  // namespace

ModelGraph parse_model(std::string_view text, std::string default_name) {
    std::string name = std::move(default_name);
    std::optional<TensorShape> input;
    std::vector<NodeDraft> drafts;

    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        auto tokens = split_ws(raw);
        if (tokens.empty()) continue;

        if (tokens[0] == "model") {
            if (tokens.size() != 2) fail(line_no, "expected 'model <name>'");
            name = tokens[1];
            continue;
        }
        if (tokens[0] == "input") {
            if (tokens.size() != 4) fail(line_no, "expected 'input <h> <w> <c>'");
            if (input) fail(line_no, "duplicate input declaration");
            input = TensorShape{parse_int(tokens[1], line_no, "h"), parse_int(tokens[2], line_no, "w"),
                                parse_int(tokens[3], line_no, "c")};
            continue;
        }

        if (tokens.size() < 2) fail(line_no, "expected '<id> <kind> [key=value...] <- <pred>...'");
        const auto kind = layer_kind_from_string(tokens[1]);
        if (!kind) fail(line_no, "unknown layer kind '" + tokens[1] + "'");

        std::map<std::string, std::string> values;
        std::vector<std::string> preds;
        bool in_preds = false;
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            const auto& tok = tokens[i];
            if (tok == "<-") {
                if (in_preds) fail(line_no, "repeated '<-'");
                in_preds = true;
                continue;
            }
            if (in_preds) {
                preds.push_back(tok);
                continue;
            }
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) fail(line_no, "expected key=value, got '" + tok + "'");
            if (!values.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) {
                fail(line_no, "duplicate parameter '" + tok.substr(0, eq) + "'");
            }
        }
        if (!in_preds || preds.empty()) fail(line_no, "node '" + tokens[0] + "' lists no predecessors");

        Params params(std::move(values), line_no);
        LayerSpec spec = parse_spec(*kind, params);
        params.expect_consumed();
        drafts.push_back({tokens[0], spec, std::move(preds)});
    }
    if (!input) throw SyntaxError("missing 'input <h> <w> <c>' declaration");
    return infer_shapes(ModelGraph::build(std::move(name), *input, drafts));
}

ModelGraph load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_model(buf.str(), path.stem().string());
    } catch (const SyntaxError& e) {
        throw SyntaxError(path.string() + ": " + e.what());
    } catch (const SemanticError& e) {
        throw SemanticError(path.string() + ": " + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(path.string() + ": " + e.what());
    }
}

std::string serialize_model(const ModelGraph& graph) {
    std::ostringstream out;
    out << "model " << graph.name() << "\n";
    const auto& in = graph.input_shape();
    out << "input " << in.h << " " << in.w << " " << in.c << "\n";
    for (const auto& node : graph.nodes()) {
        out << node.id << " " << to_string(node.spec.kind) << spec_params(node.spec) << " <-";
        for (int p : node.inputs) {
            out << " " << (p == kGraphInput ? std::string(kGraphInputName) : graph.node(p).id);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace hetplan
