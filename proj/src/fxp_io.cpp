#include "hetplan/fxp_io.hpp"

#include "hetplan/errors.hpp"

#include <cstdint>
#include <fstream>
#include <iterator>

namespace hetplan {

namespace {

constexpr std::string_view kTensorMagic = "HPT1";
constexpr std::string_view kWeightsMagic = "HPW1";

void put_i32(std::string& out, std::int32_t v) {
    const auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xFFu));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    void expect_magic(std::string_view magic) {
        if (take(magic.size()) != magic) throw SyntaxError("bad magic, expected " + std::string(magic));
    }

    std::int32_t i32() {
        const auto s = take(4);
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[b])) << (8 * b);
        return static_cast<std::int32_t>(u);
    }

    std::string_view take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw SyntaxError("truncated binary data");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void finish() const {
        if (pos_ != bytes_.size()) throw SyntaxError("trailing bytes after binary data");
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void check_fraction_bits(int f) {
    if (f < 0 || f > 7) throw SemanticError("fraction_bits " + std::to_string(f) + " outside [0, 7]");
}

std::int32_t positive(Reader& r, const char* field) {
    const auto v = r.i32();
    if (v < 1) throw SemanticError(std::string(field) + " must be positive");
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string encode_tensor(const FxpTensor& tensor) {
    std::string out(kTensorMagic);
    put_i32(out, tensor.shape.h);
    put_i32(out, tensor.shape.w);
    put_i32(out, tensor.shape.c);
    put_i32(out, tensor.fraction_bits);
    for (auto v : tensor.values) out.push_back(static_cast<char>(v));
    return out;
}

FxpTensor decode_tensor(std::string_view bytes) {
    Reader r(bytes);
    r.expect_magic(kTensorMagic);
    TensorShape shape;
    shape.h = positive(r, "h");
    shape.w = positive(r, "w");
    shape.c = positive(r, "c");
    const int f = r.i32();
    check_fraction_bits(f);
    FxpTensor t = FxpTensor::zeros(shape, f);
    const auto raw = r.take(t.values.size());
    for (std::size_t i = 0; i < raw.size(); ++i) t.values[i] = static_cast<std::int8_t>(raw[i]);
    r.finish();
    return t;
}

std::string encode_weights(const WeightStore& weights) {
    std::string out(kWeightsMagic);
    put_i32(out, static_cast<std::int32_t>(weights.size()));
    for (const auto& [id, k] : weights) {
        put_i32(out, static_cast<std::int32_t>(id.size()));
        out += id;
        put_i32(out, k.kernel_h);
        put_i32(out, k.kernel_w);
        put_i32(out, k.in_channels);
        put_i32(out, k.filters);
        put_i32(out, k.fraction_bits);
        for (auto v : k.values) out.push_back(static_cast<char>(v));
    }
    return out;
}

WeightStore decode_weights(std::string_view bytes) {
    Reader r(bytes);
    r.expect_magic(kWeightsMagic);
    const auto count = r.i32();
    if (count < 0) throw SemanticError("negative weight entry count");
    WeightStore store;
    for (std::int32_t e = 0; e < count; ++e) {
        const auto len = r.i32();
        if (len < 1) throw SemanticError("empty layer id in weight store");
        std::string id(r.take(static_cast<std::size_t>(len)));
        const int kh = positive(r, "kernel_h");
        const int kw = positive(r, "kernel_w");
        const int ci = positive(r, "in_channels");
        const int n = positive(r, "filters");
        const int f = r.i32();
        check_fraction_bits(f);
        FxpKernel k = FxpKernel::zeros(kh, kw, ci, n, f);
        const auto raw = r.take(k.values.size());
        for (std::size_t i = 0; i < raw.size(); ++i) k.values[i] = static_cast<std::int8_t>(raw[i]);
        if (!store.emplace(id, std::move(k)).second) throw SemanticError("duplicate weights for '" + id + "'");
    }
    r.finish();
    return store;
}

void save_tensor(const std::filesystem::path& path, const FxpTensor& tensor) {
    write_file(path, encode_tensor(tensor));
}

FxpTensor load_tensor(const std::filesystem::path& path) {
    try {
        return decode_tensor(read_file(path));
    } catch (const SyntaxError& e) {
        throw SyntaxError(path.string() + ": " + e.what());
    } catch (const SemanticError& e) {
        throw SemanticError(path.string() + ": " + e.what());
    }
}

void save_weights(const std::filesystem::path& path, const WeightStore& weights) {
    write_file(path, encode_weights(weights));
}

WeightStore load_weights(const std::filesystem::path& path) {
    try {
        return decode_weights(read_file(path));
    } catch (const SyntaxError& e) {
        throw SyntaxError(path.string() + ": " + e.what());
    } catch (const SemanticError& e) {
        throw SemanticError(path.string() + ": " + e.what());
    }
}

}  // namespace hetplan
