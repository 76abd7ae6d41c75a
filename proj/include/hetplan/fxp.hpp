#pragma once

#include "hetplan/model_ir.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace hetplan {

inline constexpr int kDefaultFractionBits = 6;

// 8-bit signed fixed-point activations, row-major (h, w, c).
struct FxpTensor {
    TensorShape shape;
    int fraction_bits = kDefaultFractionBits;
    std::vector<std::int8_t> values;

    static FxpTensor zeros(const TensorShape& shape, int fraction_bits = kDefaultFractionBits);

    [[nodiscard]] std::size_t offset(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(shape.w) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(shape.c) +
               static_cast<std::size_t>(c);
    }
    [[nodiscard]] std::int8_t at(int y, int x, int c) const { return values[offset(y, x, c)]; }

    friend bool operator==(const FxpTensor&, const FxpTensor&) = default;
};

// Kernel block laid out (ky, kx, ci, n) row-major. For grouped convs
// `in_channels` is the per-group input depth; depthwise kernels use
// in_channels = 1 and filters = C.
struct FxpKernel {
    int kernel_h = 1;
    int kernel_w = 1;
    int in_channels = 1;
    int filters = 1;
    int fraction_bits = kDefaultFractionBits;
    std::vector<std::int8_t> values;

    static FxpKernel zeros(int kernel_h, int kernel_w, int in_channels, int filters,
                           int fraction_bits = kDefaultFractionBits);

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(kernel_h) * static_cast<std::size_t>(kernel_w) *
               static_cast<std::size_t>(in_channels) * static_cast<std::size_t>(filters);
    }
    [[nodiscard]] std::size_t offset(int ky, int kx, int ci, int n) const {
        return ((static_cast<std::size_t>(ky) * static_cast<std::size_t>(kernel_w) + static_cast<std::size_t>(kx)) *
                    static_cast<std::size_t>(in_channels) +
                static_cast<std::size_t>(ci)) *
                   static_cast<std::size_t>(filters) +
               static_cast<std::size_t>(n);
    }
    [[nodiscard]] std::int8_t at(int ky, int kx, int ci, int n) const { return values[offset(ky, kx, ci, n)]; }

    friend bool operator==(const FxpKernel&, const FxpKernel&) = default;
};

// Unrequantized 32-bit partial sums. Values carry 2*fraction_bits fraction
// bits until requantized.
struct AccTensor {
    TensorShape shape;
    int fraction_bits = kDefaultFractionBits;
    std::vector<std::int32_t> values;

    friend bool operator==(const AccTensor&, const AccTensor&) = default;
};

// Largest number of products summed into one accumulator. 127*128*2^15 < 2^31.
inline constexpr std::int64_t kMaxAccumulationTerms = std::int64_t{1} << 15;

// round(x * 2^f), half away from zero, saturated to [-128, 127].
std::int8_t quantize_value(double x, int fraction_bits);
FxpTensor quantize(std::span<const double> real_values, const TensorShape& shape, int fraction_bits);
double dequantize_value(std::int8_t q, int fraction_bits);

std::int8_t saturate_int8(std::int64_t v);
// Arithmetic right shift by fraction_bits (floor), then saturate.
std::int8_t requantize(std::int32_t acc, int fraction_bits);
FxpTensor requantize(const AccTensor& acc);

// Standard or grouped convolution (Conv or Pointwise spec). Accumulates in
// channel-major, then ky, kx order and requantizes once per output.
FxpTensor conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec);

// Partial sums of conv2d restricted to input channels [begin, end).
AccTensor conv2d_accumulate(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec,
                            int channel_begin, int channel_end);

FxpTensor depthwise_conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec);

// First: the leading C - g input channels (GPU side). Second: the trailing g
// channels (FPGA side). Both stay at accumulator width.
struct SplitPartials {
    AccTensor leading;
    AccTensor trailing;
};

SplitPartials channel_split_conv(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec, int g);
FxpTensor combine_partials(const SplitPartials& partials);

// Runs each group as an independent groups=1 convolution on its channel
// slice and concatenates the results.
FxpTensor grouped_conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec);

FxpTensor max_pool(const FxpTensor& ifm, const LayerSpec& spec);
// Mean over in-bounds taps, rounded toward negative infinity.
FxpTensor avg_pool(const FxpTensor& ifm, const LayerSpec& spec);
FxpTensor concat_channels(std::span<const FxpTensor> inputs);
FxpTensor add_saturate(const FxpTensor& a, const FxpTensor& b);
FxpTensor channel_slice(const FxpTensor& ifm, int begin, int count);
// Views channels as (groups, C/groups) and transposes to (C/groups, groups).
FxpTensor channel_shuffle(const FxpTensor& ifm, int groups);

// Slices a grouped kernel block to output filters [begin, begin + count).
FxpKernel kernel_filter_slice(const FxpKernel& kernel, int begin, int count);

}  // namespace hetplan
