#include "hetplan/fxp.hpp"

#include "hetplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetplan {

namespace {

void check_fraction_bits(int f) {
    if (f < 0 || f > 7) throw SemanticError("fraction_bits must be in [0, 7], got " + std::to_string(f));
}

bool is_conv_like(const LayerSpec& spec) {
    return spec.kind == LayerKind::Conv || spec.kind == LayerKind::Pointwise;
}

void check_conv_operands(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec) {
    if (!is_conv_like(spec)) throw SemanticError("conv2d needs a conv or pointwise spec");
    if (ifm.fraction_bits != kernel.fraction_bits) {
        throw SemanticError("activation and weight fraction_bits differ (" + std::to_string(ifm.fraction_bits) +
                            " vs " + std::to_string(kernel.fraction_bits) + ")");
    }
    const int groups = spec.groups;
    if (groups < 1 || ifm.shape.c % groups != 0 || spec.filters % groups != 0) {
        throw SemanticError("groups " + std::to_string(groups) + " must divide channels " +
                            std::to_string(ifm.shape.c) + " and filters " + std::to_string(spec.filters));
    }
    if (kernel.kernel_h != spec.kernel_h || kernel.kernel_w != spec.kernel_w ||
        kernel.in_channels != ifm.shape.c / groups || kernel.filters != spec.filters) {
        throw ShapeError("kernel block " + std::to_string(kernel.kernel_h) + "x" + std::to_string(kernel.kernel_w) +
                         "x" + std::to_string(kernel.in_channels) + "x" + std::to_string(kernel.filters) +
                         " does not match layer on input " + to_string(ifm.shape));
    }
    if (kernel.values.size() != kernel.size()) throw ShapeError("kernel value count mismatch");
    if (std::int64_t{kernel.kernel_h} * kernel.kernel_w * kernel.in_channels > kMaxAccumulationTerms) {
        throw SemanticError("accumulation depth exceeds 2^15 products");
    }
}

}  // namespace

FxpTensor FxpTensor::zeros(const TensorShape& shape, int fraction_bits) {
    return {shape, fraction_bits, std::vector<std::int8_t>(static_cast<std::size_t>(shape.byte_size()), 0)};
}

FxpKernel FxpKernel::zeros(int kernel_h, int kernel_w, int in_channels, int filters, int fraction_bits) {
    FxpKernel k{kernel_h, kernel_w, in_channels, filters, fraction_bits, {}};
    k.values.assign(k.size(), 0);
    return k;
}

std::int8_t saturate_int8(std::int64_t v) {
    return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, -128, 127));
}

std::int8_t quantize_value(double x, int fraction_bits) {
    check_fraction_bits(fraction_bits);
    if (std::isnan(x)) throw SemanticError("cannot quantize NaN");
    const double scaled = std::round(std::ldexp(x, fraction_bits));
    if (scaled >= 127.0) return 127;
    if (scaled <= -128.0) return -128;
    return static_cast<std::int8_t>(scaled);
}

FxpTensor quantize(std::span<const double> real_values, const TensorShape& shape, int fraction_bits) {
    check_fraction_bits(fraction_bits);
    if (!shape.valid() || static_cast<std::int64_t>(real_values.size()) != shape.byte_size()) {
        throw ShapeError("quantize: " + std::to_string(real_values.size()) + " values for shape " + to_string(shape));
    }
    FxpTensor t{shape, fraction_bits, {}};
    t.values.reserve(real_values.size());
    for (double x : real_values) t.values.push_back(quantize_value(x, fraction_bits));
    return t;
}

double dequantize_value(std::int8_t q, int fraction_bits) { return std::ldexp(static_cast<double>(q), -fraction_bits); }

std::int8_t requantize(std::int32_t acc, int fraction_bits) {
    // >> on negative signed values is arithmetic (floor) since C++20.
    return saturate_int8(acc >> fraction_bits);
}

FxpTensor requantize(const AccTensor& acc) {
    FxpTensor out{acc.shape, acc.fraction_bits, {}};
    out.values.reserve(acc.values.size());
    for (std::int32_t v : acc.values) out.values.push_back(requantize(v, acc.fraction_bits));
    return out;
}

AccTensor conv2d_accumulate(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec, int channel_begin,
                            int channel_end) {
    check_conv_operands(ifm, kernel, spec);
    if (channel_begin < 0 || channel_end > ifm.shape.c || channel_begin > channel_end) {
        throw SemanticError("channel range out of bounds");
    }
    const TensorShape out_shape = layer_output_shape(spec, ifm.shape);
    const int pad_y = pad_before(ifm.shape.h, spec.kernel_h, spec.stride, spec.padding);
    const int pad_x = pad_before(ifm.shape.w, spec.kernel_w, spec.stride, spec.padding);
    const int cin_per_group = ifm.shape.c / spec.groups;
    const int n_per_group = spec.filters / spec.groups;

    AccTensor acc{out_shape, ifm.fraction_bits,
                  std::vector<std::int32_t>(static_cast<std::size_t>(out_shape.byte_size()), 0)};
    std::size_t idx = 0;
    for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox) {
            for (int n = 0; n < spec.filters; ++n, ++idx) {
                const int group = n / n_per_group;
                const int c_lo = std::max(channel_begin, group * cin_per_group);
                const int c_hi = std::min(channel_end, (group + 1) * cin_per_group);
                std::int32_t sum = 0;
                for (int c = c_lo; c < c_hi; ++c) {
                    const int ci = c - group * cin_per_group;
                    for (int ky = 0; ky < spec.kernel_h; ++ky) {
                        const int iy = oy * spec.stride + ky - pad_y;
                        if (iy < 0 || iy >= ifm.shape.h) continue;
                        for (int kx = 0; kx < spec.kernel_w; ++kx) {
                            const int ix = ox * spec.stride + kx - pad_x;
                            if (ix < 0 || ix >= ifm.shape.w) continue;
                            sum += std::int32_t{ifm.at(iy, ix, c)} * std::int32_t{kernel.at(ky, kx, ci, n)};
                        }
                    }
                }
                acc.values[idx] = sum;
            }
        }
    }
    return acc;
}

FxpTensor conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec) {
    return requantize(conv2d_accumulate(ifm, kernel, spec, 0, ifm.shape.c));
}

FxpTensor depthwise_conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec) {
    if (spec.kind != LayerKind::DepthwiseConv) throw SemanticError("depthwise_conv2d needs a depthwise spec");
    if (ifm.fraction_bits != kernel.fraction_bits) throw SemanticError("activation and weight fraction_bits differ");
    if (kernel.kernel_h != spec.kernel_h || kernel.kernel_w != spec.kernel_w || kernel.in_channels != 1 ||
        kernel.filters != ifm.shape.c || kernel.values.size() != kernel.size()) {
        throw ShapeError("depthwise kernel does not match layer on input " + to_string(ifm.shape));
    }
    const TensorShape out_shape = layer_output_shape(spec, ifm.shape);
    const int pad_y = pad_before(ifm.shape.h, spec.kernel_h, spec.stride, spec.padding);
    const int pad_x = pad_before(ifm.shape.w, spec.kernel_w, spec.stride, spec.padding);

    FxpTensor out = FxpTensor::zeros(out_shape, ifm.fraction_bits);
    std::size_t idx = 0;
    for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox) {
            for (int c = 0; c < out_shape.c; ++c, ++idx) {
                std::int32_t sum = 0;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int iy = oy * spec.stride + ky - pad_y;
                    if (iy < 0 || iy >= ifm.shape.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int ix = ox * spec.stride + kx - pad_x;
                        if (ix < 0 || ix >= ifm.shape.w) continue;
                        sum += std::int32_t{ifm.at(iy, ix, c)} * std::int32_t{kernel.at(ky, kx, 0, c)};
                    }
                }
                out.values[idx] = requantize(sum, ifm.fraction_bits);
            }
        }
    }
    return out;
}

SplitPartials channel_split_conv(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec, int g) {
    const int c = ifm.shape.c;
    if (g <= 0 || g >= c) {
        throw SemanticError("split size g=" + std::to_string(g) + " outside (0, " + std::to_string(c) + ")");
    }
    return {conv2d_accumulate(ifm, kernel, spec, 0, c - g), conv2d_accumulate(ifm, kernel, spec, c - g, c)};
}

FxpTensor combine_partials(const SplitPartials& partials) {
    const auto& a = partials.leading;
    const auto& b = partials.trailing;
    if (a.shape != b.shape || a.fraction_bits != b.fraction_bits || a.values.size() != b.values.size()) {
        throw ShapeError("partials disagree on shape or fraction_bits");
    }
    AccTensor sum = a;
    for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += b.values[i];
    return requantize(sum);
}

FxpKernel kernel_filter_slice(const FxpKernel& kernel, int begin, int count) {
    if (begin < 0 || count < 1 || begin + count > kernel.filters) throw SemanticError("filter slice out of range");
    FxpKernel out = FxpKernel::zeros(kernel.kernel_h, kernel.kernel_w, kernel.in_channels, count, kernel.fraction_bits);
    for (int ky = 0; ky < kernel.kernel_h; ++ky) {
        for (int kx = 0; kx < kernel.kernel_w; ++kx) {
            for (int ci = 0; ci < kernel.in_channels; ++ci) {
                for (int n = 0; n < count; ++n) out.values[out.offset(ky, kx, ci, n)] = kernel.at(ky, kx, ci, begin + n);
            }
        }
    }
    return out;
}

FxpTensor grouped_conv2d(const FxpTensor& ifm, const FxpKernel& kernel, const LayerSpec& spec) {
    check_conv_operands(ifm, kernel, spec);
    const int groups = spec.groups;
    const int cin_per_group = ifm.shape.c / groups;
    const int n_per_group = spec.filters / groups;
    LayerSpec single = spec;
    single.groups = 1;
    single.filters = n_per_group;

    std::vector<FxpTensor> outputs;
    outputs.reserve(static_cast<std::size_t>(groups));
    for (int gi = 0; gi < groups; ++gi) {
        const FxpTensor slice = channel_slice(ifm, gi * cin_per_group, cin_per_group);
        outputs.push_back(conv2d(slice, kernel_filter_slice(kernel, gi * n_per_group, n_per_group), single));
    }
    return concat_channels(outputs);
}

FxpTensor max_pool(const FxpTensor& ifm, const LayerSpec& spec) {
    const TensorShape out_shape = layer_output_shape(spec, ifm.shape);
    const int pad_y = pad_before(ifm.shape.h, spec.kernel_h, spec.stride, spec.padding);
    const int pad_x = pad_before(ifm.shape.w, spec.kernel_w, spec.stride, spec.padding);
    FxpTensor out = FxpTensor::zeros(out_shape, ifm.fraction_bits);
    std::size_t idx = 0;
    for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox) {
            for (int c = 0; c < out_shape.c; ++c, ++idx) {
                int best = std::numeric_limits<int>::min();
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int iy = oy * spec.stride + ky - pad_y;
                    if (iy < 0 || iy >= ifm.shape.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int ix = ox * spec.stride + kx - pad_x;
                        if (ix < 0 || ix >= ifm.shape.w) continue;
                        best = std::max(best, int{ifm.at(iy, ix, c)});
                    }
                }
                out.values[idx] = saturate_int8(best);
            }
        }
    }
    return out;
}

FxpTensor avg_pool(const FxpTensor& ifm, const LayerSpec& spec) {
    const TensorShape out_shape = layer_output_shape(spec, ifm.shape);
    const int pad_y = pad_before(ifm.shape.h, spec.kernel_h, spec.stride, spec.padding);
    const int pad_x = pad_before(ifm.shape.w, spec.kernel_w, spec.stride, spec.padding);
    FxpTensor out = FxpTensor::zeros(out_shape, ifm.fraction_bits);
    std::size_t idx = 0;
    for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox) {
            for (int c = 0; c < out_shape.c; ++c, ++idx) {
                int sum = 0;
                int count = 0;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int iy = oy * spec.stride + ky - pad_y;
                    if (iy < 0 || iy >= ifm.shape.h) continue;
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int ix = ox * spec.stride + kx - pad_x;
                        if (ix < 0 || ix >= ifm.shape.w) continue;
                        sum += ifm.at(iy, ix, c);
                        ++count;
                    }
                }
                // floor division
                int q = sum / count;
                if ((sum % count != 0) && (sum < 0)) --q;
                out.values[idx] = saturate_int8(q);
            }
        }
    }
    return out;
}

FxpTensor concat_channels(std::span<const FxpTensor> inputs) {
    if (inputs.empty()) throw ShapeError("concat of zero tensors");
    TensorShape shape = inputs.front().shape;
    shape.c = 0;
    for (const auto& t : inputs) {
        if (t.shape.h != shape.h || t.shape.w != shape.w) throw ShapeError("concat inputs differ spatially");
        if (t.fraction_bits != inputs.front().fraction_bits) throw SemanticError("concat inputs differ in fraction_bits");
        shape.c += t.shape.c;
    }
    FxpTensor out = FxpTensor::zeros(shape, inputs.front().fraction_bits);
    std::size_t idx = 0;
    for (int y = 0; y < shape.h; ++y) {
        for (int x = 0; x < shape.w; ++x) {
            for (const auto& t : inputs) {
                for (int c = 0; c < t.shape.c; ++c) out.values[idx++] = t.at(y, x, c);
            }
        }
    }
    return out;
}

FxpTensor add_saturate(const FxpTensor& a, const FxpTensor& b) {
    if (a.shape != b.shape) throw ShapeError("add inputs differ: " + to_string(a.shape) + " vs " + to_string(b.shape));
    if (a.fraction_bits != b.fraction_bits) throw SemanticError("add inputs differ in fraction_bits");
    FxpTensor out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = saturate_int8(std::int64_t{a.values[i]} + std::int64_t{b.values[i]});
    }
    return out;
}

FxpTensor channel_slice(const FxpTensor& ifm, int begin, int count) {
    if (begin < 0 || count < 1 || begin + count > ifm.shape.c) throw SemanticError("channel slice out of range");
    FxpTensor out = FxpTensor::zeros({ifm.shape.h, ifm.shape.w, count}, ifm.fraction_bits);
    std::size_t idx = 0;
    for (int y = 0; y < ifm.shape.h; ++y) {
        for (int x = 0; x < ifm.shape.w; ++x) {
            for (int c = 0; c < count; ++c) out.values[idx++] = ifm.at(y, x, begin + c);
        }
    }
    return out;
}

FxpTensor channel_shuffle(const FxpTensor& ifm, int groups) {
    const int channels = ifm.shape.c;
    if (groups < 1 || channels % groups != 0) throw SemanticError("shuffle groups must divide channels");
    const int per_group = channels / groups;
    FxpTensor out = FxpTensor::zeros(ifm.shape, ifm.fraction_bits);
    for (int y = 0; y < ifm.shape.h; ++y) {
        for (int x = 0; x < ifm.shape.w; ++x) {
            for (int c = 0; c < channels; ++c) {
                const int group = c / per_group;
                const int member = c % per_group;
                out.values[out.offset(y, x, member * groups + group)] = ifm.at(y, x, c);
            }
        }
    }
    return out;
}

}  // namespace hetplan
