#include "hetplan/errors.hpp"
#include "hetplan/fxp.hpp"
#include "hetplan/fxp_exec.hpp"
#include "hetplan/fxp_io.hpp"
#include "hetplan/templates.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <random>

using namespace hetplan;

namespace {

FxpTensor random_fxp(const TensorShape& shape, std::mt19937_64& rng) {
    FxpTensor t = FxpTensor::zeros(shape);
    for (auto& v : t.values) v = static_cast<std::int8_t>(std::uniform_int_distribution<int>(-128, 127)(rng));
    return t;
}

FxpKernel random_kernel(int kh, int kw, int ci, int n, std::mt19937_64& rng, int mag = 20) {
    FxpKernel k = FxpKernel::zeros(kh, kw, ci, n);
    for (auto& v : k.values) v = static_cast<std::int8_t>(std::uniform_int_distribution<int>(-mag, mag)(rng));
    return k;
}

// Independent scalar reference: explicit padding offsets, int64 sum, floor
// shift, clamp.
FxpTensor naive_conv(const FxpTensor& x, const FxpKernel& k, int stride, Padding pad, int groups) {
    auto out_extent = [&](int size, int kk) {
        return pad == Padding::Same ? (size + stride - 1) / stride : (size - kk) / stride + 1;
    };
    auto lead = [&](int size, int kk) {
        if (pad == Padding::Valid) return 0;
        const int o = (size + stride - 1) / stride;
        const int total = std::max((o - 1) * stride + kk - size, 0);
        return total / 2;
    };
    const int ho = out_extent(x.shape.h, k.kernel_h);
    const int wo = out_extent(x.shape.w, k.kernel_w);
    const int py = lead(x.shape.h, k.kernel_h);
    const int px = lead(x.shape.w, k.kernel_w);
    const int cpg = x.shape.c / groups;
    const int npg = k.filters / groups;
    FxpTensor y = FxpTensor::zeros({ho, wo, k.filters}, x.fraction_bits);
    for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
            for (int n = 0; n < k.filters; ++n) {
                const int grp = n / npg;
                std::int64_t acc = 0;
                for (int ci = 0; ci < cpg; ++ci)
                    for (int ky = 0; ky < k.kernel_h; ++ky)
                        for (int kx = 0; kx < k.kernel_w; ++kx) {
                            const int iy = oy * stride + ky - py;
                            const int ix = ox * stride + kx - px;
                            if (iy < 0 || ix < 0 || iy >= x.shape.h || ix >= x.shape.w) continue;
                            acc += std::int64_t{x.at(iy, ix, grp * cpg + ci)} * k.at(ky, kx, ci, n);
                        }
                std::int64_t shifted = acc >> x.fraction_bits;
                shifted = std::clamp<std::int64_t>(shifted, -128, 127);
                y.values[y.offset(oy, ox, n)] = static_cast<std::int8_t>(shifted);
            }
    return y;
}

}  // namespace

TEST_CASE("quantize examples") {
    CHECK(quantize_value(1.0, 6) == 64);
    CHECK(quantize_value(3.0, 6) == 127);
    CHECK(quantize_value(-0.25, 6) == -16);
    CHECK(quantize_value(-5.0, 6) == -128);
    CHECK(quantize_value(0.5 / 64.0, 6) == 1);
    CHECK(quantize_value(-0.5 / 64.0, 6) == -1);
    CHECK(quantize_value(1.5 / 64.0, 6) == 2);
    const std::vector<double> xs{1.0, -0.25};
    CHECK_THROWS(quantize(xs, {1, 1, 3}, 6));
    CHECK_THROWS(quantize(xs, {1, 1, 2}, 8));
}

TEST_CASE("quantize saturates and is monotone") {
    std::int8_t prev = -128;
    for (double x = -4.0; x <= 4.0; x += 1.0 / 512.0) {
        const auto q = quantize_value(x, 6);
        CHECK(q >= prev);
        prev = q;
    }
    CHECK(quantize_value(1e9, 0) == 127);
    CHECK(quantize_value(-1e9, 7) == -128);
}

TEST_CASE("requantize floors and saturates") {
    CHECK(requantize(1024, 6) == 16);
    CHECK(requantize(-1, 6) == -1);
    CHECK(requantize(-65, 6) == -2);
    CHECK(requantize(1 << 20, 6) == 127);
    CHECK(requantize(-(1 << 20), 6) == -128);
}

TEST_CASE("conv2d examples") {
    FxpTensor x = FxpTensor::zeros({1, 1, 1});
    x.values[0] = 32;
    FxpKernel k = FxpKernel::zeros(1, 1, 1, 1);
    k.values[0] = 32;
    CHECK(conv2d(x, k, LayerSpec::pointwise(1)).values[0] == 16);

    std::mt19937_64 rng(3);
    const FxpTensor in = random_fxp({3, 3, 4}, rng);
    FxpKernel id = FxpKernel::zeros(1, 1, 4, 4);
    for (int c = 0; c < 4; ++c) id.values[id.offset(0, 0, c, c)] = 64;
    CHECK(conv2d(in, id, LayerSpec::pointwise(4)) == in);

    FxpKernel wrong = FxpKernel::zeros(1, 1, 3, 4);
    CHECK_THROWS(conv2d(in, wrong, LayerSpec::pointwise(4)));
    CHECK_THROWS(conv2d(in, FxpKernel::zeros(3, 3, 4, 3), LayerSpec::conv(3, 3, 1, Padding::Same, 3)));
}

TEST_CASE("conv2d matches a scalar reference") {
    std::mt19937_64 rng(17);
    const FxpTensor x = random_fxp({5, 5, 3}, rng);
    const FxpKernel k = random_kernel(3, 3, 3, 2, rng);
    CHECK(conv2d(x, k, LayerSpec::conv(3, 2)) == naive_conv(x, k, 1, Padding::Same, 1));

    for (int trial = 0; trial < 300; ++trial) {
        const int h = std::uniform_int_distribution<int>(1, 7)(rng);
        const int w = std::uniform_int_distribution<int>(1, 7)(rng);
        const int groups = std::uniform_int_distribution<int>(1, 3)(rng);
        const int c = groups * std::uniform_int_distribution<int>(1, 3)(rng);
        const int n = groups * std::uniform_int_distribution<int>(1, 3)(rng);
        const int kh = std::uniform_int_distribution<int>(1, 4)(rng);
        const int kw = std::uniform_int_distribution<int>(1, 4)(rng);
        const int s = std::uniform_int_distribution<int>(1, 3)(rng);
        const Padding p = (kh <= h && kw <= w && trial % 2) ? Padding::Valid : Padding::Same;
        const FxpTensor xi = random_fxp({h, w, c}, rng);
        const FxpKernel ki = random_kernel(kh, kw, c / groups, n, rng);
        const LayerSpec spec = LayerSpec::conv(kh, kw, n, s, p, groups);
        REQUIRE(conv2d(xi, ki, spec) == naive_conv(xi, ki, s, p, groups));
    }
}

TEST_CASE("depthwise examples and grouped-conv reduction") {
    std::mt19937_64 rng(23);
    const FxpTensor x = random_fxp({4, 4, 2}, rng);
    FxpKernel id = FxpKernel::zeros(3, 3, 1, 2);
    for (int c = 0; c < 2; ++c) id.values[id.offset(1, 1, 0, c)] = 64;
    CHECK(depthwise_conv2d(x, id, LayerSpec::depthwise(3)) == x);

    CHECK(depthwise_conv2d(random_fxp({4, 4, 1}, rng), FxpKernel::zeros(3, 3, 1, 1), LayerSpec::depthwise(3, 2)).shape ==
          TensorShape{2, 2, 1});

    for (int trial = 0; trial < 50; ++trial) {
        const int c = 1 + trial % 4;
        const FxpTensor xi = random_fxp({4, 4, c}, rng);
        const FxpKernel dw = random_kernel(3, 3, 1, c, rng);
        const LayerSpec spec = LayerSpec::conv(3, c, 1 + trial % 2, Padding::Same, c);
        // Block-diagonal grouped weights: group i holds exactly channel i.
        FxpKernel grouped = FxpKernel::zeros(3, 3, 1, c);
        grouped.values = dw.values;
        CHECK(depthwise_conv2d(xi, dw, LayerSpec::depthwise(3, 1 + trial % 2)) == conv2d(xi, grouped, spec));
        CHECK(grouped_conv2d(xi, grouped, spec) == depthwise_conv2d(xi, dw, LayerSpec::depthwise(3, 1 + trial % 2)));
    }
}

TEST_CASE("channel split recombines exactly") {
    std::mt19937_64 rng(31);
    const FxpTensor x = random_fxp({6, 6, 4}, rng);
    const FxpKernel k = random_kernel(3, 3, 4, 2, rng);
    const LayerSpec spec = LayerSpec::conv(3, 2);
    const FxpTensor ref = conv2d(x, k, spec);
    for (int g = 1; g < 4; ++g) CHECK(combine_partials(channel_split_conv(x, k, spec, g)) == ref);

    const auto zero = channel_split_conv(FxpTensor::zeros({6, 6, 4}), k, spec, 2);
    for (auto v : zero.leading.values) CHECK(v == 0);
    for (auto v : zero.trailing.values) CHECK(v == 0);
    CHECK(combine_partials(zero) == FxpTensor::zeros({6, 6, 2}));

    CHECK_THROWS(channel_split_conv(x, k, spec, 0));
    CHECK_THROWS(channel_split_conv(x, k, spec, 4));
}

TEST_CASE("grouped convolution") {
    std::mt19937_64 rng(37);
    const FxpTensor x = random_fxp({4, 4, 4}, rng);
    const FxpKernel k1 = random_kernel(3, 3, 4, 4, rng);
    CHECK(grouped_conv2d(x, k1, LayerSpec::conv(3, 4)) == conv2d(x, k1, LayerSpec::conv(3, 4)));

    const FxpKernel k2 = random_kernel(3, 3, 2, 4, rng);
    const LayerSpec g2 = LayerSpec::conv(3, 4, 1, Padding::Same, 2);
    const FxpTensor a = conv2d(channel_slice(x, 0, 2), kernel_filter_slice(k2, 0, 2), LayerSpec::conv(3, 2));
    const FxpTensor b = conv2d(channel_slice(x, 2, 2), kernel_filter_slice(k2, 2, 2), LayerSpec::conv(3, 2));
    const std::vector<FxpTensor> parts{a, b};
    CHECK(grouped_conv2d(x, k2, g2) == concat_channels(parts));
    CHECK(conv2d(x, k2, g2) == concat_channels(parts));
    CHECK_THROWS(grouped_conv2d(x, random_kernel(3, 3, 2, 3, rng), LayerSpec::conv(3, 3, 1, Padding::Same, 2)));
}

TEST_CASE("pooling, add, shuffle") {
    FxpTensor x = FxpTensor::zeros({2, 2, 1});
    x.values = {1, -4, 7, 2};
    CHECK(max_pool(x, LayerSpec::max_pool(2, 2)).values == std::vector<std::int8_t>{7});
    CHECK(avg_pool(x, LayerSpec::avg_pool(2, 2)).values == std::vector<std::int8_t>{1});
    x.values = {1, -4, -7, 2};
    CHECK(avg_pool(x, LayerSpec::avg_pool(2, 2)).values == std::vector<std::int8_t>{-2});

    FxpTensor a = FxpTensor::zeros({1, 1, 2});
    a.values = {100, -100};
    CHECK(add_saturate(a, a).values == std::vector<std::int8_t>{127, -128});

    FxpTensor s = FxpTensor::zeros({1, 1, 6});
    s.values = {0, 1, 2, 3, 4, 5};
    CHECK(channel_shuffle(s, 2).values == std::vector<std::int8_t>{0, 3, 1, 4, 2, 5});
    CHECK(channel_shuffle(s, 3).values == std::vector<std::int8_t>{0, 2, 4, 1, 3, 5});
    CHECK(channel_slice(s, 2, 3).values == std::vector<std::int8_t>{2, 3, 4});
}

TEST_CASE("execute_graph examples") {
    const auto one = infer_shapes(ModelGraph::build("one", {5, 5, 3}, {{"c", LayerSpec::conv(3, 2), {"input"}}}));
    const auto w = random_weights(one, 9);
    const auto x = random_tensor(one.input_shape(), 10);
    CHECK(execute_graph(one, x, w) == conv2d(x, w.at("c"), LayerSpec::conv(3, 2)));

    const auto fire = fire_module({{8, 8, 12}, 4, 6, 5});
    CHECK(execute_graph(fire, random_tensor(fire.input_shape(), 1), random_weights(fire, 2)).shape.c == 11);

    const auto chain = infer_shapes(ModelGraph::build(
        "id", {3, 3, 4}, {{"a", LayerSpec::pointwise(4), {"input"}}, {"b", LayerSpec::pointwise(4), {"a"}}}));
    WeightStore idw;
    for (const char* id : {"a", "b"}) {
        FxpKernel k = FxpKernel::zeros(1, 1, 4, 4);
        for (int c = 0; c < 4; ++c) k.values[k.offset(0, 0, c, c)] = 64;
        idw.emplace(id, k);
    }
    const auto xi = random_tensor(chain.input_shape(), 4);
    CHECK(execute_graph(chain, xi, idw) == xi);

    WeightStore missing = idw;
    missing.erase("b");
    CHECK_THROWS_AS(execute_graph(chain, xi, missing), SemanticError);
    CHECK_THROWS_AS(execute_graph(chain, random_tensor({3, 3, 5}, 1), idw), ShapeError);
    WeightStore misshapen = idw;
    misshapen["a"] = FxpKernel::zeros(1, 1, 3, 4);
    CHECK_THROWS_AS(execute_graph(chain, xi, misshapen), ShapeError);
}

TEST_CASE("execute_plan examples") {
    const auto g = infer_shapes(ModelGraph::build("chain", {6, 6, 4},
                                                  {{"a", LayerSpec::conv(3, 4), {"input"}},
                                                   {"b", LayerSpec::conv(3, 4), {"a"}},
                                                   {"c", LayerSpec::pointwise(3), {"b"}}}));
    const auto w = random_weights(g, 5);
    const auto x = random_tensor(g.input_shape(), 6);
    const auto ref = execute_graph(g, x, w);
    CHECK(execute_plan(g, all_gpu_plan(g), x, w) == ref);

    PartitionPlan split = all_gpu_plan(g);
    split.decisions[1] = PartitionDecision::channel_split(2);
    CHECK(execute_plan(g, split, x, w) == ref);

    PartitionPlan fused = all_gpu_plan(g);
    for (auto& d : fused.decisions) d = PartitionDecision::fpga_whole(0);
    CHECK(execute_plan(g, fused, x, w) == ref);

    PartitionPlan bad = all_gpu_plan(g);
    bad.decisions[0] = PartitionDecision::channel_split(7);
    CHECK_THROWS_AS(execute_plan(g, bad, x, w), SemanticError);
}

TEST_CASE("execution is deterministic") {
    const auto g = shufflenet_unit({{8, 8, 8}});
    const auto a = execute_graph(g, random_tensor(g.input_shape(), 3), random_weights(g, 4));
    const auto b = execute_graph(g, random_tensor(g.input_shape(), 3), random_weights(g, 4));
    CHECK(a == b);
    CHECK(random_weights(g, 4) == random_weights(g, 4));
    CHECK(random_tensor({3, 3, 3}, 1) != random_tensor({3, 3, 3}, 2));
}

TEST_CASE("binary tensor and weight formats") {
    FxpTensor t = FxpTensor::zeros({1, 2, 1}, 5);
    t.values = {-1, 2};
    const std::string bytes = encode_tensor(t);
    const std::string expected("HPT1\x01\0\0\0\x02\0\0\0\x01\0\0\0\x05\0\0\0\xff\x02", 22);
    CHECK(bytes == expected);
    CHECK(decode_tensor(bytes) == t);
    CHECK_THROWS_AS(decode_tensor(bytes.substr(0, 21)), SyntaxError);
    CHECK_THROWS_AS(decode_tensor(bytes + "x"), SyntaxError);
    CHECK_THROWS_AS(decode_tensor("XXXX" + bytes.substr(4)), SyntaxError);

    const auto g = bottleneck_module({{6, 6, 4}, 2, 4, 1});
    const auto w = random_weights(g, 77);
    CHECK(decode_weights(encode_weights(w)) == w);
    CHECK_THROWS_AS(decode_weights(encode_weights(w).substr(0, 30)), SyntaxError);
}
