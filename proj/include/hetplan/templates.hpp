#pragma once

#include "hetplan/model_ir.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hetplan {

// Default dimensions follow the 0.5x-width mobile variants; the same values
// ship as editable files under data/models/.

struct FireParams {
    TensorShape input{56, 56, 96};
    int squeeze = 16;
    int expand1x1 = 64;
    int expand3x3 = 64;
};

struct BottleneckParams {
    TensorShape input{56, 56, 16};
    int expansion = 6;
    int out_channels = 16;
    int stride = 1;
};

struct ShuffleUnitParams {
    TensorShape input{28, 28, 48};
};

struct ShuffleDownParams {
    TensorShape input{56, 56, 24};
    int out_channels = 48;
};

// squeeze pointwise -> {expand 1x1 pointwise, expand 3x3 conv} -> concat
ModelGraph fire_module(const FireParams& params = {});

// expand pointwise -> depthwise 3x3 -> project pointwise [-> add residual
// when stride is 1 and channel counts match]
ModelGraph bottleneck_module(const BottleneckParams& params = {});

// channel split in halves; the right half runs pointwise -> depthwise 3x3 ->
// pointwise; concat with the left half; channel shuffle with two groups
ModelGraph shufflenet_unit(const ShuffleUnitParams& params = {});

// spatial-reduction unit: both branches see the whole input and carry a
// stride-2 depthwise conv; concat; shuffle
ModelGraph shufflenet_unit_down(const ShuffleDownParams& params = {});

// Generic entry for the CLI: name is one of builtin_module_names(); params
// override defaults by key (h, w, c for the input; s1/e1/e3 for fire;
// expansion/out/stride for bottleneck; out for shufflenet_unit_down).
ModelGraph builtin_module(std::string_view name, const std::map<std::string, int>& params = {});
std::vector<std::string> builtin_module_names();

}  // namespace hetplan
