#pragma once

#include "hetplan/fxp.hpp"
#include "hetplan/fxp_exec.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hetplan {

// Little-endian binary containers (layout in docs/formats.md).
//   tensor:  "HPT1" h w c fraction_bits (int32 each), then h*w*c int8 values
//   weights: "HPW1" count (int32), then per entry: id length (int32), id bytes,
//            kernel_h kernel_w in_channels filters fraction_bits (int32 each),
//            then the kernel values
std::string encode_tensor(const FxpTensor& tensor);
FxpTensor decode_tensor(std::string_view bytes);
std::string encode_weights(const WeightStore& weights);
WeightStore decode_weights(std::string_view bytes);

void save_tensor(const std::filesystem::path& path, const FxpTensor& tensor);
FxpTensor load_tensor(const std::filesystem::path& path);
void save_weights(const std::filesystem::path& path, const WeightStore& weights);
WeightStore load_weights(const std::filesystem::path& path);

}  // namespace hetplan
