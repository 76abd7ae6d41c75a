#pragma once

#include "hetplan/model_ir.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hetplan {

// Line-oriented model description; grammar in docs/formats.md.
//
//   model fire
//   input 56 56 96
//   squeeze pointwise n=16 <- input
//   expand1 pointwise n=64 <- squeeze
//   expand3 conv k=3 n=64 stride=1 padding=same groups=1 <- squeeze
//   out concat <- expand1 expand3
//
// Returns a validated graph with shapes inferred. Throws SyntaxError for
// malformed lines and SemanticError / ShapeError for invalid graphs.
ModelGraph parse_model(std::string_view text, std::string default_name = "model");
ModelGraph load_model_file(const std::filesystem::path& path);

// Canonical text form; parse_model(serialize_model(g)) == g for any
// shape-inferred graph.
std::string serialize_model(const ModelGraph& graph);

}  // namespace hetplan
