#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vqdd/network.hpp"

namespace vqdd {

/// Decodes an ONNX model (protobuf binary) into a Network. The graph must be
/// a single chain over the supported operator subset: MatMul+Add, Gemm, Conv
/// (square kernel, symmetric stride/padding), Relu, Flatten and Reshape.
/// Throws UnsupportedModelError naming the operator for anything else, and
/// InvalidModelError for structurally broken graphs.
Network import_onnx(const std::vector<std::uint8_t>& bytes);

/// Encodes a Network as an ONNX model using the same operator subset.
/// Weights are written as double tensors so the round trip is exact.
std::vector<std::uint8_t> export_onnx(const Network& network);

Network load_onnx(const std::filesystem::path& file);
void save_onnx(const Network& network, const std::filesystem::path& file);

}  // namespace vqdd
