#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "model.hpp"

namespace advsal {

// "SMW1" weight file layout (all integers 32-bit little-endian unsigned,
// all reals 32-bit little-endian IEEE-754):
//
//   magic "SMW1" | version | layer count | input C | input H | input W
//   then per layer:
//     kind tag byte
//     Conv:    stride, padding, rank=4, C_out, C_in, kH, kW, weights, biases
//     MaxPool: size, stride
//     Dense:   rank=2, units, fan_in, weights, biases
//     ReLU, Flatten: nothing further
inline constexpr std::uint32_t kWeightFormatVersion = 1;
inline constexpr std::size_t kWeightHeaderBytes = 24;

std::vector<std::uint8_t> encode_weights(const ModelGraph& model);
ModelGraph decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const ModelGraph& model, const std::filesystem::path& path);
ModelGraph load_weights(const std::filesystem::path& path);

// The model with every weight and bias rounded to 32-bit precision, i.e. what
// a save/load round trip yields.
ModelGraph round_to_float32(const ModelGraph& model);

}  // namespace advsal
