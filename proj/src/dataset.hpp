#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace advsal {

// Labelled images with 8-bit pixels. Pixel byte b is exposed as b / 255.
class Dataset {
 public:
  Dataset() = default;
  // `item` gives C, H, W (n ignored); pixels are channel-planar per image.
  Dataset(Shape item, std::vector<std::uint8_t> pixels, std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const Shape& item_shape() const noexcept { return item_; }
  std::size_t num_classes() const noexcept { return classes_; }

  int label(std::size_t i) const { return labels_.at(i); }
  const std::vector<int>& labels() const noexcept { return labels_; }

  std::span<const std::uint8_t> raw_image(std::size_t i) const;
  Tensor image(std::size_t i) const;
  Tensor batch(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;

  // Mean pixel value of each channel over the whole dataset.
  const std::vector<double>& channel_means() const noexcept { return means_; }

  Dataset subset(std::span<const std::size_t> indices) const;
  // First `count` items (all if count exceeds size).
  Dataset head(std::size_t count) const;

 private:
  Shape item_{};
  std::vector<std::uint8_t> pixels_;
  std::vector<int> labels_;
  std::vector<double> means_;
  std::size_t classes_ = 0;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

Dataset ingest_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

inline constexpr std::size_t kCifarRecordBytes = 3073;

Dataset ingest_cifar10_binary(const std::filesystem::path& path);
Dataset ingest_cifar10_binary(std::span<const std::filesystem::path> paths);
Dataset decode_cifar10(std::span<const std::uint8_t> bytes);

// Inverse of decode_cifar10 for one item: label byte followed by 3072 pixels.
std::vector<std::uint8_t> encode_cifar10_record(const Dataset& ds, std::size_t index);

}  // namespace advsal
