#include "dataset.hpp"

#include <algorithm>
#include <string>

#include "errors.hpp"
#include "io_util.hpp"

namespace advsal {

Dataset::Dataset(Shape item, std::vector<std::uint8_t> pixels, std::vector<int> labels)
    : item_(item), pixels_(std::move(pixels)), labels_(std::move(labels)) {
  item_.n = 1;
  if (item_.per_item() == 0) throw ShapeError("dataset item extents must be positive");
  if (pixels_.size() != labels_.size() * item_.per_item()) {
    throw FormatError("dataset: " + std::to_string(pixels_.size()) + " pixel bytes for " +
                      std::to_string(labels_.size()) + " images of " + to_string(item_));
  }
  for (int l : labels_) {
    if (l < 0) throw FormatError("dataset: negative label");
    classes_ = std::max(classes_, static_cast<std::size_t>(l) + 1);
  }
  means_.assign(item_.c, 0.0);
  if (!labels_.empty()) {
    const std::size_t plane = item_.plane();
    for (std::size_t c = 0; c < item_.c; ++c) {
      std::uint64_t sum = 0;
      for (std::size_t i = 0; i < labels_.size(); ++i) {
        const std::uint8_t* p = pixels_.data() + i * item_.per_item() + c * plane;
        for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      }
      means_[c] = static_cast<double>(sum) / 255.0 /
                  static_cast<double>(plane * labels_.size());
    }
  }
}

std::span<const std::uint8_t> Dataset::raw_image(std::size_t i) const {
  if (i >= size()) throw InvalidArgument("dataset index " + std::to_string(i) + " out of range");
  return std::span<const std::uint8_t>(pixels_).subspan(i * item_.per_item(), item_.per_item());
}

Tensor Dataset::image(std::size_t i) const {
  const std::size_t idx[] = {i};
  return batch(idx);
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  Shape s = item_;
  s.n = indices.size();
  Tensor out(s);
  auto dst = out.data();
  std::size_t k = 0;
  for (std::size_t i : indices) {
    for (std::uint8_t b : raw_image(i)) dst[k++] = static_cast<double>(b) / 255.0;
  }
  return out;
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(label(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<std::uint8_t> px;
  px.reserve(indices.size() * item_.per_item());
  for (std::size_t i : indices) {
    auto img = raw_image(i);
    px.insert(px.end(), img.begin(), img.end());
  }
  return Dataset(item_, std::move(px), batch_labels(indices));
}

Dataset Dataset::head(std::size_t count) const {
  std::vector<std::size_t> idx(std::min(count, size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return subset(idx);
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  if (images.size() < 16) throw FormatError("IDX images: truncated header");
  if (labels.size() < 8) throw FormatError("IDX labels: truncated header");
  const std::uint32_t im_magic = read_be32(images, 0);
  if (im_magic != kIdxImageMagic) {
    throw FormatError("IDX images: bad magic number " + std::to_string(im_magic));
  }
  const std::uint32_t lb_magic = read_be32(labels, 0);
  if (lb_magic != kIdxLabelMagic) {
    throw FormatError("IDX labels: bad magic number " + std::to_string(lb_magic));
  }
  const std::size_t n_images = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  const std::size_t n_labels = read_be32(labels, 4);
  if (n_images != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
  }
  const std::size_t need = n_images * rows * cols;
  if (images.size() - 16 < need) {
    throw FormatError("IDX images: truncated, expected " + std::to_string(need) +
                      " pixel bytes, found " + std::to_string(images.size() - 16));
  }
  if (labels.size() - 8 < n_labels) {
    throw FormatError("IDX labels: truncated, expected " + std::to_string(n_labels) +
                      " labels, found " + std::to_string(labels.size() - 8));
  }
  std::vector<std::uint8_t> px(images.begin() + 16, images.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  std::vector<int> lb(labels.begin() + 8, labels.begin() + 8 + static_cast<std::ptrdiff_t>(n_labels));
  return Dataset(Shape{1, 1, rows, cols}, std::move(px), std::move(lb));
}

Dataset ingest_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto im = read_file_bytes(images);
  const auto lb = read_file_bytes(labels);
  try {
    return decode_idx(im, lb);
  } catch (const FormatError& e) {
    throw FormatError(images.string() + ", " + labels.string() + ": " + e.what());
  }
}

Dataset decode_cifar10(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR-10 binary: length " + std::to_string(bytes.size()) +
                      " is not a multiple of " + std::to_string(kCifarRecordBytes));
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  std::vector<std::uint8_t> px;
  px.reserve(n * (kCifarRecordBytes - 1));
  std::vector<int> lb;
  lb.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rec = bytes.subspan(i * kCifarRecordBytes, kCifarRecordBytes);
    lb.push_back(rec[0]);
    px.insert(px.end(), rec.begin() + 1, rec.end());
  }
  return Dataset(Shape{1, 3, 32, 32}, std::move(px), std::move(lb));
}

Dataset ingest_cifar10_binary(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_cifar10(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Dataset ingest_cifar10_binary(std::span<const std::filesystem::path> paths) {
  std::vector<std::uint8_t> all;
  for (const auto& p : paths) {
    auto bytes = read_file_bytes(p);
    if (bytes.size() % kCifarRecordBytes != 0) {
      throw FormatError(p.string() + ": length " + std::to_string(bytes.size()) +
                        " is not a multiple of " + std::to_string(kCifarRecordBytes));
    }
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  return decode_cifar10(all);
}

std::vector<std::uint8_t> encode_cifar10_record(const Dataset& ds, std::size_t index) {
  if (ds.item_shape() != Shape{1, 3, 32, 32}) {
    throw ShapeError("CIFAR-10 record needs 3x32x32 images, dataset has " +
                     to_string(ds.item_shape()));
  }
  const int label = ds.label(index);
  if (label > 255) throw InvalidArgument("CIFAR-10 label does not fit in a byte");
  std::vector<std::uint8_t> rec;
  rec.reserve(kCifarRecordBytes);
  rec.push_back(static_cast<std::uint8_t>(label));
  auto img = ds.raw_image(index);
  rec.insert(rec.end(), img.begin(), img.end());
  return rec;
}

}  // namespace advsal
