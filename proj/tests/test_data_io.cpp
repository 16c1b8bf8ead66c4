#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "io_util.hpp"
#include "model.hpp"
#include "test_util.hpp"
#include "weights_io.hpp"

using namespace advsal;
using namespace advsal::testing;

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                     std::uint8_t fill) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxImageMagic);
  put_be32(out, n);
  put_be32(out, rows);
  put_be32(out, cols);
  for (std::uint32_t i = 0; i < n * rows * cols; ++i) out.push_back(static_cast<std::uint8_t>(fill + i));
  return out;
}

std::vector<std::uint8_t> idx_labels(std::uint32_t n) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxLabelMagic);
  put_be32(out, n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(i % 10));
  return out;
}

std::vector<std::uint8_t> cifar_bytes(std::size_t records, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::uint8_t> out(records * kCifarRecordBytes);
  for (std::size_t r = 0; r < records; ++r) {
    out[r * kCifarRecordBytes] = static_cast<std::uint8_t>(r % 10);
    for (std::size_t i = 1; i < kCifarRecordBytes; ++i) {
      out[r * kCifarRecordBytes + i] = static_cast<std::uint8_t>(byte(rng));
    }
  }
  return out;
}

}  // namespace

// ---- IDX --------------------------------------------------------------------

TEST(Idx, DecodesHeaderAndScalesPixels) {
  auto images = idx_images(3, 2, 2, 250);
  auto labels = idx_labels(3);
  const Dataset d = decode_idx(images, labels);
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.item_shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(d.label(2), 2);
  // Bytes run 250..255 then wrap: pixel byte 255 maps to exactly 1.0.
  EXPECT_EQ(d.image(1)[1], 1.0);
  EXPECT_EQ(d.image(0)[0], 250.0 / 255.0);
  EXPECT_EQ(d.image(1)[2], 0.0);
}

TEST(Idx, RejectsBadMagic) {
  auto images = idx_images(2, 2, 2, 0);
  auto labels = idx_labels(2);
  images[3] = 0x01;
  EXPECT_THROW((void)decode_idx(images, labels), FormatError);
  images = idx_images(2, 2, 2, 0);
  labels[3] = 0x03;
  EXPECT_THROW((void)decode_idx(images, labels), FormatError);
}

TEST(Idx, RejectsCountMismatch) {
  const auto images = idx_images(9999, 1, 1, 0);
  const auto labels = idx_labels(10000);
  try {
    (void)decode_idx(images, labels);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("mismatch"), std::string::npos);
  }
}

TEST(Idx, RejectsTruncation) {
  auto images = idx_images(4, 3, 3, 0);
  auto labels = idx_labels(4);
  images.pop_back();
  EXPECT_THROW((void)decode_idx(images, labels), FormatError);
  images = idx_images(4, 3, 3, 0);
  labels.pop_back();
  EXPECT_THROW((void)decode_idx(images, labels), FormatError);
  EXPECT_THROW((void)decode_idx(std::vector<std::uint8_t>(10), labels), FormatError);
}

TEST(Idx, MissingFileIsIoErrorNamingPath) {
  try {
    (void)ingest_idx("/nonexistent/images", "/nonexistent/labels");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/images"), std::string::npos);
  }
}

TEST(Idx, ShippedDigitProxyLoads) {
  const Dataset train = ingest_idx(digits_dir() / "train-images-idx3-ubyte",
                                   digits_dir() / "train-labels-idx1-ubyte");
  const Dataset test = ingest_idx(digits_dir() / "t10k-images-idx3-ubyte",
                                  digits_dir() / "t10k-labels-idx1-ubyte");
  EXPECT_EQ(train.item_shape(), (Shape{1, 1, 28, 28}));
  EXPECT_EQ(train.size() + test.size(), 1797u);
  EXPECT_EQ(test.size(), 500u);
  EXPECT_EQ(train.num_classes(), 10u);
}

TEST(Dataset, ChannelMeansAndValueRange) {
  const Dataset d = random_dataset(Shape{1, 3, 4, 4}, 6, 4, 1);
  ASSERT_EQ(d.channel_means().size(), 3u);
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Tensor x = d.image(i);
      for (std::size_t h = 0; h < 4; ++h)
        for (std::size_t w = 0; w < 4; ++w) sum += x.at(0, c, h, w);
    }
    EXPECT_NEAR(d.channel_means()[c], sum / (6.0 * 16.0), 1e-12);
  }
  const Tensor all = d.batch(std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  for (double v : all.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Dataset, RejectsPixelLabelMismatch) {
  EXPECT_THROW(Dataset(Shape{1, 1, 2, 2}, std::vector<std::uint8_t>(7), std::vector<int>(2)),
               FormatError);
}

// ---- CIFAR-10 ---------------------------------------------------------------

TEST(Cifar, RecordArithmetic) {
  const auto bytes = cifar_bytes(10, 1);
  ASSERT_EQ(bytes.size(), 30730u);
  const Dataset d = decode_cifar10(bytes);
  EXPECT_EQ(d.size(), 10u);
  EXPECT_EQ(d.item_shape(), (Shape{1, 3, 32, 32}));
  EXPECT_EQ(d.label(9), 9);
}

TEST(Cifar, ChannelPlanarLayout) {
  auto bytes = cifar_bytes(1, 2);
  bytes[1] = 255;            // red (0, 0)
  bytes[1 + 1024] = 0;       // green (0, 0)
  bytes[1 + 2048 + 33] = 51;  // blue (1, 1)
  const Tensor x = decode_cifar10(bytes).image(0);
  EXPECT_EQ(x.at(0, 0, 0, 0), 1.0);
  EXPECT_EQ(x.at(0, 1, 0, 0), 0.0);
  EXPECT_EQ(x.at(0, 2, 1, 1), 51.0 / 255.0);
}

TEST(Cifar, RejectsPartialRecord) {
  auto bytes = cifar_bytes(2, 3);
  bytes.pop_back();
  EXPECT_THROW((void)decode_cifar10(bytes), FormatError);
}

TEST(Cifar, ReencodingReproducesBytes) {
  const auto bytes = cifar_bytes(5, 4);
  const Dataset d = decode_cifar10(bytes);
  std::vector<std::uint8_t> again;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto rec = encode_cifar10_record(d, i);
    again.insert(again.end(), rec.begin(), rec.end());
  }
  EXPECT_EQ(again, bytes);
}

TEST(Cifar, ConcatenatesBatchFiles) {
  TempDir dir("cifar");
  const auto a = cifar_bytes(3, 5);
  const auto b = cifar_bytes(2, 6);
  write_file_atomic(dir / "a.bin", a);
  write_file_atomic(dir / "b.bin", b);
  const std::vector<std::filesystem::path> paths{dir / "a.bin", dir / "b.bin"};
  const Dataset d = ingest_cifar10_binary(paths);
  EXPECT_EQ(d.size(), 5u);
  EXPECT_EQ(encode_cifar10_record(d, 3), std::vector<std::uint8_t>(b.begin(), b.begin() + kCifarRecordBytes));
}

// ---- SMW1 weights -----------------------------------------------------------

TEST(Weights, HeaderStartsWithMagicAndVersion) {
  const auto bytes = encode_weights(tiny_cnn(1));
  ASSERT_GE(bytes.size(), kWeightHeaderBytes);
  EXPECT_EQ(std::memcmp(bytes.data(), "SMW1", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(bytes[8], 8);  // layer count
}

TEST(Weights, EmptyModelIsHeaderOnly) {
  const ModelGraph empty(Shape{1, 1, 1, 10}, {}, {});
  const auto bytes = encode_weights(empty);
  EXPECT_EQ(bytes.size(), kWeightHeaderBytes);
  EXPECT_EQ(decode_weights(bytes), empty);
}

TEST(Weights, SaveLoadSaveIsByteIdentical) {
  TempDir dir("weights");
  for (const ModelGraph& m : {tiny_cnn(3), make_reference_model(Architecture::MnistReference, 4),
                              make_reference_model(Architecture::CifarReference, 5)}) {
    save_weights(m, dir / "a.smw");
    const ModelGraph loaded = load_weights(dir / "a.smw");
    save_weights(loaded, dir / "b.smw");
    EXPECT_EQ(read_file_bytes(dir / "a.smw"), read_file_bytes(dir / "b.smw"));
    EXPECT_EQ(loaded, round_to_float32(m));
    EXPECT_EQ(loaded.specs(), m.specs());
  }
}

TEST(Weights, LoadedModelReproducesFloat32Forward) {
  const ModelGraph m = tiny_cnn(6);
  const ModelGraph loaded = decode_weights(encode_weights(m));
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(Shape{3, 1, 8, 8}, rng, 0, 1);
  EXPECT_EQ(forward(loaded, x), forward(round_to_float32(m), x));
}

TEST(Weights, RejectsCorruption) {
  auto bytes = encode_weights(tiny_cnn(7));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW((void)decode_weights(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW((void)decode_weights(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW((void)decode_weights(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW((void)decode_weights(bad), FormatError);
  bad = bytes;
  bad[kWeightHeaderBytes] = 42;  // first layer tag
  EXPECT_THROW((void)decode_weights(bad), FormatError);
  // Conv record: tag, stride, padding, rank, C_out...; change C_out so the
  // chain no longer fits the following layers.
  bad = bytes;
  bad[kWeightHeaderBytes + 1 + 12] = 2;
  EXPECT_THROW((void)decode_weights(bad), FormatError);
}

TEST(Weights, MissingFileIsIoError) {
  EXPECT_THROW((void)load_weights("/nonexistent/model.smw"), IoError);
}

TEST(AtomicWrite, LeavesNoTemporaryBehind) {
  TempDir dir("atomic");
  write_file_atomic(dir / "x.txt", std::string_view("hello"));
  write_file_atomic(dir / "x.txt", std::string_view("bye"));
  EXPECT_EQ(read_file_bytes(dir / "x.txt"), (std::vector<std::uint8_t>{'b', 'y', 'e'}));
  EXPECT_FALSE(std::filesystem::exists(dir / "x.txt.tmp"));
  EXPECT_THROW(write_file_atomic(dir / "missing" / "x.txt", std::string_view("a")), IoError);
}
