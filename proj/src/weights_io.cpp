#include "weights_io.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "errors.hpp"
#include "io_util.hpp"

namespace advsal {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'W', '1'};

void write_params(ByteWriter& w, const LayerParams& p) {
  for (double v : p.weight.data()) w.f32(static_cast<float>(v));
  for (double v : p.bias) w.f32(static_cast<float>(v));
}

LayerParams read_params(ByteReader& r, Shape ws) {
  Tensor weight(ws);
  for (double& v : weight.data()) v = r.f32();
  std::vector<double> bias(ws.n);
  for (double& v : bias) v = r.f32();
  for (double v : weight.data()) {
    if (!std::isfinite(v)) throw FormatError("SMW1: non-finite weight");
  }
  for (double v : bias) {
    if (!std::isfinite(v)) throw FormatError("SMW1: non-finite bias");
  }
  return LayerParams{std::move(weight), std::move(bias)};
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw InvalidArgument("SMW1: value exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const ModelGraph& model) {
  ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kMagic), 4));
  w.u32(kWeightFormatVersion);
  w.u32(checked_u32(model.num_layers()));
  const Shape& in = model.input_shape();
  w.u32(checked_u32(in.c));
  w.u32(checked_u32(in.h));
  w.u32(checked_u32(in.w));
  for (std::size_t i = 0; i < model.num_layers(); ++i) {
    const LayerSpec& spec = model.specs()[i];
    const LayerParams& p = model.params()[i];
    w.u8(static_cast<std::uint8_t>(spec.kind));
    switch (spec.kind) {
      case LayerKind::Conv: {
        const Shape& ws = p.weight.shape();
        w.u32(checked_u32(spec.stride));
        w.u32(checked_u32(spec.padding));
        w.u32(4);
        w.u32(checked_u32(ws.n));
        w.u32(checked_u32(ws.c));
        w.u32(checked_u32(ws.h));
        w.u32(checked_u32(ws.w));
        write_params(w, p);
        break;
      }
      case LayerKind::MaxPool:
        w.u32(checked_u32(spec.pool));
        w.u32(checked_u32(spec.stride));
        break;
      case LayerKind::Dense:
        w.u32(2);
        w.u32(checked_u32(p.weight.shape().n));
        w.u32(checked_u32(p.weight.shape().c));
        write_params(w, p);
        break;
      case LayerKind::ReLU:
      case LayerKind::Flatten: break;
    }
  }
  return w.take();
}

ModelGraph decode_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "SMW1");
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("SMW1: bad magic (not a weight file)");
  }
  const std::uint32_t version = r.u32();
  if (version != kWeightFormatVersion) {
    throw FormatError("SMW1: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kWeightFormatVersion) + ")");
  }
  const std::uint32_t layers = r.u32();
  Shape input{1, r.u32(), r.u32(), r.u32()};
  std::vector<LayerSpec> specs;
  std::vector<LayerParams> params;
  for (std::uint32_t i = 0; i < layers; ++i) {
    const std::uint8_t tag = r.u8();
    const std::string where = "SMW1 layer " + std::to_string(i);
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::Conv: {
        const std::uint32_t stride = r.u32();
        const std::uint32_t padding = r.u32();
        if (r.u32() != 4) throw FormatError(where + ": conv weights must have rank 4");
        Shape ws{r.u32(), r.u32(), r.u32(), r.u32()};
        specs.push_back(LayerSpec::conv(ws.n, ws.h, ws.w, stride, padding));
        params.push_back(read_params(r, ws));
        break;
      }
      case LayerKind::MaxPool: {
        const std::uint32_t size = r.u32();
        const std::uint32_t stride = r.u32();
        specs.push_back(LayerSpec::maxpool(size, stride));
        params.emplace_back();
        break;
      }
      case LayerKind::Dense: {
        if (r.u32() != 2) throw FormatError(where + ": dense weights must have rank 2");
        const std::uint32_t units = r.u32();
        const std::uint32_t fan_in = r.u32();
        specs.push_back(LayerSpec::dense(units));
        params.push_back(read_params(r, Shape{units, fan_in, 1, 1}));
        break;
      }
      case LayerKind::ReLU:
        specs.push_back(LayerSpec::relu());
        params.emplace_back();
        break;
      case LayerKind::Flatten:
        specs.push_back(LayerSpec::flatten());
        params.emplace_back();
        break;
      default: throw FormatError(where + ": unknown layer kind tag " + std::to_string(tag));
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("SMW1: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  try {
    return ModelGraph(input, std::move(specs), std::move(params));
  } catch (const ShapeError& e) {
    throw FormatError(std::string("SMW1: layer specs inconsistent with weights: ") + e.what());
  }
}

void save_weights(const ModelGraph& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_weights(model));
}

ModelGraph load_weights(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_weights(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ModelGraph round_to_float32(const ModelGraph& model) {
  std::vector<LayerParams> params = model.params();
  for (auto& p : params) {
    for (double& v : p.weight.data()) v = static_cast<float>(v);
    for (double& v : p.bias) v = static_cast<float>(v);
  }
  return model.with_params(std::move(params));
}

}  // namespace advsal
