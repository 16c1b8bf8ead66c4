#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "layers.hpp"
#include "tensor.hpp"

namespace advsal {

enum class LayerKind : std::uint8_t { Conv = 1, ReLU = 2, MaxPool = 3, Flatten = 4, Dense = 5 };

const char* layer_kind_name(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t units = 0;     // conv filters or dense outputs
  std::size_t kernel_h = 0;  // conv only
  std::size_t kernel_w = 0;
  std::size_t stride = 1;  // conv and pool
  std::size_t padding = 0;
  std::size_t pool = 0;

  static LayerSpec conv(std::size_t filters, std::size_t kh, std::size_t kw,
                        std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t size, std::size_t stride);
  static LayerSpec flatten();
  static LayerSpec dense(std::size_t units);

  bool parametric() const noexcept { return kind == LayerKind::Conv || kind == LayerKind::Dense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Weight tensor and bias vector of one layer; both empty for non-parametric layers.
struct LayerParams {
  Tensor weight;
  std::vector<double> bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// A sequential stack of layers with fixed weights. Values of this type are
// never mutated after construction; training produces new graphs.
class ModelGraph {
 public:
  ModelGraph() = default;

  // Validates that specs chain from `input` (n is ignored) and that each
  // layer's params have the shapes its spec implies.
  ModelGraph(Shape input, std::vector<LayerSpec> specs, std::vector<LayerParams> params);

  // Glorot-uniform weights, zero biases, drawn from a generator seeded with `seed`.
  static ModelGraph initialized(Shape input, std::vector<LayerSpec> specs, std::uint64_t seed);

  ModelGraph with_params(std::vector<LayerParams> params) const;

  // Input extents with n = 1.
  const Shape& input_shape() const noexcept { return input_; }
  std::size_t num_classes() const noexcept { return classes_; }
  std::size_t num_layers() const noexcept { return specs_.size(); }
  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  // Per-layer output extents for a single item.
  const std::vector<Shape>& layer_outputs() const noexcept { return outputs_; }

  // Throws ShapeError unless `input` has the model's per-item extents.
  void check_input(const Tensor& input) const;

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;

 private:
  Shape input_{};
  std::vector<LayerSpec> specs_;
  std::vector<LayerParams> params_;
  std::vector<Shape> outputs_;
  std::size_t classes_ = 0;
};

// Expected weight extents for a parametric layer given its input extents.
Shape expected_weight_shape(const LayerSpec& spec, const Shape& layer_input);

// Per-layer inputs retained by a forward pass for the matching backward pass.
// Layers that need no stored value (Flatten) keep an empty slot.
class Tape {
 public:
  void clear() { inputs_.clear(); }
  void record(std::size_t layer, const Tensor& input);
  const Tensor& input_of(std::size_t layer) const;
  std::size_t size() const noexcept { return inputs_.size(); }
  const Shape& model_input_shape() const noexcept { return model_input_; }
  void set_model_input_shape(const Shape& s) { model_input_ = s; }

 private:
  std::vector<std::optional<Tensor>> inputs_;
  Shape model_input_{};
};

// Pre-softmax logits, shape (N, classes, 1, 1). Clears and fills `tape` if given.
Tensor forward(const ModelGraph& model, const Tensor& input, Tape* tape = nullptr);

// Gradient of the parameters, laid out like ModelGraph::params().
using ParamGrads = std::vector<LayerParams>;

// Backpropagates `seed` (dL/dlogits) through the layers recorded on `tape`.
// ReLU layers follow `rule`. Returns dL/dinput; fills `grads` if non-null.
Tensor backward(const ModelGraph& model, const Tape& tape, const Tensor& seed, BackwardRule rule,
                ParamGrads* grads = nullptr);

enum class OutputHead {
  Logit,  // seed 1 at the selected pre-softmax logit
  Loss,   // cross-entropy of softmax against the selected class
};

// Gradient of the selected scalar head w.r.t. the input, same shape as `input`.
Tensor backward_to_input(const ModelGraph& model, const Tensor& input, std::size_t class_index,
                         BackwardRule rule, OutputHead head = OutputHead::Logit);

// Index of the largest value; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

// Argmax of each item's logits.
std::vector<int> predict(const ModelGraph& model, const Tensor& batch);

enum class Architecture { MnistReference, CifarReference };

std::vector<LayerSpec> reference_specs(Architecture arch);
Shape reference_input_shape(Architecture arch);
ModelGraph make_reference_model(Architecture arch, std::uint64_t seed);

}  // namespace advsal
