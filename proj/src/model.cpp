#include "model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "errors.hpp"

namespace advsal {

const char* layer_kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv(std::size_t filters, std::size_t kh, std::size_t kw, std::size_t stride,
                          std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.units = filters;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t size, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.pool = size;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.units = units;
  return s;
}

Shape expected_weight_shape(const LayerSpec& spec, const Shape& in) {
  switch (spec.kind) {
    case LayerKind::Conv: return Shape{spec.units, in.c, spec.kernel_h, spec.kernel_w};
    case LayerKind::Dense: return Shape{spec.units, in.per_item(), 1, 1};
    default: return Shape{};
  }
}

namespace {

Shape layer_output_shape(const LayerSpec& spec, const Shape& in, std::size_t index) {
  const std::string where = "layer " + std::to_string(index) + " (" +
                            layer_kind_name(spec.kind) + ")";
  try {
    switch (spec.kind) {
      case LayerKind::Conv:
        if (spec.units == 0) throw ShapeError("zero filters");
        return conv2d_output_shape(in, expected_weight_shape(spec, in), spec.stride, spec.padding);
      case LayerKind::ReLU: return in;
      case LayerKind::MaxPool: return maxpool_output_shape(in, spec.pool, spec.stride);
      case LayerKind::Flatten: return Shape{in.n, in.per_item(), 1, 1};
      case LayerKind::Dense:
        if (spec.units == 0) throw ShapeError("zero units");
        return Shape{in.n, spec.units, 1, 1};
    }
  } catch (const ShapeError& e) {
    throw ShapeError(where + ": " + e.what());
  }
  throw ShapeError(where + ": unknown layer kind");
}

}  // namespace

ModelGraph::ModelGraph(Shape input, std::vector<LayerSpec> specs, std::vector<LayerParams> params)
    : input_(input), specs_(std::move(specs)), params_(std::move(params)) {
  input_.n = 1;
  if (input_.per_item() == 0) throw ShapeError("model input extents must be positive");
  if (params_.size() != specs_.size()) {
    throw ShapeError("model has " + std::to_string(specs_.size()) + " layers but " +
                     std::to_string(params_.size()) + " parameter slots");
  }
  Shape cur = input_;
  outputs_.reserve(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& spec = specs_[i];
    const LayerParams& p = params_[i];
    if (spec.parametric()) {
      const Shape ws = expected_weight_shape(spec, cur);
      if (p.weight.shape() != ws || p.bias.size() != spec.units) {
        throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(spec.kind) +
                         "): expected weight " + to_string(ws) + " and " +
                         std::to_string(spec.units) + " biases, got " +
                         to_string(p.weight.shape()) + " and " + std::to_string(p.bias.size()));
      }
    } else if (!p.weight.empty() || !p.bias.empty()) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(spec.kind) +
                       ") carries parameters but is not parametric");
    }
    cur = layer_output_shape(spec, cur, i);
    outputs_.push_back(cur);
  }
  classes_ = cur.per_item();
}

ModelGraph ModelGraph::initialized(Shape input, std::vector<LayerSpec> specs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LayerParams> params(specs.size());
  Shape cur = input;
  cur.n = 1;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& spec = specs[i];
    if (spec.parametric()) {
      const Shape ws = expected_weight_shape(spec, cur);
      const double receptive = static_cast<double>(ws.h * ws.w);
      const double fan_in = static_cast<double>(ws.c) * receptive;
      const double fan_out = static_cast<double>(ws.n) * receptive;
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      Tensor w(ws);
      for (double& v : w.data()) v = dist(rng);
      params[i] = LayerParams{std::move(w), std::vector<double>(spec.units, 0.0)};
    }
    cur = layer_output_shape(spec, cur, i);
  }
  return ModelGraph(input, std::move(specs), std::move(params));
}

ModelGraph ModelGraph::with_params(std::vector<LayerParams> params) const {
  return ModelGraph(input_, specs_, std::move(params));
}

void ModelGraph::check_input(const Tensor& input) const {
  const Shape& s = input.shape();
  if (s.n == 0 || s.c != input_.c || s.h != input_.h || s.w != input_.w) {
    throw ShapeError("input " + to_string(s) + " does not match model input Nx" +
                     std::to_string(input_.c) + "x" + std::to_string(input_.h) + "x" +
                     std::to_string(input_.w));
  }
}

void Tape::record(std::size_t layer, const Tensor& input) {
  if (inputs_.size() <= layer) inputs_.resize(layer + 1);
  inputs_[layer] = input;
}

const Tensor& Tape::input_of(std::size_t layer) const {
  if (layer >= inputs_.size() || !inputs_[layer]) {
    throw InvalidArgument("tape holds no value for layer " + std::to_string(layer));
  }
  return *inputs_[layer];
}

Tensor forward(const ModelGraph& model, const Tensor& input, Tape* tape) {
  model.check_input(input);
  if (tape) {
    tape->clear();
    tape->set_model_input_shape(input.shape());
  }
  Tensor cur = input;
  const auto& specs = model.specs();
  const auto& params = model.params();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& spec = specs[i];
    if (tape && spec.kind != LayerKind::Flatten) tape->record(i, cur);
    switch (spec.kind) {
      case LayerKind::Conv:
        cur = conv2d_forward(cur, params[i].weight, params[i].bias, spec.stride, spec.padding);
        break;
      case LayerKind::ReLU: cur = relu_forward(cur); break;
      case LayerKind::MaxPool: cur = maxpool_forward(cur, spec.pool, spec.stride); break;
      case LayerKind::Flatten: {
        const Shape s = cur.shape();
        cur = cur.reshaped(Shape{s.n, s.per_item(), 1, 1});
        break;
      }
      case LayerKind::Dense: cur = dense_forward(cur, params[i].weight, params[i].bias); break;
    }
  }
  const Shape s = cur.shape();
  cur = cur.reshaped(Shape{s.n, s.per_item(), 1, 1});
  require_finite(cur, "forward");
  return cur;
}

Tensor backward(const ModelGraph& model, const Tape& tape, const Tensor& seed, BackwardRule rule,
                ParamGrads* grads) {
  const auto& specs = model.specs();
  const auto& params = model.params();
  if (tape.size() == 0 && !specs.empty()) throw InvalidArgument("backward: empty tape");
  const std::size_t batch = tape.model_input_shape().n;
  require_same_shape(seed.shape(), Shape{batch, model.num_classes(), 1, 1}, "backward seed");

  if (grads) {
    grads->assign(specs.size(), LayerParams{});
  }
  // Bring the seed back to the last layer's native output extents.
  Tensor g = specs.empty() ? seed : seed.reshaped([&] {
    Shape s = model.layer_outputs().back();
    s.n = batch;
    return s;
  }());
  for (std::size_t idx = specs.size(); idx-- > 0;) {
    const LayerSpec& spec = specs[idx];
    switch (spec.kind) {
      case LayerKind::Conv: {
        Conv2dGrads cg = conv2d_backward(tape.input_of(idx), params[idx].weight, g, spec.stride,
                                         spec.padding);
        if (grads) (*grads)[idx] = LayerParams{std::move(cg.kernel), std::move(cg.bias)};
        g = std::move(cg.input);
        break;
      }
      case LayerKind::ReLU: g = relu_backward(g, tape.input_of(idx), rule); break;
      case LayerKind::MaxPool:
        g = maxpool_backward(g, tape.input_of(idx), spec.pool, spec.stride);
        break;
      case LayerKind::Flatten: {
        Shape s = idx == 0 ? model.input_shape() : model.layer_outputs()[idx - 1];
        s.n = batch;
        g = g.reshaped(s);
        break;
      }
      case LayerKind::Dense: {
        DenseGrads dg = dense_backward(tape.input_of(idx), params[idx].weight, g);
        if (grads) (*grads)[idx] = LayerParams{std::move(dg.weight), std::move(dg.bias)};
        g = std::move(dg.input);
        break;
      }
    }
  }
  return g.reshaped(tape.model_input_shape());
}

Tensor backward_to_input(const ModelGraph& model, const Tensor& input, std::size_t class_index,
                         BackwardRule rule, OutputHead head) {
  if (class_index >= model.num_classes()) {
    throw InvalidArgument("class index " + std::to_string(class_index) + " out of range for " +
                          std::to_string(model.num_classes()) + " classes");
  }
  Tape tape;
  const Tensor logits = forward(model, input, &tape);
  const std::size_t batch = input.shape().n;
  Tensor seed;
  if (head == OutputHead::Logit) {
    seed = Tensor(logits.shape());
    for (std::size_t n = 0; n < batch; ++n) seed.at(n, class_index, 0, 0) = 1.0;
  } else {
    std::vector<int> labels(batch, static_cast<int>(class_index));
    // Per-item loss gradients, not the batch mean.
    seed = softmax_cross_entropy_grad(softmax(logits), labels);
    for (double& v : seed.data()) v *= static_cast<double>(batch);
  }
  return backward(model, tape, seed, rule);
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<int> predict(const ModelGraph& model, const Tensor& batch) {
  const Tensor logits = forward(model, batch);
  const std::size_t k = model.num_classes();
  std::vector<int> out(batch.shape().n);
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = static_cast<int>(argmax(logits.data().subspan(n * k, k)));
  }
  return out;
}

std::vector<LayerSpec> reference_specs(Architecture arch) {
  if (arch == Architecture::MnistReference) {
    return {LayerSpec::conv(8, 3, 3, 1, 1),  LayerSpec::relu(), LayerSpec::maxpool(2, 2),
            LayerSpec::conv(16, 3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
            LayerSpec::flatten(),            LayerSpec::dense(10)};
  }
  return {LayerSpec::conv(16, 3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
          LayerSpec::conv(32, 3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
          LayerSpec::conv(32, 3, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2, 2),
          LayerSpec::flatten(),            LayerSpec::dense(10)};
}

Shape reference_input_shape(Architecture arch) {
  return arch == Architecture::MnistReference ? Shape{1, 1, 28, 28} : Shape{1, 3, 32, 32};
}

ModelGraph make_reference_model(Architecture arch, std::uint64_t seed) {
  return ModelGraph::initialized(reference_input_shape(arch), reference_specs(arch), seed);
}

}  // namespace advsal
