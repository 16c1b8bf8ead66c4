#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace advsal {

// How ReLU layers treat the upstream signal during a backward pass.
enum class BackwardRule {
  VanillaGradient,  // pass where pre-activation > 0
  Guided,           // pass where pre-activation > 0 and upstream > 0
};

// Conv2d ---------------------------------------------------------------------

// Kernel layout is (C_out, C_in, kH, kW); bias holds C_out values.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                      std::size_t stride, std::size_t padding);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  std::vector<double> bias;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& upstream,
                            std::size_t stride, std::size_t padding);

// Shape of conv2d_forward's output; throws ShapeError on incompatible extents.
Shape conv2d_output_shape(const Shape& input, const Shape& kernel, std::size_t stride,
                          std::size_t padding);

// ReLU -----------------------------------------------------------------------

Tensor relu_forward(const Tensor& input);

Tensor relu_backward(const Tensor& upstream, const Tensor& preactivation, BackwardRule rule);

// MaxPool --------------------------------------------------------------------

Shape maxpool_output_shape(const Shape& input, std::size_t size, std::size_t stride);

Tensor maxpool_forward(const Tensor& input, std::size_t size, std::size_t stride);

// Routes each upstream value to the first (lowest linear index) maximum of its
// window in `input`.
Tensor maxpool_backward(const Tensor& upstream, const Tensor& input, std::size_t size,
                        std::size_t stride);

// Dense ----------------------------------------------------------------------

// Treats each batch item as a flat vector of C*H*W features. Weight layout is
// (out, in, 1, 1). Output is (N, out, 1, 1).
Tensor dense_forward(const Tensor& input, const Tensor& weight, std::span<const double> bias);

struct DenseGrads {
  Tensor input;
  Tensor weight;
  std::vector<double> bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream);

// Softmax / cross-entropy ----------------------------------------------------

// Per-item softmax over the C*H*W values, max-subtracted.
Tensor softmax(const Tensor& logits);

// Vector-Jacobian product of softmax: given p = softmax(z) and dL/dp, returns dL/dz.
Tensor softmax_backward(const Tensor& probs, const Tensor& upstream);

inline constexpr double kLogClamp = 1e-12;

// Mean over the batch of -log(max(p[label], 1e-12)).
double cross_entropy_loss(const Tensor& probs, std::span<const int> labels);

// dL/dp for cross_entropy_loss.
Tensor cross_entropy_backward(const Tensor& probs, std::span<const int> labels);

// dL/dz for cross_entropy_loss(softmax(z)): (p - onehot) / N.
Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels);

}  // namespace advsal
