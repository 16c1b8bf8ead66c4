#include "layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace advsal {

namespace {

// Output columns [lo, hi) whose input column ox*stride + offset lies in [0, extent).
struct Span1d {
  std::size_t lo;
  std::size_t hi;
};

Span1d valid_range(std::size_t out_extent, std::size_t in_extent, std::size_t stride,
                   std::ptrdiff_t offset) {
  std::ptrdiff_t lo = 0;
  if (offset < 0) {
    const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(stride);
    lo = (-offset + s - 1) / s;
  }
  std::ptrdiff_t hi_incl =
      (static_cast<std::ptrdiff_t>(in_extent) - 1 - offset);
  if (hi_incl < 0) return {0, 0};
  hi_incl /= static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t hi = std::min<std::ptrdiff_t>(hi_incl + 1, static_cast<std::ptrdiff_t>(out_extent));
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void check_labels(const Tensor& probs, std::span<const int> labels, const char* where) {
  const Shape& s = probs.shape();
  if (s.per_item() == 0) throw ShapeError(std::string(where) + ": empty class dimension");
  if (labels.size() != s.n) {
    throw ShapeError(std::string(where) + ": " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(s.n));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= s.per_item()) {
      throw InvalidArgument(std::string(where) + ": label " + std::to_string(l) +
                            " out of range for " + std::to_string(s.per_item()) + " classes");
    }
  }
}

}  // namespace

Shape conv2d_output_shape(const Shape& in, const Shape& k, std::size_t stride,
                          std::size_t padding) {
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (k.c != in.c) {
    throw ShapeError("conv2d: kernel " + to_string(k) + " expects " + std::to_string(k.c) +
                     " input channels, input " + to_string(in) + " has " +
                     std::to_string(in.c));
  }
  const std::size_t ph = in.h + 2 * padding;
  const std::size_t pw = in.w + 2 * padding;
  if (k.h == 0 || k.w == 0 || k.n == 0 || k.h > ph || k.w > pw) {
    throw ShapeError("conv2d: kernel " + to_string(k) + " does not fit input " + to_string(in) +
                     " with padding " + std::to_string(padding));
  }
  return Shape{in.n, k.n, (ph - k.h) / stride + 1, (pw - k.w) / stride + 1};
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                      std::size_t stride, std::size_t padding) {
  const Shape& in = input.shape();
  const Shape& ks = kernel.shape();
  const Shape os = conv2d_output_shape(in, ks, stride, padding);
  if (bias.size() != ks.n) {
    throw ShapeError("conv2d: " + std::to_string(bias.size()) + " biases for " +
                     std::to_string(ks.n) + " output channels");
  }
  Tensor out(os);
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const double* x = input.data().data();
  const double* k = kernel.data().data();
  double* y = out.data().data();
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t co = 0; co < ks.n; ++co) {
      double* yplane = y + (n * os.c + co) * os.plane();
      std::fill(yplane, yplane + os.plane(), bias[co]);
      for (std::size_t ci = 0; ci < in.c; ++ci) {
        const double* xplane = x + (n * in.c + ci) * in.plane();
        for (std::size_t ky = 0; ky < ks.h; ++ky) {
          const Span1d rows = valid_range(os.h, in.h, stride, static_cast<std::ptrdiff_t>(ky) - pad);
          for (std::size_t kx = 0; kx < ks.w; ++kx) {
            const double wv = k[((co * ks.c + ci) * ks.h + ky) * ks.w + kx];
            const auto xoff = static_cast<std::ptrdiff_t>(kx) - pad;
            const Span1d cols = valid_range(os.w, in.w, stride, xoff);
            for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
              const std::size_t iy = oy * stride + ky - padding;
              const double* xrow = xplane + iy * in.w;
              double* yrow = yplane + oy * os.w;
              for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
                yrow[ox] += wv * xrow[static_cast<std::ptrdiff_t>(ox * stride) + xoff];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& upstream,
                            std::size_t stride, std::size_t padding) {
  const Shape& in = input.shape();
  const Shape& ks = kernel.shape();
  const Shape os = conv2d_output_shape(in, ks, stride, padding);
  require_same_shape(upstream.shape(), os, "conv2d_backward upstream");

  Conv2dGrads g{Tensor(in), Tensor(ks), std::vector<double>(ks.n, 0.0)};
  const auto pad = static_cast<std::ptrdiff_t>(padding);
  const double* x = input.data().data();
  const double* k = kernel.data().data();
  const double* dy = upstream.data().data();
  double* dx = g.input.data().data();
  double* dk = g.kernel.data().data();
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t co = 0; co < ks.n; ++co) {
      const double* dyplane = dy + (n * os.c + co) * os.plane();
      double bsum = 0.0;
      for (std::size_t i = 0; i < os.plane(); ++i) bsum += dyplane[i];
      g.bias[co] += bsum;
      for (std::size_t ci = 0; ci < in.c; ++ci) {
        const double* xplane = x + (n * in.c + ci) * in.plane();
        double* dxplane = dx + (n * in.c + ci) * in.plane();
        for (std::size_t ky = 0; ky < ks.h; ++ky) {
          const Span1d rows = valid_range(os.h, in.h, stride, static_cast<std::ptrdiff_t>(ky) - pad);
          for (std::size_t kx = 0; kx < ks.w; ++kx) {
            const std::size_t kidx = ((co * ks.c + ci) * ks.h + ky) * ks.w + kx;
            const double wv = k[kidx];
            const auto xoff = static_cast<std::ptrdiff_t>(kx) - pad;
            const Span1d cols = valid_range(os.w, in.w, stride, xoff);
            double wsum = 0.0;
            for (std::size_t oy = rows.lo; oy < rows.hi; ++oy) {
              const std::size_t iy = oy * stride + ky - padding;
              const double* xrow = xplane + iy * in.w;
              double* dxrow = dxplane + iy * in.w;
              const double* dyrow = dyplane + oy * os.w;
              for (std::size_t ox = cols.lo; ox < cols.hi; ++ox) {
                const auto ix = static_cast<std::ptrdiff_t>(ox * stride) + xoff;
                wsum += dyrow[ox] * xrow[ix];
                dxrow[ix] += dyrow[ox] * wv;
              }
            }
            dk[kidx] += wsum;
          }
        }
      }
    }
  }
  return g;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& preactivation, BackwardRule rule) {
  require_same_shape(upstream.shape(), preactivation.shape(), "relu_backward");
  Tensor out(upstream.shape());
  const auto up = upstream.data();
  const auto pre = preactivation.data();
  auto dst = out.data();
  if (rule == BackwardRule::Guided) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = (up[i] > 0.0 && pre[i] > 0.0) ? up[i] : 0.0;
    }
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = pre[i] > 0.0 ? up[i] : 0.0;
    }
  }
  return out;
}

Shape maxpool_output_shape(const Shape& in, std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw ShapeError("maxpool: size and stride must be positive");
  if (in.h < size || in.w < size) {
    throw ShapeError("maxpool: window " + std::to_string(size) + " larger than input " +
                     to_string(in));
  }
  return Shape{in.n, in.c, (in.h - size) / stride + 1, (in.w - size) / stride + 1};
}

namespace {

// Linear index (within the plane) of the first maximum of one pooling window.
std::size_t window_argmax(const double* plane, std::size_t width, std::size_t y0, std::size_t x0,
                          std::size_t size) {
  std::size_t best = y0 * width + x0;
  double best_v = plane[best];
  for (std::size_t dy = 0; dy < size; ++dy) {
    for (std::size_t dx = 0; dx < size; ++dx) {
      const std::size_t idx = (y0 + dy) * width + x0 + dx;
      if (plane[idx] > best_v) {
        best_v = plane[idx];
        best = idx;
      }
    }
  }
  return best;
}

}  // namespace

Tensor maxpool_forward(const Tensor& input, std::size_t size, std::size_t stride) {
  const Shape& in = input.shape();
  const Shape os = maxpool_output_shape(in, size, stride);
  Tensor out(os);
  for (std::size_t p = 0; p < in.n * in.c; ++p) {
    const double* plane = input.data().data() + p * in.plane();
    double* oplane = out.data().data() + p * os.plane();
    for (std::size_t oy = 0; oy < os.h; ++oy) {
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        oplane[oy * os.w + ox] = plane[window_argmax(plane, in.w, oy * stride, ox * stride, size)];
      }
    }
  }
  return out;
}

Tensor maxpool_backward(const Tensor& upstream, const Tensor& input, std::size_t size,
                        std::size_t stride) {
  const Shape& in = input.shape();
  const Shape os = maxpool_output_shape(in, size, stride);
  require_same_shape(upstream.shape(), os, "maxpool_backward upstream");
  Tensor dx(in);
  for (std::size_t p = 0; p < in.n * in.c; ++p) {
    const double* plane = input.data().data() + p * in.plane();
    const double* dyplane = upstream.data().data() + p * os.plane();
    double* dxplane = dx.data().data() + p * in.plane();
    for (std::size_t oy = 0; oy < os.h; ++oy) {
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        dxplane[window_argmax(plane, in.w, oy * stride, ox * stride, size)] +=
            dyplane[oy * os.w + ox];
      }
    }
  }
  return dx;
}

Tensor dense_forward(const Tensor& input, const Tensor& weight, std::span<const double> bias) {
  const Shape& in = input.shape();
  const Shape& ws = weight.shape();
  if (ws.c * ws.h * ws.w != in.per_item()) {
    throw ShapeError("dense: weight " + to_string(ws) + " expects " +
                     std::to_string(ws.c * ws.h * ws.w) + " features, input " + to_string(in) +
                     " has " + std::to_string(in.per_item()));
  }
  if (bias.size() != ws.n) {
    throw ShapeError("dense: " + std::to_string(bias.size()) + " biases for " +
                     std::to_string(ws.n) + " units");
  }
  const std::size_t fan_in = in.per_item();
  Tensor out(Shape{in.n, ws.n, 1, 1});
  for (std::size_t n = 0; n < in.n; ++n) {
    const double* xrow = input.data().data() + n * fan_in;
    for (std::size_t o = 0; o < ws.n; ++o) {
      const double* wrow = weight.data().data() + o * fan_in;
      double acc = bias[o];
      for (std::size_t i = 0; i < fan_in; ++i) acc += wrow[i] * xrow[i];
      out.at(n, o, 0, 0) = acc;
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, const Tensor& upstream) {
  const Shape& in = input.shape();
  const Shape& ws = weight.shape();
  if (ws.c * ws.h * ws.w != in.per_item()) {
    throw ShapeError("dense_backward: weight " + to_string(ws) + " incompatible with input " +
                     to_string(in));
  }
  require_same_shape(upstream.shape(), Shape{in.n, ws.n, 1, 1}, "dense_backward upstream");
  const std::size_t fan_in = in.per_item();
  DenseGrads g{Tensor(in), Tensor(ws), std::vector<double>(ws.n, 0.0)};
  for (std::size_t n = 0; n < in.n; ++n) {
    const double* xrow = input.data().data() + n * fan_in;
    double* dxrow = g.input.data().data() + n * fan_in;
    for (std::size_t o = 0; o < ws.n; ++o) {
      const double dy = upstream.at(n, o, 0, 0);
      g.bias[o] += dy;
      if (dy == 0.0) continue;
      const double* wrow = weight.data().data() + o * fan_in;
      double* dwrow = g.weight.data().data() + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) {
        dwrow[i] += dy * xrow[i];
        dxrow[i] += dy * wrow[i];
      }
    }
  }
  return g;
}

Tensor softmax(const Tensor& logits) {
  const Shape& s = logits.shape();
  const std::size_t k = s.per_item();
  if (k == 0) throw ShapeError("softmax: empty class dimension");
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    const double* z = logits.data().data() + n * k;
    double* p = out.data().data() + n * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      p[i] = std::exp(z[i] - zmax);
      sum += p[i];
    }
    for (std::size_t i = 0; i < k; ++i) p[i] /= sum;
  }
  return out;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& upstream) {
  require_same_shape(probs.shape(), upstream.shape(), "softmax_backward");
  const Shape& s = probs.shape();
  const std::size_t k = s.per_item();
  Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n) {
    const double* p = probs.data().data() + n * k;
    const double* g = upstream.data().data() + n * k;
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += p[i] * g[i];
    double* dz = out.data().data() + n * k;
    for (std::size_t i = 0; i < k; ++i) dz[i] = p[i] * (g[i] - dot);
  }
  return out;
}

double cross_entropy_loss(const Tensor& probs, std::span<const int> labels) {
  check_labels(probs, labels, "cross_entropy_loss");
  const std::size_t k = probs.shape().per_item();
  double loss = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double p = probs[n * k + static_cast<std::size_t>(labels[n])];
    loss -= std::log(std::max(p, kLogClamp));
  }
  return labels.empty() ? 0.0 : loss / static_cast<double>(labels.size());
}

Tensor cross_entropy_backward(const Tensor& probs, std::span<const int> labels) {
  check_labels(probs, labels, "cross_entropy_backward");
  const std::size_t k = probs.shape().per_item();
  Tensor g(probs.shape());
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::size_t idx = n * k + static_cast<std::size_t>(labels[n]);
    const double p = probs[idx];
    // Below the clamp the loss is constant in p.
    g[idx] = p > kLogClamp ? -inv_n / p : 0.0;
  }
  return g;
}

Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels) {
  check_labels(probs, labels, "softmax_cross_entropy_grad");
  const std::size_t k = probs.shape().per_item();
  Tensor g = probs;
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    g[n * k + static_cast<std::size_t>(labels[n])] -= 1.0;
  }
  for (double& v : g.data()) v *= inv_n;
  return g;
}

}  // namespace advsal
