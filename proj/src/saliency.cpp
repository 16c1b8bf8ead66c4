#include "saliency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace advsal {

const char* method_name(SaliencyMethod m) noexcept {
  switch (m) {
    case SaliencyMethod::Vanilla: return "vanilla";
    case SaliencyMethod::Guided: return "guided";
    case SaliencyMethod::EnhancedGuided: return "enhanced";
  }
  return "unknown";
}

const char* normalization_name(Normalization n) noexcept {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::MaxValue: return "max";
    case Normalization::Energy: return "energy";
    case Normalization::ChannelEnergy: return "channel-energy";
  }
  return "unknown";
}

std::size_t FilterMask::count() const noexcept {
  std::size_t n = 0;
  for (double v : values.data()) n += v > 0.0 ? 1 : 0;
  return n;
}

namespace {

void require_single(const Tensor& input, const char* where) {
  if (input.shape().n != 1) {
    throw ShapeError(std::string(where) + ": expects one image, got batch " +
                     to_string(input.shape()));
  }
}

}  // namespace

SaliencyMap compute_saliency(const ModelGraph& model, const Tensor& input,
                             std::size_t class_index, SaliencyMethod method) {
  require_single(input, "compute_saliency");
  if (method == SaliencyMethod::EnhancedGuided) {
    throw InvalidArgument("compute_saliency: use enhanced_map for the enhanced method");
  }
  const BackwardRule rule =
      method == SaliencyMethod::Guided ? BackwardRule::Guided : BackwardRule::VanillaGradient;
  SaliencyMap map;
  map.values = backward_to_input(model, input, class_index, rule, OutputHead::Logit);
  map.explained_class = class_index;
  map.method = method;
  return map;
}

FilterMask filtering_mask(const SaliencyMap& map) {
  FilterMask mask{Tensor(map.values.shape())};
  auto src = map.values.data();
  auto dst = mask.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? 1.0 : 0.0;
  return mask;
}

SaliencyMap normalize(const SaliencyMap& map, Normalization scheme) {
  if (map.normalization != Normalization::None) {
    throw InvalidArgument("normalize: map is already normalized");
  }
  SaliencyMap out = map;
  out.normalization = scheme;
  const Shape& s = map.values.shape();
  const std::size_t plane = s.plane();
  auto v = out.values.data();
  switch (scheme) {
    case Normalization::None: break;
    case Normalization::MaxValue: {
      const double mx = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
      if (!(mx > 0.0)) {
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t c = 0; c < s.c; ++c) out.degenerate_channels.push_back(c);
      } else {
        for (double& x : v) x /= mx;
      }
      break;
    }
    case Normalization::Energy: {
      double energy = 0.0;
      for (double x : v) energy += std::abs(x);
      if (energy == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        for (std::size_t c = 0; c < s.c; ++c) out.degenerate_channels.push_back(c);
      } else {
        for (double& x : v) x /= energy;
      }
      break;
    }
    case Normalization::ChannelEnergy: {
      for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t c = 0; c < s.c; ++c) {
          auto ch = v.subspan((n * s.c + c) * plane, plane);
          double energy = 0.0;
          for (double x : ch) energy += std::abs(x);
          if (energy == 0.0) {
            std::fill(ch.begin(), ch.end(), 0.0);
            out.degenerate_channels.push_back(c);
          } else {
            for (double& x : ch) x /= energy;
          }
        }
      }
      break;
    }
  }
  return out;
}

SaliencyMap enhance(const SaliencyMap& map_k, const SaliencyMap& map_m, Normalization scheme) {
  require_same_shape(map_k.values.shape(), map_m.values.shape(), "enhance");
  if (map_k.explained_class == map_m.explained_class) {
    throw InvalidArgument("enhance: explained and contrast class must differ (both " +
                          std::to_string(map_k.explained_class) + ")");
  }
  const SaliencyMap nk = normalize(map_k, scheme);
  const SaliencyMap nm = normalize(map_m, scheme);
  SaliencyMap out;
  out.values = Tensor(nk.values.shape());
  auto a = nk.values.data();
  auto b = nm.values.data();
  auto d = out.values.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::max(0.0, a[i] - b[i]);
  out.explained_class = map_k.explained_class;
  out.method = SaliencyMethod::EnhancedGuided;
  out.contrast_class = map_m.explained_class;
  out.normalization = scheme;
  out.degenerate_channels = nk.degenerate_channels;
  for (std::size_t c : nm.degenerate_channels) {
    if (std::find(out.degenerate_channels.begin(), out.degenerate_channels.end(), c) ==
        out.degenerate_channels.end()) {
      out.degenerate_channels.push_back(c);
    }
  }
  std::sort(out.degenerate_channels.begin(), out.degenerate_channels.end());
  return out;
}

SaliencyMap enhanced_map(const ModelGraph& model, const Tensor& input, std::size_t class_k,
                         std::size_t class_m, Normalization scheme) {
  if (class_k == class_m) {
    throw InvalidArgument("enhanced_map: explained and contrast class must differ (both " +
                          std::to_string(class_k) + ")");
  }
  if (scheme == Normalization::None) {
    throw InvalidArgument("enhanced_map: a normalization scheme is required");
  }
  const SaliencyMap sk = compute_saliency(model, input, class_k, SaliencyMethod::Guided);
  const SaliencyMap sm = compute_saliency(model, input, class_m, SaliencyMethod::Guided);
  return enhance(sk, sm, scheme);
}

std::size_t select_contrast_class(std::span<const double> logits, std::size_t explained_class) {
  if (logits.size() < 2) throw InvalidArgument("select_contrast_class: needs at least 2 classes");
  if (explained_class >= logits.size()) {
    throw InvalidArgument("select_contrast_class: class " + std::to_string(explained_class) +
                          " out of range");
  }
  std::size_t best = explained_class == 0 ? 1 : 0;
  for (std::size_t i = best + 1; i < logits.size(); ++i) {
    if (i != explained_class && logits[i] > logits[best]) best = i;
  }
  return best;
}

std::size_t select_contrast_class(const ModelGraph& model, const Tensor& input,
                                  std::size_t explained_class) {
  require_single(input, "select_contrast_class");
  const Tensor logits = forward(model, input);
  return select_contrast_class(logits.data(), explained_class);
}

}  // namespace advsal
