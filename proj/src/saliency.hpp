#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "model.hpp"
#include "tensor.hpp"

namespace advsal {

enum class SaliencyMethod { Vanilla, Guided, EnhancedGuided };
enum class Normalization { None, MaxValue, Energy, ChannelEnergy };

const char* method_name(SaliencyMethod m) noexcept;
const char* normalization_name(Normalization n) noexcept;

// Per-input-value relevance for one explained class, shaped like one input image.
struct SaliencyMap {
  Tensor values;
  std::size_t explained_class = 0;
  SaliencyMethod method = SaliencyMethod::Vanilla;
  std::optional<std::size_t> contrast_class;
  Normalization normalization = Normalization::None;
  // Channels whose normalization denominator was zero; their values are 0.
  std::vector<std::size_t> degenerate_channels;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;
};

// 1 where the map is strictly positive, 0 elsewhere.
struct FilterMask {
  Tensor values;
  std::size_t count() const noexcept;
};

// Raw gradient map of the class logit; Guided applies the guided ReLU rule.
SaliencyMap compute_saliency(const ModelGraph& model, const Tensor& input,
                             std::size_t class_index, SaliencyMethod method);

FilterMask filtering_mask(const SaliencyMap& map);

// MaxValue divides by the maximum entry. Energy divides every channel by the
// sum of |values| over all channels. ChannelEnergy divides each channel by
// its own sum of |values|. A zero (or, for MaxValue, non-positive)
// denominator yields zeros and records the affected channels.
SaliencyMap normalize(const SaliencyMap& map, Normalization scheme);

// max(0, normalize(k) - normalize(m)) from two already computed raw maps.
SaliencyMap enhance(const SaliencyMap& map_k, const SaliencyMap& map_m, Normalization scheme);

// Guided maps for class_k and class_m, normalized and subtracted.
SaliencyMap enhanced_map(const ModelGraph& model, const Tensor& input, std::size_t class_k,
                         std::size_t class_m, Normalization scheme);

// Highest-logit class other than `explained_class`; ties go to the lower index.
std::size_t select_contrast_class(std::span<const double> logits, std::size_t explained_class);
std::size_t select_contrast_class(const ModelGraph& model, const Tensor& input,
                                  std::size_t explained_class);

}  // namespace advsal
