#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "model.hpp"
#include "saliency.hpp"

namespace advsal {

// Fraction of positions where the two masks agree.
double sim_ratio(const FilterMask& a, const FilterMask& b);

// |avg_a - avg_b| / max(|avg_a|, |avg_b|) over signed raw values, capped at 1;
// 0 when both averages are 0.
double avg_diff(const SaliencyMap& a, const SaliencyMap& b);

// Cosine of the angle between two maps viewed as flat vectors. Two all-zero
// maps give 1; one all-zero map gives 0.
double cosine_similarity(const Tensor& a, const Tensor& b);

struct PairAnalysis {
  std::size_t image_index = 0;
  std::size_t class_k = 0;  // top-1 predicted class
  std::size_t class_m = 0;  // runner-up
  double sim_ratio = 0.0;
  double avg_diff = 0.0;
};

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;

  static Histogram of(std::span<const double> values, std::size_t bins, double lo = 0.0,
                      double hi = 1.0);
};

struct PairAnalysisReport {
  std::vector<PairAnalysis> pairs;
  Histogram sim_ratio_hist;
  Histogram avg_diff_hist;

  double mean_sim_ratio() const;
  double avg_diff_spread() const;  // max - min
};

// Guided maps for the top-2 predicted classes of the first `count` items.
PairAnalysisReport pair_analysis(const ModelGraph& model, const Dataset& data, std::size_t count,
                                 std::size_t bins = 10);

enum class PerturbMode { DatasetMean, UniformNoise };

// Spatial positions ordered by descending channel-summed |saliency|, ties to
// the lower index.
std::vector<std::size_t> pixel_ranking(const Tensor& map);

// Number of positions perturbed for fraction p out of `pixels`: ceil(p * pixels).
std::size_t perturb_count(double fraction, std::size_t pixels);

// Replaces the first perturb_count(fraction) ranked positions in every
// channel, with the channel mean or with U[0,1) noise drawn from `seed`.
Tensor perturb_ranked(const Tensor& image, std::span<const std::size_t> ranking, double fraction,
                      PerturbMode mode, std::uint64_t seed, std::span<const double> channel_means);

Tensor perturb_top_fraction(const Tensor& image, const SaliencyMap& map, double fraction,
                            PerturbMode mode, std::uint64_t seed,
                            std::span<const double> channel_means);

enum class SaliencySource { EnhancedGuided, Guided, Vanilla, RandomBaseline };

const char* source_name(SaliencySource s) noexcept;

struct RecoveryCurve {
  SaliencySource source = SaliencySource::RandomBaseline;
  std::vector<double> fractions;
  std::vector<double> accuracies;

  // Mean accuracy over all fractions.
  double mean_accuracy() const;
};

struct RecoveryOptions {
  PerturbMode mode = PerturbMode::DatasetMean;
  std::uint64_t seed = 0;
  Normalization enhanced_normalization = Normalization::ChannelEnergy;
};

// For each successful attack in `corpus`, ranks pixels by the saliency of the
// (wrong) predicted class, perturbs the top fraction and measures accuracy
// against the true labels. Throws EmptyInputError when no attack succeeded.
RecoveryCurve recovery_curve(const ModelGraph& model, const AdversarialCorpus& corpus,
                             SaliencySource source, std::span<const double> fractions,
                             std::span<const double> channel_means,
                             const RecoveryOptions& options = {});

struct CaseMap {
  std::size_t variant = 0;  // 0 = clean image, i = i-th adversarial result
  int predicted = 0;
  bool success = false;  // always false for the clean variant
  SaliencyMethod method = SaliencyMethod::Vanilla;
  SaliencyMap map;
};

struct CaseReport {
  int clean_prediction = 0;
  std::vector<CaseMap> maps;  // (1 + #attacks) x #methods, variant-major
};

// Saliency of the predicted class for the clean image and each adversarial
// variant. Enhanced maps contrast against the runner-up logit.
CaseReport adv_case_report(const ModelGraph& model, const Tensor& clean_image,
                           std::span<const AdversarialResult> adversarial,
                           std::span<const SaliencyMethod> methods,
                           Normalization scheme = Normalization::ChannelEnergy);

struct DiscriminativityRow {
  std::size_t dataset_index = 0;
  int label = 0;
  int clean_prediction = 0;
  int adversarial_prediction = 0;
  double cos_enhanced = 0.0;
  double cos_guided = 0.0;
};

struct DiscriminativityReport {
  std::vector<DiscriminativityRow> rows;
  double mean_cos_enhanced = 0.0;
  double mean_cos_guided = 0.0;
};

// Cosine similarity of clean vs adversarial maps (each for its own predicted
// class) over the successful attacks in `corpus`.
DiscriminativityReport adversary_discriminativity(const ModelGraph& model, const Dataset& clean,
                                                  const AdversarialCorpus& corpus,
                                                  Normalization scheme =
                                                      Normalization::ChannelEnergy);

}  // namespace advsal
