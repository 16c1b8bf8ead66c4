#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace advsal {

double sim_ratio(const FilterMask& a, const FilterMask& b) {
  require_same_shape(a.values.shape(), b.values.shape(), "sim_ratio");
  const std::size_t n = a.values.size();
  if (n == 0) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < n; ++i) same += a.values[i] == b.values[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(n);
}

namespace {

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double avg_diff(const SaliencyMap& a, const SaliencyMap& b) {
  require_same_shape(a.values.shape(), b.values.shape(), "avg_diff");
  const double avg_a = mean_of(a.values.data());
  const double avg_b = mean_of(b.values.data());
  const double denom = std::max(std::abs(avg_a), std::abs(avg_b));
  if (denom == 0.0) return 0.0;
  return std::min(1.0, std::abs(avg_a - avg_b) / denom);
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "cosine_similarity");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Histogram Histogram::of(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram: bad binning");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    auto bin = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(bin)];
  }
  return h;
}

double PairAnalysisReport::mean_sim_ratio() const {
  if (pairs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : pairs) s += p.sim_ratio;
  return s / static_cast<double>(pairs.size());
}

double PairAnalysisReport::avg_diff_spread() const {
  if (pairs.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    return x.avg_diff < y.avg_diff;
  });
  return hi->avg_diff - lo->avg_diff;
}

PairAnalysisReport pair_analysis(const ModelGraph& model, const Dataset& data, std::size_t count,
                                 std::size_t bins) {
  if (model.num_classes() < 2) throw InvalidArgument("pair_analysis: needs at least 2 classes");
  const std::size_t n = std::min(count, data.size());
  PairAnalysisReport report;
  report.pairs.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const Tensor x = data.image(i);
    const Tensor logits = forward(model, x);
    const std::size_t k = argmax(logits.data());
    const std::size_t m = select_contrast_class(logits.data(), k);
    const SaliencyMap sk = compute_saliency(model, x, k, SaliencyMethod::Guided);
    const SaliencyMap sm = compute_saliency(model, x, m, SaliencyMethod::Guided);
    report.pairs[i] = PairAnalysis{i, k, m, sim_ratio(filtering_mask(sk), filtering_mask(sm)),
                                   avg_diff(sk, sm)};
  });
  std::vector<double> sims;
  std::vector<double> diffs;
  for (const auto& p : report.pairs) {
    sims.push_back(p.sim_ratio);
    diffs.push_back(p.avg_diff);
  }
  report.sim_ratio_hist = Histogram::of(sims, bins);
  report.avg_diff_hist = Histogram::of(diffs, bins);
  return report;
}

std::vector<std::size_t> pixel_ranking(const Tensor& map) {
  const Shape& s = map.shape();
  const std::size_t plane = s.plane();
  std::vector<double> score(plane, 0.0);
  for (std::size_t c = 0; c < s.n * s.c; ++c) {
    for (std::size_t j = 0; j < plane; ++j) score[j] += std::abs(map[c * plane + j]);
  }
  std::vector<std::size_t> order(plane);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

std::size_t perturb_count(double fraction, std::size_t pixels) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("perturbation fraction must lie in [0,1]");
  }
  // The slack keeps products like 0.3 * 10 from rounding up past the exact value.
  const double exact = fraction * static_cast<double>(pixels);
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(k, pixels);
}

Tensor perturb_ranked(const Tensor& image, std::span<const std::size_t> ranking, double fraction,
                      PerturbMode mode, std::uint64_t seed,
                      std::span<const double> channel_means) {
  const Shape& s = image.shape();
  if (s.n != 1) throw ShapeError("perturb: expects one image, got " + to_string(s));
  const std::size_t plane = s.plane();
  if (ranking.size() != plane) {
    throw ShapeError("perturb: ranking covers " + std::to_string(ranking.size()) +
                     " positions, image has " + std::to_string(plane));
  }
  if (mode == PerturbMode::DatasetMean && channel_means.size() != s.c) {
    throw ShapeError("perturb: " + std::to_string(channel_means.size()) +
                     " channel means for " + std::to_string(s.c) + " channels");
  }
  const std::size_t k = perturb_count(fraction, plane);
  Tensor out = image;
  if (k == 0) return out;

  std::vector<double> noise;
  if (mode == PerturbMode::UniformNoise) {
    // Drawn for every value so nested fractions see the same replacements.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    noise.resize(image.size());
    for (double& v : noise) v = u(rng);
  }
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t pos = ranking[r];
    for (std::size_t c = 0; c < s.c; ++c) {
      const std::size_t idx = c * plane + pos;
      out[idx] = mode == PerturbMode::DatasetMean ? channel_means[c] : noise[idx];
    }
  }
  return out;
}

Tensor perturb_top_fraction(const Tensor& image, const SaliencyMap& map, double fraction,
                            PerturbMode mode, std::uint64_t seed,
                            std::span<const double> channel_means) {
  require_same_shape(image.shape(), map.values.shape(), "perturb_top_fraction");
  const auto ranking = pixel_ranking(map.values);
  return perturb_ranked(image, ranking, fraction, mode, seed, channel_means);
}

const char* source_name(SaliencySource s) noexcept {
  switch (s) {
    case SaliencySource::EnhancedGuided: return "enhanced";
    case SaliencySource::Guided: return "guided";
    case SaliencySource::Vanilla: return "vanilla";
    case SaliencySource::RandomBaseline: return "random";
  }
  return "unknown";
}

double RecoveryCurve::mean_accuracy() const {
  if (accuracies.empty()) return 0.0;
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
         static_cast<double>(accuracies.size());
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(std::begin(words), std::end(words));
  return (std::uint64_t{words[0]} << 32) | words[1];
}

}  // namespace

RecoveryCurve recovery_curve(const ModelGraph& model, const AdversarialCorpus& corpus,
                             SaliencySource source, std::span<const double> fractions,
                             std::span<const double> channel_means,
                             const RecoveryOptions& options) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0)) {
      throw InvalidArgument("recovery_curve: fractions must lie in [0,1]");
    }
    if (i > 0 && !(fractions[i] > fractions[i - 1])) {
      throw InvalidArgument("recovery_curve: fractions must be strictly increasing");
    }
  }
  const std::vector<std::size_t> adv_s = corpus.successful();
  if (adv_s.empty()) throw EmptyInputError("recovery_curve: no successful adversarial examples");

  // hits[i][f] = 1 when image i is classified correctly after perturbing fraction f.
  std::vector<std::vector<char>> hits(adv_s.size(), std::vector<char>(fractions.size(), 0));
  parallel_for(adv_s.size(), [&](std::size_t i) {
    const CorpusEntry& e = corpus.entries[adv_s[i]];
    const Tensor& x = e.result.image;
    std::vector<std::size_t> ranking;
    if (source == SaliencySource::RandomBaseline) {
      ranking.resize(x.shape().plane());
      std::iota(ranking.begin(), ranking.end(), std::size_t{0});
      std::mt19937_64 rng(mix_seed(options.seed, e.dataset_index, 1));
      std::shuffle(ranking.begin(), ranking.end(), rng);
    } else {
      const Tensor logits = forward(model, x);
      const std::size_t k = argmax(logits.data());
      SaliencyMap map;
      if (source == SaliencySource::EnhancedGuided) {
        const std::size_t m = select_contrast_class(logits.data(), k);
        map = enhanced_map(model, x, k, m, options.enhanced_normalization);
      } else {
        map = compute_saliency(model, x, k,
                               source == SaliencySource::Guided ? SaliencyMethod::Guided
                                                                : SaliencyMethod::Vanilla);
      }
      ranking = pixel_ranking(map.values);
    }
    const std::uint64_t noise_seed = mix_seed(options.seed, e.dataset_index, 2);
    for (std::size_t f = 0; f < fractions.size(); ++f) {
      const Tensor xp = perturb_ranked(x, ranking, fractions[f], options.mode, noise_seed,
                                       channel_means);
      hits[i][f] = predict(model, xp)[0] == e.result.label ? 1 : 0;
    }
  });

  RecoveryCurve curve;
  curve.source = source;
  curve.fractions.assign(fractions.begin(), fractions.end());
  curve.accuracies.assign(fractions.size(), 0.0);
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    std::size_t correct = 0;
    for (const auto& h : hits) correct += static_cast<std::size_t>(h[f]);
    curve.accuracies[f] = static_cast<double>(correct) / static_cast<double>(adv_s.size());
  }
  return curve;
}

namespace {

SaliencyMap map_for_prediction(const ModelGraph& model, const Tensor& x, SaliencyMethod method,
                               Normalization scheme, int* predicted) {
  const Tensor logits = forward(model, x);
  const std::size_t k = argmax(logits.data());
  if (predicted) *predicted = static_cast<int>(k);
  if (method == SaliencyMethod::EnhancedGuided) {
    return enhanced_map(model, x, k, select_contrast_class(logits.data(), k), scheme);
  }
  return compute_saliency(model, x, k, method);
}

}  // namespace

CaseReport adv_case_report(const ModelGraph& model, const Tensor& clean_image,
                           std::span<const AdversarialResult> adversarial,
                           std::span<const SaliencyMethod> methods, Normalization scheme) {
  CaseReport report;
  report.clean_prediction = predict(model, clean_image)[0];
  for (std::size_t v = 0; v <= adversarial.size(); ++v) {
    const Tensor& x = v == 0 ? clean_image : adversarial[v - 1].image;
    for (SaliencyMethod method : methods) {
      CaseMap cm;
      cm.variant = v;
      cm.method = method;
      cm.success = v == 0 ? false : adversarial[v - 1].success;
      cm.map = map_for_prediction(model, x, method, scheme, &cm.predicted);
      report.maps.push_back(std::move(cm));
    }
  }
  return report;
}

DiscriminativityReport adversary_discriminativity(const ModelGraph& model, const Dataset& clean,
                                                  const AdversarialCorpus& corpus,
                                                  Normalization scheme) {
  const std::vector<std::size_t> adv_s = corpus.successful();
  if (adv_s.empty()) {
    throw EmptyInputError("adversary_discriminativity: no successful adversarial examples");
  }
  DiscriminativityReport report;
  report.rows.resize(adv_s.size());
  parallel_for(adv_s.size(), [&](std::size_t i) {
    const CorpusEntry& e = corpus.entries[adv_s[i]];
    const Tensor x = clean.image(e.dataset_index);
    DiscriminativityRow row;
    row.dataset_index = e.dataset_index;
    row.label = e.result.label;
    const SaliencyMap clean_enh =
        map_for_prediction(model, x, SaliencyMethod::EnhancedGuided, scheme, &row.clean_prediction);
    const SaliencyMap adv_enh = map_for_prediction(model, e.result.image,
                                                   SaliencyMethod::EnhancedGuided, scheme,
                                                   &row.adversarial_prediction);
    const SaliencyMap clean_g =
        map_for_prediction(model, x, SaliencyMethod::Guided, scheme, nullptr);
    const SaliencyMap adv_g =
        map_for_prediction(model, e.result.image, SaliencyMethod::Guided, scheme, nullptr);
    row.cos_enhanced = cosine_similarity(clean_enh.values, adv_enh.values);
    row.cos_guided = cosine_similarity(clean_g.values, adv_g.values);
    report.rows[i] = row;
  });
  for (const auto& r : report.rows) {
    report.mean_cos_enhanced += r.cos_enhanced;
    report.mean_cos_guided += r.cos_guided;
  }
  report.mean_cos_enhanced /= static_cast<double>(report.rows.size());
  report.mean_cos_guided /= static_cast<double>(report.rows.size());
  return report;
}

}  // namespace advsal
