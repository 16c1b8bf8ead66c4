#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "metrics.hpp"
#include "saliency.hpp"
#include "tensor.hpp"
#include "train.hpp"

namespace advsal {

// All CSV output: header row first, reals with 6 decimal places.
std::string format_real(double v);
// Shortest text that parses back to exactly `v`; used to echo configuration.
std::string format_exact(double v);

std::string train_trace_csv(std::span<const EpochStats> trace);
std::string pair_analysis_csv(const PairAnalysisReport& report);
std::string pair_histogram_csv(const PairAnalysisReport& report);
std::string recovery_csv(std::span<const RecoveryCurve> curves);
std::string discriminativity_csv(const DiscriminativityReport& report);

// 8-bit binary graymap (P5). Channels are collapsed by summing |values| and
// the result is min-max scaled to [0, 255]; a constant map renders black.
std::vector<std::uint8_t> render_heatmap_pgm(const Tensor& map);

// Raw dumps: four 32-bit little-endian extents (N, C, H, W) followed by the
// values, 64-bit (maps) or 32-bit (adversarial images) little-endian IEEE-754.
std::vector<std::uint8_t> encode_raw_f64(const Tensor& t);
Tensor decode_raw_f64(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_raw_f32(const Tensor& t);
Tensor decode_raw_f32(std::span<const std::uint8_t> bytes);

void save_map_raw(const SaliencyMap& map, const std::filesystem::path& path);
SaliencyMap load_map_raw(const std::filesystem::path& path);

// Corpus directory: manifest.csv plus one adv_NNNNN.f32 raw file per entry.
inline constexpr const char* kManifestName = "manifest.csv";
std::string corpus_manifest_csv(const AdversarialCorpus& corpus);
void save_corpus(const AdversarialCorpus& corpus, const std::filesystem::path& dir);
AdversarialCorpus load_corpus(const std::filesystem::path& dir);

// Recomputes predictions, success flags and norms of a (reloaded) corpus
// against the clean images it was generated from.
void refresh_corpus(const ModelGraph& model, const Dataset& clean, AdversarialCorpus& corpus);

}  // namespace advsal
