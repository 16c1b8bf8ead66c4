#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace advsal {

struct TrainConfig {
  std::size_t epochs = 3;
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  // Accuracy on the held-out set, when one was supplied.
  std::optional<double> eval_accuracy;
};

struct TrainResult {
  ModelGraph model;
  std::vector<EpochStats> trace;
};

// Mini-batch SGD on mean cross-entropy. Single-threaded and bit-reproducible
// for a given seed. Throws DivergenceError when the loss stops being finite.
TrainResult train_sgd(const ModelGraph& model, const Dataset& train, const TrainConfig& config,
                      const Dataset* eval = nullptr);

// Fraction of items whose argmax logit equals the label.
double accuracy(const ModelGraph& model, const Dataset& data, std::size_t batch_size = 256);

}  // namespace advsal
