#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace advsal {

TrainResult train_sgd(const ModelGraph& model, const Dataset& train, const TrainConfig& config,
                      const Dataset* eval) {
  if (train.empty()) throw EmptyInputError("train_sgd: empty dataset");
  if (config.batch_size == 0) throw InvalidArgument("train_sgd: batch size must be positive");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw InvalidArgument("train_sgd: learning rate must be finite and non-negative");
  }
  {
    Tensor probe = train.image(0);
    model.check_input(probe);
  }
  if (train.num_classes() > model.num_classes()) {
    throw InvalidArgument("train_sgd: dataset has " + std::to_string(train.num_classes()) +
                          " classes, model outputs " + std::to_string(model.num_classes()));
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ModelGraph current = model;
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Tensor x = train.batch(idx);
      const std::vector<int> y = train.batch_labels(idx);

      Tape tape;
      Tensor logits;
      try {
        logits = forward(current, x, &tape);
      } catch (const NumericError& e) {
        throw DivergenceError(static_cast<int>(epoch),
                              "training diverged in epoch " + std::to_string(epoch) + ": " +
                                  e.what());
      }
      const Tensor probs = softmax(logits);
      const double loss = cross_entropy_loss(probs, y);
      if (!std::isfinite(loss)) {
        throw DivergenceError(static_cast<int>(epoch),
                              "training diverged in epoch " + std::to_string(epoch) +
                                  ": loss is not finite");
      }
      loss_sum += loss * static_cast<double>(idx.size());
      const std::size_t k = current.num_classes();
      for (std::size_t n = 0; n < idx.size(); ++n) {
        if (static_cast<int>(argmax(logits.data().subspan(n * k, k))) == y[n]) ++correct;
      }

      ParamGrads grads;
      backward(current, tape, softmax_cross_entropy_grad(probs, y), BackwardRule::VanillaGradient,
               &grads);
      std::vector<LayerParams> params = current.params();
      for (std::size_t l = 0; l < params.size(); ++l) {
        if (!current.specs()[l].parametric()) continue;
        auto w = params[l].weight.data();
        auto gw = grads[l].weight.data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * gw[i];
        for (std::size_t i = 0; i < params[l].bias.size(); ++i) {
          params[l].bias[i] -= config.learning_rate * grads[l].bias[i];
        }
      }
      current = current.with_params(std::move(params));
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (eval) stats.eval_accuracy = accuracy(current, *eval);
    result.trace.push_back(stats);
  }
  result.model = std::move(current);
  return result;
}

double accuracy(const ModelGraph& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw EmptyInputError("accuracy: empty dataset");
  if (batch_size == 0) batch_size = 1;
  const std::size_t chunks = (data.size() + batch_size - 1) / batch_size;
  std::vector<std::size_t> correct(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * batch_size;
    const std::size_t stop = std::min(data.size(), start + batch_size);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const std::vector<int> pred = predict(model, data.batch(idx));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (pred[i] == data.label(idx[i])) ++correct[c];
    }
  });
  return static_cast<double>(std::accumulate(correct.begin(), correct.end(), std::size_t{0})) /
         static_cast<double>(data.size());
}

}  // namespace advsal
