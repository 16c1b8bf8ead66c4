#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"
#include "tensor.hpp"

namespace advsal {

enum class AttackFamily { FGSM, BIM, CW_L2 };

// Update rule for the C&W variable w. GradientDescent is the plain update
// w -= lr * g; Adam uses the usual moment estimates (0.9, 0.999, 1e-8).
enum class CwOptimizer { Adam, GradientDescent };

const char* attack_name(AttackFamily f) noexcept;
const char* optimizer_name(CwOptimizer o) noexcept;

struct AttackConfig {
  AttackFamily family = AttackFamily::FGSM;
  double epsilon = 0.1;     // l-inf budget in pixel units (FGSM, BIM)
  double step_size = 0.01;  // BIM step
  std::size_t iterations = 10;  // BIM and C&W steps
  double cw_c = 1.0;
  double cw_confidence = 0.0;
  double cw_lr = 0.01;
  CwOptimizer cw_optimizer = CwOptimizer::Adam;

  // Throws InvalidArgument on negative epsilon, zero iterations or a
  // non-positive step where the family needs one.
  void validate() const;
};

struct AdversarialResult {
  Tensor image;  // in [0,1]
  int label = 0;
  int original_prediction = 0;
  int adversarial_prediction = 0;
  bool success = false;  // adversarial_prediction != label
  double l2 = 0.0;       // ||x' - x||_2
  double linf = 0.0;     // ||x' - x||_inf
};

// sign(g) with sign(0) = 0.
double sign_of(double g) noexcept;

// clip01(x + epsilon * sign(grad)), elementwise.
Tensor fgsm_step(const Tensor& image, const Tensor& grad, double epsilon);

// One BIM update: x + alpha * sign(grad), clipped to the l-inf ball of radius
// epsilon around `original` and to [0,1].
Tensor bim_step(const Tensor& current, const Tensor& original, const Tensor& grad, double alpha,
                double epsilon);

AdversarialResult fgsm(const ModelGraph& model, const Tensor& image, int label, double epsilon);

AdversarialResult bim(const ModelGraph& model, const Tensor& image, int label, double epsilon,
                      double step_size, std::size_t iterations);

// Untargeted Carlini-Wagner l2 with x' = (tanh(w) + 1) / 2 and fixed c,
// optimized on w from delta = 0 with config.cw_optimizer. Returns the lowest-l2 successful
// iterate, or the final iterate with success = false.
AdversarialResult cw_l2(const ModelGraph& model, const Tensor& image, int label,
                        const AttackConfig& config);

AdversarialResult run_attack(const ModelGraph& model, const Tensor& image, int label,
                             const AttackConfig& config);

struct CorpusEntry {
  std::size_t dataset_index = 0;
  AdversarialResult result;
};

struct AdversarialCorpus {
  AttackConfig config;
  std::vector<CorpusEntry> entries;

  // Indices into `entries` of successful (Adv_s) and failed (Adv_f) attacks.
  std::vector<std::size_t> successful() const;
  std::vector<std::size_t> failed() const;
};

// Attacks `count` dataset items chosen by a seeded permutation, in parallel.
AdversarialCorpus generate_corpus(const ModelGraph& model, const Dataset& data,
                                  const AttackConfig& config, std::size_t count,
                                  std::uint64_t seed);

// The `count`-prefix of a seeded permutation of [0, size).
std::vector<std::size_t> seeded_selection(std::size_t size, std::size_t count, std::uint64_t seed);

}  // namespace advsal
