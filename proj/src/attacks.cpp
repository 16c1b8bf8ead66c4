#include "attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "errors.hpp"
#include "parallel.hpp"

namespace advsal {

const char* attack_name(AttackFamily f) noexcept {
  switch (f) {
    case AttackFamily::FGSM: return "fgsm";
    case AttackFamily::BIM: return "bim";
    case AttackFamily::CW_L2: return "cw";
  }
  return "unknown";
}

const char* optimizer_name(CwOptimizer o) noexcept {
  switch (o) {
    case CwOptimizer::Adam: return "adam";
    case CwOptimizer::GradientDescent: return "gd";
  }
  return "unknown";
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("attack: epsilon must be finite and >= 0");
  }
  if (family != AttackFamily::FGSM && iterations < 1) {
    throw InvalidArgument("attack: iterations must be >= 1");
  }
  if (family == AttackFamily::BIM && !(step_size > 0.0)) {
    throw InvalidArgument("attack: BIM step size must be > 0");
  }
  if (family == AttackFamily::CW_L2) {
    if (!(cw_lr > 0.0)) throw InvalidArgument("attack: C&W learning rate must be > 0");
    if (!(cw_c >= 0.0)) throw InvalidArgument("attack: C&W constant c must be >= 0");
    if (!(cw_confidence >= 0.0)) throw InvalidArgument("attack: C&W confidence must be >= 0");
  }
}

double sign_of(double g) noexcept { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

namespace {

double clip01(double v) noexcept { return std::min(1.0, std::max(0.0, v)); }

void require_unit_range(const Tensor& image, const char* where) {
  for (double v : image.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument(std::string(where) + ": image values must lie in [0,1]");
    }
  }
}

int predict_one(const ModelGraph& model, const Tensor& image) { return predict(model, image)[0]; }

AdversarialResult finish(const ModelGraph& model, const Tensor& original, Tensor adv, int label,
                         int original_prediction) {
  AdversarialResult r;
  r.label = label;
  r.original_prediction = original_prediction;
  r.adversarial_prediction = predict_one(model, adv);
  r.success = r.adversarial_prediction != label;
  double sq = 0.0;
  double mx = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    const double d = adv[i] - original[i];
    sq += d * d;
    mx = std::max(mx, std::abs(d));
  }
  r.l2 = std::sqrt(sq);
  r.linf = mx;
  r.image = std::move(adv);
  return r;
}

void check_label(const ModelGraph& model, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= model.num_classes()) {
    throw InvalidArgument("attack: label " + std::to_string(label) + " out of range");
  }
}

Tensor loss_gradient(const ModelGraph& model, const Tensor& image, int label) {
  return backward_to_input(model, image, static_cast<std::size_t>(label),
                           BackwardRule::VanillaGradient, OutputHead::Loss);
}

}  // namespace

Tensor fgsm_step(const Tensor& image, const Tensor& grad, double epsilon) {
  require_same_shape(image.shape(), grad.shape(), "fgsm_step");
  Tensor out(image.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clip01(image[i] + epsilon * sign_of(grad[i]));
  }
  return out;
}

Tensor bim_step(const Tensor& current, const Tensor& original, const Tensor& grad, double alpha,
                double epsilon) {
  require_same_shape(current.shape(), grad.shape(), "bim_step");
  require_same_shape(current.shape(), original.shape(), "bim_step");
  Tensor out(current.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = current[i] + alpha * sign_of(grad[i]);
    v = std::min(original[i] + epsilon, std::max(original[i] - epsilon, v));
    out[i] = clip01(v);
  }
  return out;
}

AdversarialResult fgsm(const ModelGraph& model, const Tensor& image, int label, double epsilon) {
  check_label(model, label);
  require_unit_range(image, "fgsm");
  if (!(epsilon >= 0.0)) throw InvalidArgument("fgsm: epsilon must be >= 0");
  const int clean = predict_one(model, image);
  Tensor adv = fgsm_step(image, loss_gradient(model, image, label), epsilon);
  return finish(model, image, std::move(adv), label, clean);
}

AdversarialResult bim(const ModelGraph& model, const Tensor& image, int label, double epsilon,
                      double step_size, std::size_t iterations) {
  check_label(model, label);
  require_unit_range(image, "bim");
  if (!(epsilon >= 0.0)) throw InvalidArgument("bim: epsilon must be >= 0");
  const int clean = predict_one(model, image);
  Tensor x = image;
  for (std::size_t t = 0; t < iterations; ++t) {
    x = bim_step(x, image, loss_gradient(model, x, label), step_size, epsilon);
  }
  return finish(model, image, std::move(x), label, clean);
}

AdversarialResult cw_l2(const ModelGraph& model, const Tensor& image, int label,
                        const AttackConfig& config) {
  check_label(model, label);
  require_unit_range(image, "cw_l2");
  const int clean = predict_one(model, image);
  const std::size_t classes = model.num_classes();
  const auto true_class = static_cast<std::size_t>(label);

  // Start at delta = 0. Saturated pixels are pulled just inside (0,1) so the
  // inverse tanh stays finite.
  constexpr double kInterior = 1.0 - 1e-6;
  Tensor w(image.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::atanh((2.0 * image[i] - 1.0) * kInterior);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  Tensor m1(image.shape());
  Tensor m2(image.shape());

  Tensor x(image.shape());
  Tensor best;
  double best_l2 = std::numeric_limits<double>::infinity();
  for (std::size_t step = 0; step <= config.iterations; ++step) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (std::tanh(w[i]) + 1.0) * 0.5;

    Tape tape;
    const Tensor logits = forward(model, x, &tape);
    auto z = logits.data();
    std::size_t runner_up = true_class == 0 ? 1 : 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (j != true_class && z[j] > z[runner_up]) runner_up = j;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - image[i];
      sq += d * d;
    }
    const double margin = z[true_class] - z[runner_up];
    const double f = std::max(margin, -config.cw_confidence);
    const double objective = sq + config.cw_c * f;
    if (!std::isfinite(objective)) {
      throw NumericError("cw_l2: objective became non-finite at step " + std::to_string(step));
    }
    if (argmax(z) != true_class && sq < best_l2) {
      best_l2 = sq;
      best = x;
    }
    if (step == config.iterations) break;

    Tensor grad_x(image.shape());
    if (config.cw_c != 0.0 && margin > -config.cw_confidence) {
      Tensor seed(logits.shape());
      seed[true_class] = config.cw_c;
      seed[runner_up] = -config.cw_c;
      grad_x = backward(model, tape, seed, BackwardRule::VanillaGradient);
    }
    const bool adam = config.cw_optimizer == CwOptimizer::Adam;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step + 1));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step + 1));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double t = std::tanh(w[i]);
      const double g = (2.0 * (x[i] - image[i]) + grad_x[i]) * 0.5 * (1.0 - t * t);
      if (adam) {
        m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * g;
        m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * g * g;
        w[i] -= config.cw_lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kAdamEps);
      } else {
        w[i] -= config.cw_lr * g;
      }
    }
  }
  return finish(model, image, best.empty() ? x : best, label, clean);
}

AdversarialResult run_attack(const ModelGraph& model, const Tensor& image, int label,
                             const AttackConfig& config) {
  config.validate();
  switch (config.family) {
    case AttackFamily::FGSM: return fgsm(model, image, label, config.epsilon);
    case AttackFamily::BIM:
      return bim(model, image, label, config.epsilon, config.step_size, config.iterations);
    case AttackFamily::CW_L2: return cw_l2(model, image, label, config);
  }
  throw InvalidArgument("unknown attack family");
}

std::vector<std::size_t> AdversarialCorpus::successful() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].result.success) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> AdversarialCorpus::failed() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].result.success) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> seeded_selection(std::size_t size, std::size_t count,
                                          std::uint64_t seed) {
  if (count > size) {
    throw InvalidArgument("selection of " + std::to_string(count) + " items from " +
                          std::to_string(size));
  }
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  return idx;
}

AdversarialCorpus generate_corpus(const ModelGraph& model, const Dataset& data,
                                  const AttackConfig& config, std::size_t count,
                                  std::uint64_t seed) {
  config.validate();
  const std::vector<std::size_t> chosen = seeded_selection(data.size(), count, seed);
  AdversarialCorpus corpus;
  corpus.config = config;
  corpus.entries.resize(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t i) {
    const std::size_t di = chosen[i];
    corpus.entries[i] = CorpusEntry{di, run_attack(model, data.image(di), data.label(di), config)};
  });
  return corpus;
}

}  // namespace advsal
