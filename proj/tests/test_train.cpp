#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "layers.hpp"
#include "model.hpp"
#include "test_util.hpp"
#include "train.hpp"

using namespace advsal;
using namespace advsal::testing;

namespace {

Dataset load_digits(const char* split) {
  const std::string prefix = split;
  return ingest_idx(digits_dir() / (prefix + "-images-idx3-ubyte"),
                    digits_dir() / (prefix + "-labels-idx1-ubyte"));
}

}  // namespace

TEST(Train, ZeroLearningRateLeavesWeightsUnchanged) {
  const ModelGraph m = tiny_cnn(1);
  const Dataset d = random_dataset(Shape{1, 1, 8, 8}, 20, 5, 1);
  const TrainResult r = train_sgd(m, d, TrainConfig{2, 0.0, 8, 1});
  EXPECT_EQ(r.model, m);
  ASSERT_EQ(r.trace.size(), 2u);
  // Shuffling reorders the loss sum, so only rounding may differ.
  EXPECT_NEAR(r.trace[0].mean_loss, r.trace[1].mean_loss, 1e-12);
}

TEST(Train, SingleStepMatchesHandDerivedSoftmaxRegressionUpdate) {
  // Flatten -> Dense on one 1x2x2 image: the CE gradient of the weights is
  // (p - onehot(y)) x^T and of the bias is (p - onehot(y)).
  const ModelGraph m = ModelGraph::initialized(Shape{1, 1, 2, 2},
                                               {LayerSpec::flatten(), LayerSpec::dense(3)}, 5);
  const Dataset d(Shape{1, 1, 2, 2}, {0, 51, 204, 255}, {2});
  const double lr = 0.3;
  const TrainResult r = train_sgd(m, d, TrainConfig{1, lr, 1, 7});

  const std::vector<double> x{0.0, 51.0 / 255.0, 204.0 / 255.0, 1.0};
  const Tensor& w = m.params()[1].weight;
  const std::vector<double>& b = m.params()[1].bias;
  std::vector<double> z(3);
  for (std::size_t k = 0; k < 3; ++k) {
    z[k] = b[k];
    for (std::size_t i = 0; i < 4; ++i) z[k] += w.at(k, i, 0, 0) * x[i];
  }
  const double zmax = std::max({z[0], z[1], z[2]});
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - zmax);
  const Tensor& w2 = r.model.params()[1].weight;
  const std::vector<double>& b2 = r.model.params()[1].bias;
  for (std::size_t k = 0; k < 3; ++k) {
    const double delta = std::exp(z[k] - zmax) / denom - (k == 2 ? 1.0 : 0.0);
    EXPECT_NEAR(b2[k], b[k] - lr * delta, 1e-14);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(w2.at(k, i, 0, 0), w.at(k, i, 0, 0) - lr * delta * x[i], 1e-14);
    }
  }
  EXPECT_NEAR(r.trace[0].mean_loss, -(z[2] - zmax - std::log(denom)), 1e-12);
}

TEST(Train, FixedSeedIsBitReproducible) {
  const ModelGraph m = tiny_cnn(2);
  const Dataset d = random_dataset(Shape{1, 1, 8, 8}, 40, 5, 2);
  const TrainConfig cfg{3, 0.05, 8, 11};
  const TrainResult a = train_sgd(m, d, cfg, &d);
  const TrainResult b = train_sgd(m, d, cfg, &d);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.trace.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.trace[e].epoch, e + 1);
    EXPECT_EQ(a.trace[e].mean_loss, b.trace[e].mean_loss);
    ASSERT_TRUE(a.trace[e].eval_accuracy.has_value());
  }
  const TrainResult c = train_sgd(m, d, TrainConfig{3, 0.05, 8, 12});
  EXPECT_NE(a.model, c.model);
}

TEST(Train, LossDecreasesOnDigitProxy) {
  const Dataset train = load_digits("train");
  const Dataset test = load_digits("t10k");
  const ModelGraph m = make_reference_model(Architecture::MnistReference, 42);
  const TrainResult r = train_sgd(m, train, TrainConfig{4, 0.05, 64, 42}, &test);
  ASSERT_EQ(r.trace.size(), 4u);
  EXPECT_LT(r.trace.back().mean_loss, r.trace.front().mean_loss);
  EXPECT_GT(*r.trace.back().eval_accuracy, 0.2);  // chance is 0.1
  EXPECT_EQ(accuracy(r.model, test), *r.trace.back().eval_accuracy);
}

TEST(Train, AbsurdLearningRateReportsDivergence) {
  const Dataset train = load_digits("train").head(256);
  const ModelGraph m = make_reference_model(Architecture::MnistReference, 1);
  try {
    (void)train_sgd(m, train, TrainConfig{5, 1e200, 32, 1});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_LE(e.epoch(), 5);
  }
}

TEST(Train, RejectsBadConfiguration) {
  const ModelGraph m = tiny_cnn(3);
  const Dataset d = random_dataset(Shape{1, 1, 8, 8}, 4, 5, 3);
  EXPECT_THROW((void)train_sgd(m, d, TrainConfig{1, 0.1, 0, 1}), InvalidArgument);
  EXPECT_THROW((void)train_sgd(m, d, TrainConfig{1, -1.0, 4, 1}), InvalidArgument);
  EXPECT_THROW((void)train_sgd(m, d.head(0), TrainConfig{}), EmptyInputError);
  const Dataset wrong = random_dataset(Shape{1, 1, 9, 9}, 4, 5, 3);
  EXPECT_THROW((void)train_sgd(m, wrong, TrainConfig{}), ShapeError);
  const Dataset many = random_dataset(Shape{1, 1, 8, 8}, 40, 9, 3);
  EXPECT_THROW((void)train_sgd(m, many, TrainConfig{}), InvalidArgument);
}

TEST(Accuracy, CountsArgmaxMatches) {
  // Dense weights that copy pixel i into logit i make the brightest pixel win.
  const ModelGraph base = ModelGraph::initialized(Shape{1, 1, 1, 3},
                                                  {LayerSpec::flatten(), LayerSpec::dense(3)}, 1);
  auto params = base.params();
  params[1].weight = Tensor(Shape{3, 3, 1, 1}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  params[1].bias = {0, 0, 0};
  const ModelGraph m = base.with_params(params);
  const Dataset d(Shape{1, 1, 1, 3}, {9, 1, 1, 1, 9, 1, 1, 1, 9, 9, 1, 1}, {0, 1, 0, 2});
  EXPECT_EQ(accuracy(m, d), 0.5);
  EXPECT_EQ(accuracy(m, d, 3), 0.5);
}
