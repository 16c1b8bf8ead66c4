// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Uses real MNIST when ADVSAL_MNIST_DIR names a directory with the
// four IDX files, otherwise the bundled digit proxy in data/digits28.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "io_util.hpp"
#include "layers.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "report_io.hpp"
#include "saliency.hpp"
#include "test_util.hpp"
#include "train.hpp"
#include "weights_io.hpp"

using namespace advsal;
using namespace advsal::testing;

namespace {

// Pinned tolerances and sizes.
constexpr int kFdCasesPerLayer = 20;
constexpr double kLayerFdTol = 1e-6;
constexpr double kInputFdTol = 1e-5;
constexpr double kCrit1Seconds = 60;
constexpr std::size_t kPairImages = 200;
constexpr double kMinSimRatio = 0.9;
constexpr double kMinAvgDiffSpread = 0.05;
constexpr double kCrit3Seconds = 5 * 60;
constexpr std::size_t kSymmetryPairs = 100;
constexpr std::size_t kValidityRuns = 500;
constexpr double kMonotoneSlack = 0.02;
constexpr std::size_t kCwImages = 200;
constexpr std::size_t kCwSteps = 200;
constexpr double kMinCwSuccess = 0.8;
constexpr double kCrit5Seconds = 15 * 60;
constexpr std::size_t kMinRecoveryCorpus = 200;
constexpr double kCrit6Seconds = 20 * 60;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

struct Context {
  Dataset train;
  Dataset test;
  ModelGraph model;
  std::string data_label;
  double train_seconds = 0.0;
  double test_accuracy = 0.0;
  AdversarialCorpus cw_full;  // C&W over the whole test split
  bool have_cw_full = false;
};

AttackConfig cw_config() {
  AttackConfig cfg;
  cfg.family = AttackFamily::CW_L2;
  cfg.cw_c = 1.0;
  cfg.cw_confidence = 0.0;
  cfg.cw_lr = 0.01;
  cfg.iterations = kCwSteps;
  cfg.cw_optimizer = CwOptimizer::Adam;
  return cfg;
}

// ---- 1: gradient oracle -------------------------------------------------------

double conv_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 3);
  const std::size_t stride = small(rng);
  const std::size_t pad = small(rng) - 1;
  const Shape xs{small(rng), small(rng), 5, 4};
  const Shape ks{small(rng), xs.c, small(rng), small(rng)};
  const Tensor x = random_tensor(xs, rng);
  const Tensor k = random_tensor(ks, rng);
  const auto b = random_vector(ks.n, rng);
  const Tensor r = random_tensor(conv2d_output_shape(xs, ks, stride, pad), rng);
  const Conv2dGrads g = conv2d_backward(x, k, r, stride, pad);
  const auto lx = [&](const std::vector<double>& v) {
    return dot(conv2d_forward(Tensor(xs, v), k, b, stride, pad).data(), r.data());
  };
  const auto lk = [&](const std::vector<double>& v) {
    return dot(conv2d_forward(x, Tensor(ks, v), b, stride, pad).data(), r.data());
  };
  const auto lb = [&](const std::vector<double>& v) {
    return dot(conv2d_forward(x, k, v, stride, pad).data(), r.data());
  };
  return std::max({max_relative_error(g.input.data(), central_difference(x.values(), lx)),
                   max_relative_error(g.kernel.data(), central_difference(k.values(), lk)),
                   max_relative_error(g.bias, central_difference(b, lb))});
}

double relu_case(std::mt19937_64& rng) {
  const Shape s{1, 2, 3, 3};
  const Tensor x = random_away_from_zero(s, rng);
  const Tensor r = random_tensor(s, rng);
  const Tensor g = relu_backward(r, x, BackwardRule::VanillaGradient);
  const auto loss = [&](const std::vector<double>& v) {
    return dot(relu_forward(Tensor(s, v)).data(), r.data());
  };
  return max_relative_error(g.data(), central_difference(x.values(), loss));
}

double maxpool_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 3);
  const std::size_t size = small(rng) + 1;
  const std::size_t stride = small(rng);
  const Shape s{small(rng), small(rng), 6, 5};
  std::vector<double> v(s.count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
  std::shuffle(v.begin(), v.end(), rng);
  const Tensor x(s, v);
  const Tensor r = random_tensor(maxpool_output_shape(s, size, stride), rng);
  const Tensor g = maxpool_backward(r, x, size, stride);
  const auto loss = [&](const std::vector<double>& w) {
    return dot(maxpool_forward(Tensor(s, w), size, stride).data(), r.data());
  };
  return max_relative_error(g.data(), central_difference(v, loss));
}

double dense_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> small(1, 4);
  const Shape xs{small(rng), small(rng), small(rng), small(rng)};
  const Shape ws{small(rng), xs.per_item(), 1, 1};
  const Tensor x = random_tensor(xs, rng);
  const Tensor w = random_tensor(ws, rng);
  const auto b = random_vector(ws.n, rng);
  const Tensor r = random_tensor(Shape{xs.n, ws.n, 1, 1}, rng);
  const DenseGrads g = dense_backward(x, w, r);
  const auto lx = [&](const std::vector<double>& v) {
    return dot(dense_forward(Tensor(xs, v), w, b).data(), r.data());
  };
  const auto lw = [&](const std::vector<double>& v) {
    return dot(dense_forward(x, Tensor(ws, v), b).data(), r.data());
  };
  const auto lb = [&](const std::vector<double>& v) {
    return dot(dense_forward(x, w, v).data(), r.data());
  };
  return std::max({max_relative_error(g.input.data(), central_difference(x.values(), lx)),
                   max_relative_error(g.weight.data(), central_difference(w.values(), lw)),
                   max_relative_error(g.bias, central_difference(b, lb))});
}

double softmax_case(std::mt19937_64& rng) {
  const Shape s{2, 5, 1, 1};
  const Tensor z = random_tensor(s, rng, -3, 3);
  const Tensor r = random_tensor(s, rng);
  const Tensor g = softmax_backward(softmax(z), r);
  const auto loss = [&](const std::vector<double>& v) {
    return dot(softmax(Tensor(s, v)).data(), r.data());
  };
  return max_relative_error(g.data(), central_difference(z.values(), loss));
}

double cross_entropy_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> label(0, 3);
  const Shape s{3, 4, 1, 1};
  const Tensor z = random_tensor(s, rng, -2, 2);
  const std::vector<int> labels{label(rng), label(rng), label(rng)};
  const Tensor g = softmax_cross_entropy_grad(softmax(z), labels);
  const auto loss = [&](const std::vector<double>& v) {
    return cross_entropy_loss(softmax(Tensor(s, v)), labels);
  };
  return max_relative_error(g.data(), central_difference(z.values(), loss));
}

double input_case(std::mt19937_64& rng, std::uint64_t seed) {
  const ModelGraph m = tiny_cnn(seed);
  const Tensor x = random_tensor(Shape{1, 1, 8, 8}, rng, 0, 1);
  const std::size_t k = seed % 5;
  const Tensor g = backward_to_input(m, x, k, BackwardRule::VanillaGradient);
  const auto logit = [&](const std::vector<double>& v) { return forward(m, Tensor(x.shape(), v))[k]; };
  return max_relative_error(g.data(), central_difference(x.values(), logit));
}

Outcome criterion_gradients() {
  Outcome out;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  const std::array<std::pair<const char*, std::function<double(std::mt19937_64&)>>, 6> layers{{
      {"conv", conv_case},
      {"relu", relu_case},
      {"maxpool", maxpool_case},
      {"dense", dense_case},
      {"softmax", softmax_case},
      {"softmax-ce", cross_entropy_case},
  }};
  for (const auto& [name, fn] : layers) {
    double worst = 0.0;
    for (int c = 0; c < kFdCasesPerLayer; ++c) worst = std::max(worst, fn(rng));
    out.check(worst < kLayerFdTol, std::string(name) + " max rel err " + sci(worst));
  }
  double worst = 0.0;
  for (int c = 0; c < kFdCasesPerLayer; ++c) {
    worst = std::max(worst, input_case(rng, 1000 + static_cast<std::uint64_t>(c)));
  }
  out.check(worst < kInputFdTol, "input-gradient max rel err " + sci(worst));
  const double secs = seconds_since(t0);
  out.check(secs < kCrit1Seconds, "runtime " + num(secs, 1) + "s");
  return out;
}

// ---- 2: guided rule -------------------------------------------------------------

Outcome criterion_guided_rule() {
  Outcome out;
  const std::array<double, 3> pre_values{-0.7, 0.0, 1.3};
  const std::array<double, 3> up_values{-2.5, 0.0, 0.9};
  std::size_t patterns = 0;
  std::size_t mismatches = 0;
  for (int pa = 0; pa < 27; ++pa) {
    for (int ua = 0; ua < 27; ++ua) {
      std::vector<double> pre(3), up(3);
      for (int i = 0, p = pa, u = ua; i < 3; ++i, p /= 3, u /= 3) {
        pre[static_cast<std::size_t>(i)] = pre_values[static_cast<std::size_t>(p % 3)];
        up[static_cast<std::size_t>(i)] = up_values[static_cast<std::size_t>(u % 3)];
      }
      const Tensor g = relu_backward(Tensor(Shape{1, 1, 1, 3}, up), Tensor(Shape{1, 1, 1, 3}, pre),
                                     BackwardRule::Guided);
      for (std::size_t i = 0; i < 3; ++i) {
        const double expected = (up[i] > 0 && pre[i] > 0) ? up[i] : 0.0;
        if (g[i] != expected) ++mismatches;
      }
      ++patterns;
    }
  }
  out.check(mismatches == 0, std::to_string(patterns) + " sign patterns, " +
                                 std::to_string(mismatches) + " mismatches");

  std::mt19937_64 rng(2);
  std::size_t differing = 0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ModelGraph m = ModelGraph::initialized(
        Shape{1, 2, 6, 6},
        {LayerSpec::conv(3, 3, 3, 1, 1), LayerSpec::maxpool(2, 2), LayerSpec::conv(4, 2, 2),
         LayerSpec::flatten(), LayerSpec::dense(4)},
        seed);
    const Tensor x = random_tensor(Shape{1, 2, 6, 6}, rng);
    for (std::size_t k = 0; k < 4; ++k) {
      const Tensor g = backward_to_input(m, x, k, BackwardRule::Guided);
      const Tensor v = backward_to_input(m, x, k, BackwardRule::VanillaGradient);
      differing += std::memcmp(g.data().data(), v.data().data(), g.size() * sizeof(double)) != 0;
      ++compared;
    }
  }
  out.check(differing == 0, "ReLU-free model guided==vanilla bitwise on " +
                                std::to_string(compared) + " maps");
  return out;
}

// ---- 3: filtering-effect similarity ---------------------------------------------

Outcome criterion_similarity(const Context& ctx) {
  Outcome out;
  const auto t0 = Clock::now();
  const PairAnalysisReport r = pair_analysis(ctx.model, ctx.test, kPairImages);
  out.check(r.pairs.size() == kPairImages, std::to_string(r.pairs.size()) + " images");
  out.check(r.mean_sim_ratio() >= kMinSimRatio,
            "mean Sim-Ratio " + num(r.mean_sim_ratio()) + " (need >= " + num(kMinSimRatio, 2) + ")");
  out.check(r.avg_diff_spread() > kMinAvgDiffSpread,
            "Avg-Diff spread " + num(r.avg_diff_spread()) + " (need > " + num(kMinAvgDiffSpread, 2) +
                ")");
  const double secs = seconds_since(t0);
  out.check(secs < kCrit3Seconds, "runtime " + num(secs, 1) + "s");
  return out;
}

// ---- 4: metric exactness ------------------------------------------------------------

FilterMask mask_of(std::vector<double> v) {
  const std::size_t n = v.size();
  return FilterMask{Tensor(Shape{1, 1, 1, n}, std::move(v))};
}

SaliencyMap constant_map(double value) {
  SaliencyMap m;
  m.values = Tensor(Shape{1, 1, 2, 2}, value);
  return m;
}

Outcome criterion_metrics() {
  Outcome out;
  out.check(sim_ratio(mask_of({1, 0, 1, 1}), mask_of({1, 0, 1, 1})) == 1.0, "identical masks -> 1");
  out.check(sim_ratio(mask_of({1, 0, 1, 1}), mask_of({1, 1, 1, 0})) == 0.5,
            "[1,0,1,1] vs [1,1,1,0] -> 0.5");
  out.check(sim_ratio(mask_of({1, 0, 0, 1}), mask_of({0, 1, 1, 0})) == 0.0,
            "complementary masks -> 0");
  out.check(avg_diff(constant_map(0.3), constant_map(0.3)) == 0.0, "equal averages -> 0");
  out.check(avg_diff(constant_map(4.0), constant_map(2.0)) == 0.5, "Avg 4 vs 2 -> 0.5");
  out.check(avg_diff(constant_map(0.0), constant_map(0.0)) == 0.0, "zero maps -> 0");

  std::mt19937_64 rng(4);
  std::size_t asymmetric = 0;
  for (std::size_t i = 0; i < kSymmetryPairs; ++i) {
    SaliencyMap a;
    SaliencyMap b;
    a.values = random_tensor(Shape{1, 1, 28, 28}, rng, -0.5, 1.0);
    b.values = random_tensor(Shape{1, 1, 28, 28}, rng, -0.5, 1.0);
    const FilterMask ma = filtering_mask(a);
    const FilterMask mb = filtering_mask(b);
    asymmetric += sim_ratio(ma, mb) != sim_ratio(mb, ma);
    asymmetric += avg_diff(a, b) != avg_diff(b, a);
  }
  out.check(asymmetric == 0, "swap symmetry on " + std::to_string(kSymmetryPairs) + " random pairs");
  return out;
}

// ---- 5: attack validity ---------------------------------------------------------------

bool in_ball(const Tensor& adv, const Tensor& x, double eps) {
  for (std::size_t i = 0; i < adv.size(); ++i) {
    if (!(adv[i] >= 0.0 && adv[i] <= 1.0)) return false;
    if (adv[i] > x[i] + eps || adv[i] < x[i] - eps) return false;
  }
  return true;
}

Outcome criterion_attacks(const Context& ctx) {
  Outcome out;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, ctx.test.size() - 1);
  std::uniform_real_distribution<double> eps_dist(0.0, 0.3);
  std::uniform_int_distribution<std::size_t> iters_dist(1, 10);
  std::size_t fgsm_ok = 0;
  std::size_t bim_ok = 0;
  std::size_t collapse_ok = 0;
  for (std::size_t run = 0; run < kValidityRuns; ++run) {
    const std::size_t i = pick(rng);
    const Tensor x = ctx.test.image(i);
    const int label = ctx.test.label(i);
    const double eps = eps_dist(rng);
    const std::size_t iters = iters_dist(rng);
    const AdversarialResult f = fgsm(ctx.model, x, label, eps);
    const AdversarialResult b = bim(ctx.model, x, label, eps, eps / 4.0, iters);
    const AdversarialResult b1 = bim(ctx.model, x, label, eps, eps, 1);
    fgsm_ok += in_ball(f.image, x, eps);
    bim_ok += in_ball(b.image, x, eps);
    collapse_ok += std::memcmp(b1.image.data().data(), f.image.data().data(),
                               f.image.size() * sizeof(double)) == 0;
  }
  const std::string runs = "/" + std::to_string(kValidityRuns);
  out.check(fgsm_ok == kValidityRuns, "FGSM in [0,1] and eps-ball " + std::to_string(fgsm_ok) + runs);
  out.check(bim_ok == kValidityRuns, "BIM in [0,1] and eps-ball " + std::to_string(bim_ok) + runs);
  out.check(collapse_ok == kValidityRuns,
            "BIM(1, alpha=eps) == FGSM bitwise " + std::to_string(collapse_ok) + runs);

  std::vector<double> accs;
  std::string curve;
  for (double eps : {0.0, 0.05, 0.1, 0.2}) {
    AttackConfig cfg;
    cfg.family = AttackFamily::FGSM;
    cfg.epsilon = eps;
    const AdversarialCorpus c = generate_corpus(ctx.model, ctx.test, cfg, ctx.test.size(), 1);
    const double acc = 1.0 - static_cast<double>(c.successful().size()) /
                                 static_cast<double>(c.entries.size());
    accs.push_back(acc);
    curve += (curve.empty() ? "" : ", ") + num(acc, 3);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < accs.size(); ++i) monotone &= accs[i] <= accs[i - 1] + kMonotoneSlack;
  out.check(monotone, "FGSM accuracy over eps {0,0.05,0.1,0.2}: " + curve);

  const AdversarialCorpus cw = generate_corpus(ctx.model, ctx.test, cw_config(), kCwImages, 5);
  const double rate =
      static_cast<double>(cw.successful().size()) / static_cast<double>(cw.entries.size());
  out.check(rate >= kMinCwSuccess, "C&W success " + num(rate, 3) + " on " +
                                       std::to_string(kCwImages) + " images (need >= " +
                                       num(kMinCwSuccess, 2) + ")");
  const double secs = seconds_since(t0);
  out.check(secs < kCrit5Seconds, "runtime " + num(secs, 1) + "s");
  return out;
}

// ---- 6: recovery ordering ----------------------------------------------------------

void ensure_cw_corpus(Context& ctx) {
  if (ctx.have_cw_full) return;
  ctx.cw_full = generate_corpus(ctx.model, ctx.test, cw_config(), ctx.test.size(), 6);
  ctx.have_cw_full = true;
}

Outcome criterion_recovery(Context& ctx) {
  Outcome out;
  const auto t0 = Clock::now();
  ensure_cw_corpus(ctx);
  const std::size_t adv_s = ctx.cw_full.successful().size();
  out.check(adv_s >= kMinRecoveryCorpus, "C&W Adv_s size " + std::to_string(adv_s));
  const std::vector<double> fractions{0.05, 0.1, 0.2, 0.3, 0.4};
  for (std::uint64_t seed : {1, 2, 3}) {
    RecoveryOptions opts;
    opts.seed = seed;
    const RecoveryCurve enh = recovery_curve(ctx.model, ctx.cw_full, SaliencySource::EnhancedGuided,
                                             fractions, ctx.test.channel_means(), opts);
    const RecoveryCurve rnd = recovery_curve(ctx.model, ctx.cw_full, SaliencySource::RandomBaseline,
                                             fractions, ctx.test.channel_means(), opts);
    out.check(enh.mean_accuracy() >= rnd.mean_accuracy(),
              "seed " + std::to_string(seed) + ": enhanced " + num(enh.mean_accuracy(), 3) +
                  " vs random " + num(rnd.mean_accuracy(), 3));
  }
  const double secs = seconds_since(t0);
  out.check(secs < kCrit6Seconds, "runtime " + num(secs, 1) + "s");
  return out;
}

// ---- 7: discriminativity ------------------------------------------------------------

Outcome criterion_discriminativity(Context& ctx) {
  Outcome out;
  ensure_cw_corpus(ctx);
  const DiscriminativityReport r = adversary_discriminativity(ctx.model, ctx.test, ctx.cw_full);
  out.check(r.mean_cos_enhanced < r.mean_cos_guided,
            "mean cosine clean vs Adv_s: enhanced " + num(r.mean_cos_enhanced) + " < guided " +
                num(r.mean_cos_guided) + " over " + std::to_string(r.rows.size()) + " images");
  return out;
}

// ---- 8: determinism and round trips ---------------------------------------------------

std::vector<std::uint8_t> corpus_bytes(const AdversarialCorpus& c) {
  const std::string manifest = corpus_manifest_csv(c);
  std::vector<std::uint8_t> out(manifest.begin(), manifest.end());
  for (const auto& e : c.entries) {
    const auto img = encode_raw_f32(e.result.image);
    out.insert(out.end(), img.begin(), img.end());
  }
  return out;
}

std::string eval_bytes(const Context& ctx, const AdversarialCorpus& corpus) {
  const std::vector<double> fractions{0.05, 0.1, 0.2};
  std::vector<RecoveryCurve> curves;
  RecoveryOptions opts;
  opts.seed = 9;
  opts.mode = PerturbMode::UniformNoise;
  for (auto src : {SaliencySource::EnhancedGuided, SaliencySource::RandomBaseline}) {
    curves.push_back(
        recovery_curve(ctx.model, corpus, src, fractions, ctx.test.channel_means(), opts));
  }
  const Dataset head = ctx.test.head(40);
  return recovery_csv(curves) + pair_analysis_csv(pair_analysis(ctx.model, head, 40)) +
         discriminativity_csv(adversary_discriminativity(ctx.model, ctx.test, corpus));
}

Outcome criterion_determinism(const Context& ctx) {
  Outcome out;
  TempDir dir("acceptance");

  save_weights(ctx.model, dir / "a.smw");
  const ModelGraph loaded = load_weights(dir / "a.smw");
  save_weights(loaded, dir / "b.smw");
  const bool same_file = read_file_bytes(dir / "a.smw") == read_file_bytes(dir / "b.smw");
  const Tensor probe = ctx.test.batch(seeded_selection(ctx.test.size(), 16, 8));
  const bool same_forward = forward(loaded, probe) == forward(round_to_float32(ctx.model), probe);
  out.check(same_file && same_forward, "weights save/load/save byte-identical and forward bit-exact");

  const Dataset small = ctx.train.head(300);
  const TrainConfig tc{2, 0.05, 32, 42};
  const ModelGraph init = make_reference_model(ctx.model.input_shape().c == 1
                                                   ? Architecture::MnistReference
                                                   : Architecture::CifarReference,
                                               42);
  const bool same_train = encode_weights(train_sgd(init, small, tc).model) ==
                          encode_weights(train_sgd(init, small, tc).model);
  out.check(same_train, "seeded training byte-identical");

  AttackConfig bim_cfg;
  bim_cfg.family = AttackFamily::BIM;
  bim_cfg.epsilon = 0.15;
  bim_cfg.step_size = 0.03;
  bim_cfg.iterations = 8;
  set_thread_count(1);
  const AdversarialCorpus c1 = generate_corpus(ctx.model, ctx.test, bim_cfg, 60, 3);
  const std::string e1 = eval_bytes(ctx, c1);
  set_thread_count(4);
  const AdversarialCorpus c4 = generate_corpus(ctx.model, ctx.test, bim_cfg, 60, 3);
  const std::string e4 = eval_bytes(ctx, c4);
  set_thread_count(0);
  out.check(corpus_bytes(c1) == corpus_bytes(c4), "seeded attack corpus byte-identical (1 vs 4 threads)");
  out.check(!c1.successful().empty() && e1 == e4, "seeded eval CSVs byte-identical (1 vs 4 threads)");

  const SaliencyMap map = enhanced_map(ctx.model, ctx.test.image(0), 0, 1, Normalization::ChannelEnergy);
  SaliencyMap raw = compute_saliency(ctx.model, ctx.test.image(1), 3, SaliencyMethod::Vanilla);
  save_map_raw(map, dir / "e.f64");
  save_map_raw(raw, dir / "v.f64");
  const Tensor e_back = load_map_raw(dir / "e.f64").values;
  const Tensor v_back = load_map_raw(dir / "v.f64").values;
  const bool bits =
      e_back.shape() == map.values.shape() && v_back.shape() == raw.values.shape() &&
      std::memcmp(e_back.data().data(), map.values.data().data(), e_back.size() * 8) == 0 &&
      std::memcmp(v_back.data().data(), raw.values.data().data(), v_back.size() * 8) == 0;
  out.check(bits, "raw map dump round-trip bit-exact");
  return out;
}

// ---- setup ----------------------------------------------------------------------------

Context prepare() {
  Context ctx;
  TrainConfig cfg;
  std::filesystem::path dir;
  if (const char* env = std::getenv("ADVSAL_MNIST_DIR"); env && *env) {
    dir = env;
    ctx.data_label = "MNIST at " + dir.string();
    cfg = TrainConfig{3, 0.01, 64, 42};
  } else {
    dir = std::filesystem::path(ADVSAL_DATA_DIR) / "digits28";
    ctx.data_label = "digit proxy at " + dir.string();
    // Pinned recipe for the smaller proxy training split.
    cfg = TrainConfig{30, 0.05, 64, 42};
  }
  ctx.train = ingest_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  ctx.test = ingest_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  const auto t0 = Clock::now();
  ctx.model =
      train_sgd(make_reference_model(Architecture::MnistReference, cfg.seed), ctx.train, cfg).model;
  ctx.train_seconds = seconds_since(t0);
  ctx.test_accuracy = accuracy(ctx.model, ctx.test);
  std::printf("setup: %s, %zu train / %zu test, %zu epochs lr %g batch %zu seed %llu\n",
              ctx.data_label.c_str(), ctx.train.size(), ctx.test.size(), cfg.epochs,
              cfg.learning_rate, cfg.batch_size, static_cast<unsigned long long>(cfg.seed));
  std::printf("setup: trained in %.1fs, test accuracy %.4f\n", ctx.train_seconds,
              ctx.test_accuracy);
  return ctx;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = seconds_since(t0);
    std::printf("CRITERION %d %s: %s (%s) [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };

  report(1, "gradient oracle", criterion_gradients);
  report(2, "guided-rule suite", criterion_guided_rule);
  report(4, "metric exactness", criterion_metrics);

  Context ctx;
  try {
    ctx = prepare();
  } catch (const std::exception& e) {
    std::printf("setup failed: %s\n", e.what());
    for (int id : {3, 5, 6, 7, 8}) std::printf("CRITERION %d FAIL: setup failed\n", id);
    return 1;
  }
  report(3, "filtering-effect similarity", [&] { return criterion_similarity(ctx); });
  report(5, "attack validity", [&] { return criterion_attacks(ctx); });
  report(6, "recovery-curve ordering", [&] { return criterion_recovery(ctx); });
  report(7, "adversary discriminativity", [&] { return criterion_discriminativity(ctx); });
  report(8, "determinism and round trips", [&] { return criterion_determinism(ctx); });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
