#include "advsal/advsal.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "attacks.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "io_util.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "report_io.hpp"
#include "saliency.hpp"
#include "train.hpp"
#include "weights_io.hpp"

struct advsal_tensor {
  advsal::Tensor value;
};
struct advsal_dataset {
  advsal::Dataset value;
};
struct advsal_model {
  advsal::ModelGraph value;
};
struct advsal_map {
  advsal::SaliencyMap value;
  advsal_tensor view;
};
struct advsal_corpus {
  advsal::AdversarialCorpus value;
};

namespace {

thread_local std::string g_last_error;

advsal_status fail(advsal_status code, const char* what) {
  g_last_error = what;
  return code;
}

// Runs `fn`, translating core exceptions into status codes.
template <typename Fn>
advsal_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return ADVSAL_OK;
  } catch (const advsal::InvalidArgument& e) {
    return fail(ADVSAL_E_INVALID, e.what());
  } catch (const advsal::ShapeError& e) {
    return fail(ADVSAL_E_SHAPE, e.what());
  } catch (const advsal::FormatError& e) {
    return fail(ADVSAL_E_FORMAT, e.what());
  } catch (const advsal::IoError& e) {
    return fail(ADVSAL_E_IO, e.what());
  } catch (const advsal::NumericError& e) {
    return fail(ADVSAL_E_NUMERIC, e.what());
  } catch (const advsal::EmptyInputError& e) {
    return fail(ADVSAL_E_EMPTY, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ADVSAL_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(ADVSAL_E_INTERNAL, e.what());
  } catch (...) {
    return fail(ADVSAL_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) throw advsal::InvalidArgument(std::string(name) + " must not be NULL");
}

advsal::SaliencyMethod to_method(advsal_method m) {
  switch (m) {
    case ADVSAL_METHOD_VANILLA: return advsal::SaliencyMethod::Vanilla;
    case ADVSAL_METHOD_GUIDED: return advsal::SaliencyMethod::Guided;
    case ADVSAL_METHOD_ENHANCED: return advsal::SaliencyMethod::EnhancedGuided;
  }
  throw advsal::InvalidArgument("unknown saliency method");
}

advsal_method from_method(advsal::SaliencyMethod m) {
  switch (m) {
    case advsal::SaliencyMethod::Vanilla: return ADVSAL_METHOD_VANILLA;
    case advsal::SaliencyMethod::Guided: return ADVSAL_METHOD_GUIDED;
    case advsal::SaliencyMethod::EnhancedGuided: return ADVSAL_METHOD_ENHANCED;
  }
  return ADVSAL_METHOD_VANILLA;
}

advsal::Normalization to_norm(advsal_norm n) {
  switch (n) {
    case ADVSAL_NORM_NONE: return advsal::Normalization::None;
    case ADVSAL_NORM_MAX: return advsal::Normalization::MaxValue;
    case ADVSAL_NORM_ENERGY: return advsal::Normalization::Energy;
    case ADVSAL_NORM_CHANNEL_ENERGY: return advsal::Normalization::ChannelEnergy;
  }
  throw advsal::InvalidArgument("unknown normalization");
}

advsal_norm from_norm(advsal::Normalization n) {
  switch (n) {
    case advsal::Normalization::None: return ADVSAL_NORM_NONE;
    case advsal::Normalization::MaxValue: return ADVSAL_NORM_MAX;
    case advsal::Normalization::Energy: return ADVSAL_NORM_ENERGY;
    case advsal::Normalization::ChannelEnergy: return ADVSAL_NORM_CHANNEL_ENERGY;
  }
  return ADVSAL_NORM_NONE;
}

advsal::AttackConfig to_attack(const advsal_attack_config& c) {
  advsal::AttackConfig out;
  switch (c.family) {
    case ADVSAL_ATTACK_FGSM: out.family = advsal::AttackFamily::FGSM; break;
    case ADVSAL_ATTACK_BIM: out.family = advsal::AttackFamily::BIM; break;
    case ADVSAL_ATTACK_CW: out.family = advsal::AttackFamily::CW_L2; break;
    default: throw advsal::InvalidArgument("unknown attack family");
  }
  out.epsilon = c.epsilon;
  out.step_size = c.step_size;
  out.iterations = c.iterations;
  out.cw_c = c.cw_c;
  out.cw_confidence = c.cw_confidence;
  out.cw_lr = c.cw_lr;
  switch (c.cw_optimizer) {
    case ADVSAL_CW_ADAM: out.cw_optimizer = advsal::CwOptimizer::Adam; break;
    case ADVSAL_CW_GD: out.cw_optimizer = advsal::CwOptimizer::GradientDescent; break;
    default: throw advsal::InvalidArgument("unknown C&W optimizer");
  }
  return out;
}

advsal_attack_config from_attack(const advsal::AttackConfig& c) {
  advsal_attack_config out{};
  switch (c.family) {
    case advsal::AttackFamily::FGSM: out.family = ADVSAL_ATTACK_FGSM; break;
    case advsal::AttackFamily::BIM: out.family = ADVSAL_ATTACK_BIM; break;
    case advsal::AttackFamily::CW_L2: out.family = ADVSAL_ATTACK_CW; break;
  }
  out.epsilon = c.epsilon;
  out.step_size = c.step_size;
  out.iterations = c.iterations;
  out.cw_c = c.cw_c;
  out.cw_confidence = c.cw_confidence;
  out.cw_lr = c.cw_lr;
  out.cw_optimizer =
      c.cw_optimizer == advsal::CwOptimizer::Adam ? ADVSAL_CW_ADAM : ADVSAL_CW_GD;
  return out;
}

advsal::SaliencySource to_source(advsal_source s) {
  switch (s) {
    case ADVSAL_SOURCE_ENHANCED: return advsal::SaliencySource::EnhancedGuided;
    case ADVSAL_SOURCE_GUIDED: return advsal::SaliencySource::Guided;
    case ADVSAL_SOURCE_VANILLA: return advsal::SaliencySource::Vanilla;
    case ADVSAL_SOURCE_RANDOM: return advsal::SaliencySource::RandomBaseline;
  }
  throw advsal::InvalidArgument("unknown saliency source");
}

advsal_attack_result to_result(const advsal::CorpusEntry& e) {
  advsal_attack_result r{};
  r.dataset_index = e.dataset_index;
  r.label = e.result.label;
  r.clean_prediction = e.result.original_prediction;
  r.adversarial_prediction = e.result.adversarial_prediction;
  r.success = e.result.success ? 1 : 0;
  r.l2 = e.result.l2;
  r.linf = e.result.linf;
  return r;
}

advsal_map* wrap_map(advsal::SaliencyMap map) {
  auto* out = new advsal_map{std::move(map), {}};
  out->view.value = out->value.values;
  return out;
}

}  // namespace

extern "C" {

const char* advsal_last_error(void) { return g_last_error.c_str(); }

const char* advsal_version(void) { return "1.0.0"; }

void advsal_set_threads(size_t n) { advsal::set_thread_count(n); }

// ---- tensors ----------------------------------------------------------------

advsal_status advsal_tensor_create(size_t n, size_t c, size_t h, size_t w, const double* data,
                                   advsal_tensor** out) {
  return guarded([&] {
    require(out, "out");
    advsal::Shape s{n, c, h, w};
    advsal::Tensor t(s);
    if (data) {
      std::copy(data, data + s.count(), t.data().begin());
      advsal::require_finite(t, "advsal_tensor_create");
    }
    *out = new advsal_tensor{std::move(t)};
  });
}

void advsal_tensor_free(advsal_tensor* t) { delete t; }

void advsal_tensor_shape(const advsal_tensor* t, size_t extents[4]) {
  if (!t || !extents) return;
  const auto& s = t->value.shape();
  extents[0] = s.n;
  extents[1] = s.c;
  extents[2] = s.h;
  extents[3] = s.w;
}

size_t advsal_tensor_size(const advsal_tensor* t) { return t ? t->value.size() : 0; }

const double* advsal_tensor_data(const advsal_tensor* t) {
  return t ? t->value.data().data() : nullptr;
}

advsal_status advsal_tensor_load_f32(const char* path, advsal_tensor** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    advsal::Tensor t;
    try {
      t = advsal::decode_raw_f32(advsal::read_file_bytes(path));
    } catch (const advsal::FormatError& e) {
      throw advsal::FormatError(std::string(path) + ": " + e.what());
    }
    advsal::require_finite(t, path);
    *out = new advsal_tensor{std::move(t)};
  });
}

// ---- datasets ---------------------------------------------------------------

advsal_status advsal_dataset_load_idx(const char* images_path, const char* labels_path,
                                      advsal_dataset** out) {
  return guarded([&] {
    require(images_path, "images_path");
    require(labels_path, "labels_path");
    require(out, "out");
    *out = new advsal_dataset{advsal::ingest_idx(images_path, labels_path)};
  });
}

advsal_status advsal_dataset_load_cifar10(const char* const* paths, size_t count,
                                          advsal_dataset** out) {
  return guarded([&] {
    require(paths, "paths");
    require(out, "out");
    std::vector<std::filesystem::path> ps;
    for (size_t i = 0; i < count; ++i) {
      require(paths[i], "paths[i]");
      ps.emplace_back(paths[i]);
    }
    *out = new advsal_dataset{advsal::ingest_cifar10_binary(ps)};
  });
}

void advsal_dataset_free(advsal_dataset* d) { delete d; }

size_t advsal_dataset_size(const advsal_dataset* d) { return d ? d->value.size() : 0; }

size_t advsal_dataset_channels(const advsal_dataset* d) {
  return d ? d->value.item_shape().c : 0;
}

advsal_status advsal_dataset_image(const advsal_dataset* d, size_t index, advsal_tensor** out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "out");
    *out = new advsal_tensor{d->value.image(index)};
  });
}

advsal_status advsal_dataset_label(const advsal_dataset* d, size_t index, int* out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "out");
    if (index >= d->value.size()) throw advsal::InvalidArgument("dataset index out of range");
    *out = d->value.label(index);
  });
}

void advsal_dataset_channel_means(const advsal_dataset* d, double* means, size_t count) {
  if (!d || !means) return;
  const auto& m = d->value.channel_means();
  for (size_t i = 0; i < count && i < m.size(); ++i) means[i] = m[i];
}

// ---- models -----------------------------------------------------------------

advsal_status advsal_model_create(advsal_arch arch, uint64_t seed, advsal_model** out) {
  return guarded([&] {
    require(out, "out");
    advsal::Architecture a;
    switch (arch) {
      case ADVSAL_ARCH_MNIST: a = advsal::Architecture::MnistReference; break;
      case ADVSAL_ARCH_CIFAR: a = advsal::Architecture::CifarReference; break;
      default: throw advsal::InvalidArgument("unknown architecture");
    }
    *out = new advsal_model{advsal::make_reference_model(a, seed)};
  });
}

advsal_status advsal_model_load(const char* path, advsal_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new advsal_model{advsal::load_weights(path)};
  });
}

advsal_status advsal_model_save(const advsal_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    advsal::save_weights(m->value, path);
  });
}

void advsal_model_free(advsal_model* m) { delete m; }

size_t advsal_model_classes(const advsal_model* m) { return m ? m->value.num_classes() : 0; }

void advsal_model_input_shape(const advsal_model* m, size_t extents[3]) {
  if (!m || !extents) return;
  const auto& s = m->value.input_shape();
  extents[0] = s.c;
  extents[1] = s.h;
  extents[2] = s.w;
}

advsal_status advsal_model_logits(const advsal_model* m, const advsal_tensor* image,
                                  double* logits, size_t count) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(logits, "logits");
    if (image->value.shape().n != 1) throw advsal::ShapeError("expects a single image");
    const advsal::Tensor z = advsal::forward(m->value, image->value);
    if (count < z.size()) throw advsal::InvalidArgument("logits buffer too small");
    std::copy(z.data().begin(), z.data().end(), logits);
  });
}

advsal_status advsal_model_predict(const advsal_model* m, const advsal_tensor* image, int* out) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(out, "out");
    if (image->value.shape().n != 1) throw advsal::ShapeError("expects a single image");
    *out = advsal::predict(m->value, image->value)[0];
  });
}

advsal_status advsal_model_accuracy(const advsal_model* m, const advsal_dataset* d, double* out) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(out, "out");
    *out = advsal::accuracy(m->value, d->value);
  });
}

// ---- training ---------------------------------------------------------------

advsal_status advsal_train(const advsal_model* model, const advsal_dataset* train,
                           const advsal_dataset* eval, const advsal_train_config* cfg,
                           advsal_model** out, advsal_epoch_stats* trace, int* diverged_epoch) {
  return guarded([&] {
    require(model, "model");
    require(train, "train");
    require(cfg, "config");
    require(out, "out");
    advsal::TrainConfig tc;
    tc.epochs = cfg->epochs;
    tc.learning_rate = cfg->learning_rate;
    tc.batch_size = cfg->batch_size;
    tc.seed = cfg->seed;
    try {
      advsal::TrainResult r =
          advsal::train_sgd(model->value, train->value, tc, eval ? &eval->value : nullptr);
      if (trace) {
        for (size_t i = 0; i < r.trace.size(); ++i) {
          const auto& e = r.trace[i];
          trace[i] = advsal_epoch_stats{
              e.epoch, e.mean_loss, e.train_accuracy,
              e.eval_accuracy.value_or(std::numeric_limits<double>::quiet_NaN())};
        }
      }
      *out = new advsal_model{std::move(r.model)};
    } catch (const advsal::DivergenceError& e) {
      if (diverged_epoch) *diverged_epoch = e.epoch();
      throw;
    }
  });
}

advsal_status advsal_write_train_trace_csv(const advsal_epoch_stats* trace, size_t count,
                                           const char* path) {
  return guarded([&] {
    require(path, "path");
    if (count > 0) require(trace, "trace");
    std::vector<advsal::EpochStats> t;
    for (size_t i = 0; i < count; ++i) {
      advsal::EpochStats e;
      e.epoch = trace[i].epoch;
      e.mean_loss = trace[i].mean_loss;
      e.train_accuracy = trace[i].train_accuracy;
      if (!std::isnan(trace[i].eval_accuracy)) e.eval_accuracy = trace[i].eval_accuracy;
      t.push_back(e);
    }
    advsal::write_file_atomic(path, advsal::train_trace_csv(t));
  });
}

// ---- saliency ---------------------------------------------------------------

advsal_status advsal_saliency(const advsal_model* m, const advsal_tensor* image,
                              size_t class_index, advsal_method method, advsal_map** out) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(out, "out");
    *out = wrap_map(
        advsal::compute_saliency(m->value, image->value, class_index, to_method(method)));
  });
}

advsal_status advsal_saliency_enhanced(const advsal_model* m, const advsal_tensor* image,
                                       size_t class_k, size_t class_m, advsal_norm norm,
                                       advsal_map** out) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(out, "out");
    *out = wrap_map(
        advsal::enhanced_map(m->value, image->value, class_k, class_m, to_norm(norm)));
  });
}

advsal_status advsal_map_normalize(const advsal_map* map, advsal_norm norm, advsal_map** out) {
  return guarded([&] {
    require(map, "map");
    require(out, "out");
    *out = wrap_map(advsal::normalize(map->value, to_norm(norm)));
  });
}

advsal_status advsal_select_contrast_class(const advsal_model* m, const advsal_tensor* image,
                                           size_t explained, size_t* out) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(out, "out");
    *out = advsal::select_contrast_class(m->value, image->value, explained);
  });
}

void advsal_map_free(advsal_map* map) { delete map; }

void advsal_map_get_info(const advsal_map* map, advsal_map_info* info) {
  if (!map || !info) return;
  const auto& v = map->value;
  info->explained_class = v.explained_class;
  info->contrast_class = v.contrast_class ? static_cast<int>(*v.contrast_class) : -1;
  info->method = from_method(v.method);
  info->normalization = from_norm(v.normalization);
  info->degenerate_channels = v.degenerate_channels.size();
}

const advsal_tensor* advsal_map_values(const advsal_map* map) {
  return map ? &map->view : nullptr;
}

advsal_status advsal_map_write_pgm(const advsal_map* map, const char* path) {
  return guarded([&] {
    require(map, "map");
    require(path, "path");
    advsal::write_file_atomic(path, advsal::render_heatmap_pgm(map->value.values));
  });
}

advsal_status advsal_map_dump(const advsal_map* map, const char* path) {
  return guarded([&] {
    require(map, "map");
    require(path, "path");
    advsal::save_map_raw(map->value, path);
  });
}

advsal_status advsal_map_load(const char* path, advsal_map** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap_map(advsal::load_map_raw(path));
  });
}

// ---- attacks ----------------------------------------------------------------

advsal_attack_config advsal_attack_config_default(void) {
  return from_attack(advsal::AttackConfig{});
}

advsal_status advsal_attack_image(const advsal_model* m, const advsal_tensor* image, int label,
                                  const advsal_attack_config* cfg, advsal_attack_result* result,
                                  advsal_tensor** adversarial) {
  return guarded([&] {
    require(m, "model");
    require(image, "image");
    require(cfg, "config");
    advsal::CorpusEntry e{0, advsal::run_attack(m->value, image->value, label, to_attack(*cfg))};
    if (result) *result = to_result(e);
    if (adversarial) *adversarial = new advsal_tensor{std::move(e.result.image)};
  });
}

advsal_status advsal_corpus_generate(const advsal_model* m, const advsal_dataset* d,
                                     const advsal_attack_config* cfg, size_t count, uint64_t seed,
                                     advsal_corpus** out) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    require(cfg, "config");
    require(out, "out");
    *out = new advsal_corpus{
        advsal::generate_corpus(m->value, d->value, to_attack(*cfg), count, seed)};
  });
}

void advsal_corpus_free(advsal_corpus* c) { delete c; }

size_t advsal_corpus_size(const advsal_corpus* c) { return c ? c->value.entries.size() : 0; }

size_t advsal_corpus_success_count(const advsal_corpus* c) {
  return c ? c->value.successful().size() : 0;
}

advsal_status advsal_corpus_entry(const advsal_corpus* c, size_t index,
                                  advsal_attack_result* out) {
  return guarded([&] {
    require(c, "corpus");
    require(out, "out");
    if (index >= c->value.entries.size()) throw advsal::InvalidArgument("entry out of range");
    *out = to_result(c->value.entries[index]);
  });
}

advsal_status advsal_corpus_image(const advsal_corpus* c, size_t index, advsal_tensor** out) {
  return guarded([&] {
    require(c, "corpus");
    require(out, "out");
    if (index >= c->value.entries.size()) throw advsal::InvalidArgument("entry out of range");
    *out = new advsal_tensor{c->value.entries[index].result.image};
  });
}

advsal_attack_config advsal_corpus_config(const advsal_corpus* c) {
  return c ? from_attack(c->value.config) : advsal_attack_config_default();
}

advsal_status advsal_corpus_save(const advsal_corpus* c, const char* dir) {
  return guarded([&] {
    require(c, "corpus");
    require(dir, "dir");
    advsal::save_corpus(c->value, dir);
  });
}

advsal_status advsal_corpus_load(const char* dir, advsal_corpus** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new advsal_corpus{advsal::load_corpus(dir)};
  });
}

advsal_status advsal_corpus_refresh(advsal_corpus* c, const advsal_model* m,
                                    const advsal_dataset* clean) {
  return guarded([&] {
    require(c, "corpus");
    require(m, "model");
    require(clean, "dataset");
    advsal::AdversarialCorpus copy = c->value;
    advsal::refresh_corpus(m->value, clean->value, copy);
    c->value = std::move(copy);
  });
}

// ---- evaluation -------------------------------------------------------------

advsal_status advsal_sim_ratio(const advsal_map* a, const advsal_map* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = advsal::sim_ratio(advsal::filtering_mask(a->value), advsal::filtering_mask(b->value));
  });
}

advsal_status advsal_avg_diff(const advsal_map* a, const advsal_map* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = advsal::avg_diff(a->value, b->value);
  });
}

advsal_status advsal_eval_pair_analysis(const advsal_model* m, const advsal_dataset* d,
                                        size_t count, const char* pairs_csv,
                                        const char* histogram_csv,
                                        advsal_pair_summary* summary) {
  return guarded([&] {
    require(m, "model");
    require(d, "dataset");
    const advsal::PairAnalysisReport r = advsal::pair_analysis(m->value, d->value, count);
    if (r.pairs.empty()) throw advsal::EmptyInputError("pair analysis over zero images");
    if (pairs_csv) advsal::write_file_atomic(pairs_csv, advsal::pair_analysis_csv(r));
    if (histogram_csv) advsal::write_file_atomic(histogram_csv, advsal::pair_histogram_csv(r));
    if (summary) {
      double lo = r.pairs.front().avg_diff;
      double hi = lo;
      for (const auto& p : r.pairs) {
        lo = std::min(lo, p.avg_diff);
        hi = std::max(hi, p.avg_diff);
      }
      *summary = advsal_pair_summary{r.pairs.size(), r.mean_sim_ratio(), lo, hi};
    }
  });
}

advsal_status advsal_eval_recovery(const advsal_model* m, const advsal_corpus* corpus,
                                   const double* channel_means, size_t channels,
                                   const advsal_source* sources, size_t n_sources,
                                   const double* fractions, size_t n_fractions,
                                   advsal_perturb mode, uint64_t seed, const char* csv_path,
                                   double* accuracies) {
  return guarded([&] {
    require(m, "model");
    require(corpus, "corpus");
    if (n_sources > 0) require(sources, "sources");
    if (n_fractions > 0) require(fractions, "fractions");
    if (channels > 0) require(channel_means, "channel_means");
    advsal::RecoveryOptions opt;
    switch (mode) {
      case ADVSAL_PERTURB_MEAN: opt.mode = advsal::PerturbMode::DatasetMean; break;
      case ADVSAL_PERTURB_NOISE: opt.mode = advsal::PerturbMode::UniformNoise; break;
      default: throw advsal::InvalidArgument("unknown perturbation mode");
    }
    opt.seed = seed;
    const std::span<const double> means(channel_means, channels);
    const std::span<const double> fr(fractions, n_fractions);
    std::vector<advsal::RecoveryCurve> curves;
    for (size_t s = 0; s < n_sources; ++s) {
      curves.push_back(
          advsal::recovery_curve(m->value, corpus->value, to_source(sources[s]), fr, means, opt));
    }
    if (csv_path) advsal::write_file_atomic(csv_path, advsal::recovery_csv(curves));
    if (accuracies) {
      for (size_t s = 0; s < curves.size(); ++s) {
        for (size_t f = 0; f < n_fractions; ++f) {
          accuracies[s * n_fractions + f] = curves[s].accuracies[f];
        }
      }
    }
  });
}

advsal_status advsal_eval_discriminativity(const advsal_model* m, const advsal_dataset* clean,
                                           const advsal_corpus* corpus, const char* csv_path,
                                           double* mean_cos_enhanced, double* mean_cos_guided) {
  return guarded([&] {
    require(m, "model");
    require(clean, "dataset");
    require(corpus, "corpus");
    const advsal::DiscriminativityReport r =
        advsal::adversary_discriminativity(m->value, clean->value, corpus->value);
    if (csv_path) advsal::write_file_atomic(csv_path, advsal::discriminativity_csv(r));
    if (mean_cos_enhanced) *mean_cos_enhanced = r.mean_cos_enhanced;
    if (mean_cos_guided) *mean_cos_guided = r.mean_cos_guided;
  });
}

advsal_status advsal_eval_case_report(const advsal_model* m, const advsal_dataset* clean,
                                      const advsal_corpus* const* corpora, size_t n_corpora,
                                      size_t dataset_index, const advsal_method* methods,
                                      size_t n_methods, const char* out_dir,
                                      size_t* maps_written) {
  return guarded([&] {
    require(m, "model");
    require(clean, "dataset");
    require(out_dir, "out_dir");
    if (n_corpora > 0) require(corpora, "corpora");
    if (n_methods > 0) require(methods, "methods");
    std::vector<advsal::AdversarialResult> variants;
    std::vector<std::string> attack_names;
    for (size_t i = 0; i < n_corpora; ++i) {
      require(corpora[i], "corpora[i]");
      for (const auto& e : corpora[i]->value.entries) {
        if (e.dataset_index == dataset_index) {
          variants.push_back(e.result);
          attack_names.emplace_back(advsal::attack_name(corpora[i]->value.config.family));
          break;
        }
      }
    }
    std::vector<advsal::SaliencyMethod> ms;
    for (size_t i = 0; i < n_methods; ++i) ms.push_back(to_method(methods[i]));
    const advsal::CaseReport report =
        advsal::adv_case_report(m->value, clean->value.image(dataset_index), variants, ms);

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw advsal::IoError("cannot create directory " + dir.string());
    std::string csv = "image,variant,attack,predicted,success,method,map_file\n";
    for (const auto& cm : report.maps) {
      const std::string attack = cm.variant == 0 ? "clean" : attack_names[cm.variant - 1];
      const std::string file = "case_" + std::to_string(dataset_index) + "_v" +
                               std::to_string(cm.variant) + "_" + attack + "_" +
                               advsal::method_name(cm.method) + ".pgm";
      advsal::write_file_atomic(dir / file, advsal::render_heatmap_pgm(cm.map.values));
      csv += std::to_string(dataset_index) + "," + std::to_string(cm.variant) + "," + attack +
             "," + std::to_string(cm.predicted) + "," + (cm.success ? "1" : "0") + "," +
             advsal::method_name(cm.method) + "," + file + "\n";
    }
    advsal::write_file_atomic(dir / "case_report.csv", csv);
    if (maps_written) *maps_written = report.maps.size();
  });
}

}  // extern "C"
