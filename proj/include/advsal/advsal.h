/*
 * advsal: saliency maps (vanilla gradient, guided backpropagation and the
 * enhanced class-contrast variant), gradient-based adversarial attacks and
 * the evaluation metrics that relate the two, behind a C ABI.
 *
 * Conventions
 *   - Every object is an opaque handle created by an advsal_*_create/load/...
 *     function and released with the matching advsal_*_free. Passing NULL to
 *     a free function is a no-op.
 *   - Functions returning advsal_status write results through out-pointers
 *     only on ADVSAL_OK. On failure, advsal_last_error() returns a message
 *     describing the most recent failure on the calling thread.
 *   - Handles are immutable once created, except advsal_corpus, which is
 *     only modified by advsal_corpus_refresh. Immutable handles may be shared
 *     across threads.
 *   - Tensors are NCHW, row-major, 64-bit floating point.
 */
#ifndef ADVSAL_ADVSAL_H
#define ADVSAL_ADVSAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ADVSAL_BUILDING)
#    define ADVSAL_API __declspec(dllexport)
#  else
#    define ADVSAL_API __declspec(dllimport)
#  endif
#else
#  define ADVSAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum advsal_status {
  ADVSAL_OK = 0,
  ADVSAL_E_INVALID = 1,  /* precondition / argument error */
  ADVSAL_E_IO = 2,       /* file could not be read or written */
  ADVSAL_E_NUMERIC = 3,  /* non-finite values, training divergence */
  ADVSAL_E_EMPTY = 4,    /* required input set is empty */
  ADVSAL_E_FORMAT = 5,   /* malformed file contents */
  ADVSAL_E_SHAPE = 6,    /* tensor extents do not fit */
  ADVSAL_E_INTERNAL = 7
} advsal_status;

typedef struct advsal_tensor advsal_tensor;
typedef struct advsal_dataset advsal_dataset;
typedef struct advsal_model advsal_model;
typedef struct advsal_map advsal_map;
typedef struct advsal_corpus advsal_corpus;

ADVSAL_API const char* advsal_last_error(void);
ADVSAL_API const char* advsal_version(void);

/* Worker threads used by corpus-level loops; 0 = hardware concurrency. */
ADVSAL_API void advsal_set_threads(size_t n);

/* ---- tensors ------------------------------------------------------------ */

/* Copies n*c*h*w values from `data` (which may be NULL for zeros). */
ADVSAL_API advsal_status advsal_tensor_create(size_t n, size_t c, size_t h, size_t w,
                                              const double* data, advsal_tensor** out);
ADVSAL_API void advsal_tensor_free(advsal_tensor* t);
/* Writes the four extents N, C, H, W. */
ADVSAL_API void advsal_tensor_shape(const advsal_tensor* t, size_t extents[4]);
ADVSAL_API size_t advsal_tensor_size(const advsal_tensor* t);
/* Borrowed pointer, valid while the tensor lives. */
ADVSAL_API const double* advsal_tensor_data(const advsal_tensor* t);
/* Raw tensor file written by advsal_corpus_save (extents + 32-bit values). */
ADVSAL_API advsal_status advsal_tensor_load_f32(const char* path, advsal_tensor** out);

/* ---- datasets ----------------------------------------------------------- */

ADVSAL_API advsal_status advsal_dataset_load_idx(const char* images_path, const char* labels_path,
                                                 advsal_dataset** out);
/* Concatenates `count` CIFAR-10 binary batch files. */
ADVSAL_API advsal_status advsal_dataset_load_cifar10(const char* const* paths, size_t count,
                                                     advsal_dataset** out);
ADVSAL_API void advsal_dataset_free(advsal_dataset* d);
ADVSAL_API size_t advsal_dataset_size(const advsal_dataset* d);
ADVSAL_API size_t advsal_dataset_channels(const advsal_dataset* d);
ADVSAL_API advsal_status advsal_dataset_image(const advsal_dataset* d, size_t index,
                                              advsal_tensor** out);
ADVSAL_API advsal_status advsal_dataset_label(const advsal_dataset* d, size_t index, int* out);
/* Copies min(count, channels) per-channel means into `means`. */
ADVSAL_API void advsal_dataset_channel_means(const advsal_dataset* d, double* means, size_t count);

/* ---- models ------------------------------------------------------------- */

typedef enum advsal_arch {
  ADVSAL_ARCH_MNIST = 0, /* 1x28x28: conv8-relu-pool-conv16-relu-pool-dense10 */
  ADVSAL_ARCH_CIFAR = 1  /* 3x32x32: three conv-relu-pool stages, dense10 */
} advsal_arch;

ADVSAL_API advsal_status advsal_model_create(advsal_arch arch, uint64_t seed, advsal_model** out);
/* "SMW1" weight files. */
ADVSAL_API advsal_status advsal_model_load(const char* path, advsal_model** out);
ADVSAL_API advsal_status advsal_model_save(const advsal_model* m, const char* path);
ADVSAL_API void advsal_model_free(advsal_model* m);
ADVSAL_API size_t advsal_model_classes(const advsal_model* m);
/* Writes C, H, W of one input item. */
ADVSAL_API void advsal_model_input_shape(const advsal_model* m, size_t extents[3]);
/* Pre-softmax logits of a single image into `logits` (capacity `count`). */
ADVSAL_API advsal_status advsal_model_logits(const advsal_model* m, const advsal_tensor* image,
                                             double* logits, size_t count);
ADVSAL_API advsal_status advsal_model_predict(const advsal_model* m, const advsal_tensor* image,
                                              int* out);
ADVSAL_API advsal_status advsal_model_accuracy(const advsal_model* m, const advsal_dataset* d,
                                               double* out);

/* ---- training ----------------------------------------------------------- */

typedef struct advsal_train_config {
  size_t epochs;
  double learning_rate;
  size_t batch_size;
  uint64_t seed;
} advsal_train_config;

typedef struct advsal_epoch_stats {
  size_t epoch;
  double mean_loss;
  double train_accuracy;
  double eval_accuracy; /* NaN when no eval set was given */
} advsal_epoch_stats;

/* Trains a copy of `model`. `eval` may be NULL. `trace` must hold
 * cfg->epochs entries (or be NULL). On divergence returns ADVSAL_E_NUMERIC
 * and writes the offending 1-based epoch to `diverged_epoch` if non-NULL. */
ADVSAL_API advsal_status advsal_train(const advsal_model* model, const advsal_dataset* train,
                                      const advsal_dataset* eval, const advsal_train_config* cfg,
                                      advsal_model** out, advsal_epoch_stats* trace,
                                      int* diverged_epoch);
ADVSAL_API advsal_status advsal_write_train_trace_csv(const advsal_epoch_stats* trace,
                                                      size_t count, const char* path);

/* ---- saliency ----------------------------------------------------------- */

typedef enum advsal_method {
  ADVSAL_METHOD_VANILLA = 0,
  ADVSAL_METHOD_GUIDED = 1,
  ADVSAL_METHOD_ENHANCED = 2
} advsal_method;

typedef enum advsal_norm {
  ADVSAL_NORM_NONE = 0,
  ADVSAL_NORM_MAX = 1,
  ADVSAL_NORM_ENERGY = 2,
  ADVSAL_NORM_CHANNEL_ENERGY = 3
} advsal_norm;

typedef struct advsal_map_info {
  size_t explained_class;
  int contrast_class; /* -1 when absent */
  advsal_method method;
  advsal_norm normalization;
  size_t degenerate_channels; /* channels zeroed by a zero denominator */
} advsal_map_info;

/* Raw vanilla or guided map (method must not be ENHANCED). */
ADVSAL_API advsal_status advsal_saliency(const advsal_model* m, const advsal_tensor* image,
                                         size_t class_index, advsal_method method,
                                         advsal_map** out);
/* max(0, norm(guided_k) - norm(guided_m)); class_k must differ from class_m. */
ADVSAL_API advsal_status advsal_saliency_enhanced(const advsal_model* m,
                                                  const advsal_tensor* image, size_t class_k,
                                                  size_t class_m, advsal_norm norm,
                                                  advsal_map** out);
ADVSAL_API advsal_status advsal_map_normalize(const advsal_map* map, advsal_norm norm,
                                              advsal_map** out);
/* Highest-logit class other than `explained` (ties to lower index). */
ADVSAL_API advsal_status advsal_select_contrast_class(const advsal_model* m,
                                                      const advsal_tensor* image,
                                                      size_t explained, size_t* out);
ADVSAL_API void advsal_map_free(advsal_map* map);
ADVSAL_API void advsal_map_get_info(const advsal_map* map, advsal_map_info* info);
/* Borrowed view of the map values, valid while the map lives. */
ADVSAL_API const advsal_tensor* advsal_map_values(const advsal_map* map);
/* Binary graymap (P5) of channel-summed |values|, min-max scaled. */
ADVSAL_API advsal_status advsal_map_write_pgm(const advsal_map* map, const char* path);
/* Extents + 64-bit little-endian values; reload is bit-exact. */
ADVSAL_API advsal_status advsal_map_dump(const advsal_map* map, const char* path);
ADVSAL_API advsal_status advsal_map_load(const char* path, advsal_map** out);

/* ---- attacks ------------------------------------------------------------ */

typedef enum advsal_attack {
  ADVSAL_ATTACK_FGSM = 0,
  ADVSAL_ATTACK_BIM = 1,
  ADVSAL_ATTACK_CW = 2
} advsal_attack;

/* Update rule for the C&W variable: Adam, or plain gradient descent. */
typedef enum advsal_cw_optimizer { ADVSAL_CW_ADAM = 0, ADVSAL_CW_GD = 1 } advsal_cw_optimizer;

typedef struct advsal_attack_config {
  advsal_attack family;
  double epsilon;
  double step_size;
  size_t iterations;
  double cw_c;
  double cw_confidence;
  double cw_lr;
  advsal_cw_optimizer cw_optimizer;
} advsal_attack_config;

/* Defaults: FGSM, eps 0.1, alpha 0.01, 10 iterations, c 1, kappa 0, lr 0.01, Adam. */
ADVSAL_API advsal_attack_config advsal_attack_config_default(void);

typedef struct advsal_attack_result {
  size_t dataset_index;
  int label;
  int clean_prediction;
  int adversarial_prediction;
  int success; /* adversarial_prediction != label */
  double l2;
  double linf;
} advsal_attack_result;

/* Single image attack. `adversarial` receives the perturbed image if non-NULL. */
ADVSAL_API advsal_status advsal_attack_image(const advsal_model* m, const advsal_tensor* image,
                                             int label, const advsal_attack_config* cfg,
                                             advsal_attack_result* result,
                                             advsal_tensor** adversarial);

/* Attacks `count` items drawn by a seeded permutation of the dataset. */
ADVSAL_API advsal_status advsal_corpus_generate(const advsal_model* m, const advsal_dataset* d,
                                                const advsal_attack_config* cfg, size_t count,
                                                uint64_t seed, advsal_corpus** out);
ADVSAL_API void advsal_corpus_free(advsal_corpus* c);
ADVSAL_API size_t advsal_corpus_size(const advsal_corpus* c);
ADVSAL_API size_t advsal_corpus_success_count(const advsal_corpus* c);
ADVSAL_API advsal_status advsal_corpus_entry(const advsal_corpus* c, size_t index,
                                             advsal_attack_result* out);
ADVSAL_API advsal_status advsal_corpus_image(const advsal_corpus* c, size_t index,
                                             advsal_tensor** out);
ADVSAL_API advsal_attack_config advsal_corpus_config(const advsal_corpus* c);
/* Directory with manifest.csv and one adv_NNNNN.f32 file per entry. */
ADVSAL_API advsal_status advsal_corpus_save(const advsal_corpus* c, const char* dir);
ADVSAL_API advsal_status advsal_corpus_load(const char* dir, advsal_corpus** out);
/* Re-derives predictions, success flags and norms against the clean dataset. */
ADVSAL_API advsal_status advsal_corpus_refresh(advsal_corpus* c, const advsal_model* m,
                                               const advsal_dataset* clean);

/* ---- evaluation --------------------------------------------------------- */

typedef enum advsal_source {
  ADVSAL_SOURCE_ENHANCED = 0,
  ADVSAL_SOURCE_GUIDED = 1,
  ADVSAL_SOURCE_VANILLA = 2,
  ADVSAL_SOURCE_RANDOM = 3
} advsal_source;

typedef enum advsal_perturb {
  ADVSAL_PERTURB_MEAN = 0,
  ADVSAL_PERTURB_NOISE = 1
} advsal_perturb;

/* Mask-level and value-level comparison of two maps of equal shape. */
ADVSAL_API advsal_status advsal_sim_ratio(const advsal_map* a, const advsal_map* b, double* out);
ADVSAL_API advsal_status advsal_avg_diff(const advsal_map* a, const advsal_map* b, double* out);

typedef struct advsal_pair_summary {
  size_t pairs;
  double mean_sim_ratio;
  double min_avg_diff;
  double max_avg_diff;
} advsal_pair_summary;

/* Top-2 class guided-map analysis over the first `count` items. Writes the
 * per-pair CSV and histogram CSV when the paths are non-NULL. */
ADVSAL_API advsal_status advsal_eval_pair_analysis(const advsal_model* m, const advsal_dataset* d,
                                                   size_t count, const char* pairs_csv,
                                                   const char* histogram_csv,
                                                   advsal_pair_summary* summary);

/* One curve per source over the successful entries of `corpus`; accuracies
 * (sources x fractions, source-major) go to `accuracies` when non-NULL.
 * Returns ADVSAL_E_EMPTY when the corpus has no successful attack. */
ADVSAL_API advsal_status advsal_eval_recovery(const advsal_model* m, const advsal_corpus* corpus,
                                              const double* channel_means, size_t channels,
                                              const advsal_source* sources, size_t n_sources,
                                              const double* fractions, size_t n_fractions,
                                              advsal_perturb mode, uint64_t seed,
                                              const char* csv_path, double* accuracies);

/* Clean vs adversarial cosine similarity of enhanced and guided maps over
 * the successful attacks. */
ADVSAL_API advsal_status advsal_eval_discriminativity(const advsal_model* m,
                                                      const advsal_dataset* clean,
                                                      const advsal_corpus* corpus,
                                                      const char* csv_path,
                                                      double* mean_cos_enhanced,
                                                      double* mean_cos_guided);

/* Heatmaps for one clean image and its adversarial variants: every corpus
 * in `corpora` contributes its entry for `dataset_index`, if it has one.
 * Writes one PGM per (variant, method) into `out_dir` plus case_report.csv.
 * `maps_written` receives (1 + #variants) * n_methods. */
ADVSAL_API advsal_status advsal_eval_case_report(const advsal_model* m,
                                                 const advsal_dataset* clean,
                                                 const advsal_corpus* const* corpora,
                                                 size_t n_corpora, size_t dataset_index,
                                                 const advsal_method* methods, size_t n_methods,
                                                 const char* out_dir, size_t* maps_written);

#ifdef __cplusplus
}
#endif

#endif /* ADVSAL_ADVSAL_H */
