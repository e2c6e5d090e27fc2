#ifndef AUCMIX_H
#define AUCMIX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define AUCMIX_OK 0

#define AUCMIX_ERR_NULL_POINTER 1

#define AUCMIX_ERR_INVALID_ARGUMENT 2

#define AUCMIX_ERR_SHAPE 3

#define AUCMIX_ERR_DEGENERATE_BATCH 4

#define AUCMIX_ERR_UNDEFINED_METRIC 5

#define AUCMIX_ERR_IO 6

#define AUCMIX_ERR_FORMAT 7

#define AUCMIX_ERR_DIVERGED 8

#define AUCMIX_ERR_PANIC 9

#define AUCMIX_ACTIVATION_IDENTITY 0

#define AUCMIX_ACTIVATION_TANH 1

#define AUCMIX_ACTIVATION_RELU 2

#define AUCMIX_METHOD_CE 0

#define AUCMIX_METHOD_FOCAL 1

#define AUCMIX_METHOD_AUCM 2

#define AUCMIX_METHOD_AUC_MIXUP 3

#define AUCMIX_METHOD_CT_AUC 4

#define AUCMIX_METHOD_CT_MIXUP 5

/**
 * Binary-labelled dataset.
 */
typedef struct AucmixDataset AucmixDataset;

/**
 * Multilayer perceptron with a scalar output.
 */
typedef struct AucmixModel AucmixModel;

/**
 * Auxiliary variables of the min-max AUC objective.
 */
typedef struct AucmixAux {
  double a;
  double b;
  double alpha;
  double margin;
} AucmixAux;

/**
 * Subset of the training configuration exposed over the C interface.
 * Fill it with [`aucmix_train_options_default`] and override fields.
 */
typedef struct AucmixTrainOptions {
  int32_t method;
  double lr;
  size_t epochs;
  size_t batch_size;
  double pos_fraction;
  double margin;
  double weight_decay;
  double epoch_decay;
  /**
   * Beta(β, β) shape of the mixing coefficient.
   */
  double mixup_alpha;
  /**
   * Width of the single hidden layer; 0 trains a linear scorer.
   */
  size_t hidden_width;
  int32_t activation;
  bool sigmoid_output;
  uint64_t seed;
  double train_fraction;
  double valid_fraction;
  double test_fraction;
  uint64_t split_seed;
} AucmixTrainOptions;

/**
 * Scalar results of a training run.
 */
typedef struct AucmixTrainSummary {
  size_t best_epoch;
  double best_valid_auc;
  double test_auc;
  double final_train_loss;
} AucmixTrainSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *aucmix_version(void);

/**
 * Message of the last failed call on this thread, or null if none failed.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *aucmix_last_error(void);

/**
 * Creates a randomly initialised network. `dims` lists the layer widths
 * from input to output; the last entry must be 1.
 *
 * # Safety
 * `dims` must point to `n_dims` values and `out` must be writable.
 */
int32_t aucmix_model_new(const size_t *dims,
                         size_t n_dims,
                         int32_t activation_code,
                         bool sigmoid_output,
                         uint64_t seed,
                         struct AucmixModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void aucmix_model_free(struct AucmixModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
int32_t aucmix_model_num_params(const struct AucmixModel *model, size_t *out);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
int32_t aucmix_model_input_dim(const struct AucmixModel *model, size_t *out);

/**
 * Scores `rows` samples stored row-major in `x` (`rows × cols`) into `out`.
 *
 * # Safety
 * `x` must hold `rows * cols` values and `out` room for `rows`.
 */
int32_t aucmix_model_forward(const struct AucmixModel *model,
                             const double *x,
                             size_t rows,
                             size_t cols,
                             double *out);

/**
 * Copies the flattened parameters (per layer: weights row-major, then bias).
 *
 * # Safety
 * `out` must have room for `len` values; `len` must equal the parameter count.
 */
int32_t aucmix_model_get_params(const struct AucmixModel *model, double *out, size_t len);

/**
 * # Safety
 * `params` must hold `len` values.
 */
int32_t aucmix_model_set_params(struct AucmixModel *model, const double *params, size_t len);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
int32_t aucmix_model_save(const struct AucmixModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` writable.
 */
int32_t aucmix_model_load(const char *path, struct AucmixModel **out);

/**
 * Builds a dataset from row-major features and 0/1 labels.
 *
 * # Safety
 * `x` must hold `rows * cols` values, `labels` `rows` values, `out` writable.
 */
int32_t aucmix_dataset_new(const double *x,
                           size_t rows,
                           size_t cols,
                           const uint8_t *labels,
                           struct AucmixDataset **out);

/**
 * Gaussian two-class data with `round(n · ratio)` positives.
 *
 * # Safety
 * `out` must be writable.
 */
int32_t aucmix_dataset_synthetic(size_t n,
                                 size_t d,
                                 double imbalance_ratio,
                                 double class_separation,
                                 double noise,
                                 uint64_t seed,
                                 struct AucmixDataset **out);

/**
 * Reads a CSV (`.csv`) or binary table whose last column holds 0/1 labels.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` writable.
 */
int32_t aucmix_dataset_load(const char *path, struct AucmixDataset **out);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void aucmix_dataset_free(struct AucmixDataset *dataset);

/**
 * Writes the sample count, feature count and number of positives.
 *
 * # Safety
 * `dataset` must be a live handle; the out-pointers must be writable.
 */
int32_t aucmix_dataset_shape(const struct AucmixDataset *dataset,
                             size_t *n,
                             size_t *d,
                             size_t *n_pos);

/**
 * Exact AUC with ties counted as one half.
 *
 * # Safety
 * `scores` and `labels` must hold `n` values; `out` must be writable.
 */
int32_t aucmix_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Value of the AUC-mixup objective on soft labels in [0, 1].
 *
 * # Safety
 * `scores` and `soft_labels` must hold `n` values; `aux` and `out` must be valid.
 */
int32_t aucmix_auc_mixup_value(const double *scores,
                               const double *soft_labels,
                               size_t n,
                               const struct AucmixAux *aux,
                               double *out);

/**
 * Gradient of the AUC-mixup objective: `d_scores` receives `n` values,
 * `d_aux` the partials in `a`, `b` and `alpha` (its `margin` is set to 0).
 *
 * # Safety
 * `scores`, `soft_labels` and `d_scores` must hold `n` values; `aux` and `d_aux` must be valid.
 */
int32_t aucmix_auc_mixup_grads(const double *scores,
                               const double *soft_labels,
                               size_t n,
                               const struct AucmixAux *aux,
                               double *d_scores,
                               struct AucmixAux *d_aux);

/**
 * Closed-form saddle point of the objective for fixed scores.
 *
 * # Safety
 * `scores` and `soft_labels` must hold `n` values; `out` must be writable.
 */
int32_t aucmix_optimal_aux(const double *scores,
                           const double *soft_labels,
                           size_t n,
                           double margin,
                           struct AucmixAux *out);

/**
 * Library defaults for `method`.
 *
 * # Safety
 * `out` must be writable.
 */
int32_t aucmix_train_options_default(int32_t method_code, struct AucmixTrainOptions *out);

/**
 * Splits `dataset`, trains, and returns the best-validation model.
 *
 * # Safety
 * `dataset` and `options` must be valid; `model_out` and `summary_out` writable.
 * `summary_out` may be null.
 */
int32_t aucmix_train(const struct AucmixDataset *dataset,
                     const struct AucmixTrainOptions *options,
                     struct AucmixModel **model_out,
                     struct AucmixTrainSummary *summary_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUCMIX_H */
