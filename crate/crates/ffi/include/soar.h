#ifndef SOAR_H
#define SOAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SoarStatus {
  SOAR_STATUS_OK = 0,
  /**
   * Malformed input data or files.
   */
  SOAR_STATUS_VALIDATION = 1,
  /**
   * Degenerate data or a failed numerical solve.
   */
  SOAR_STATUS_NUMERICAL = 2,
  SOAR_STATUS_IO = 3,
  SOAR_STATUS_NULL_POINTER = 4,
  SOAR_STATUS_INVALID_ARGUMENT = 5,
  SOAR_STATUS_PANIC = 6,
} SoarStatus;

typedef enum SoarMetric {
  SOAR_METRIC_ACCURACY = 0,
  SOAR_METRIC_BRIER_STANDARD = 1,
  SOAR_METRIC_BINARY_BRIER_RAW = 2,
  SOAR_METRIC_BINARY_BRIER_CONDITIONAL = 3,
  SOAR_METRIC_TOKEN_EDIT_DISTANCE = 4,
  SOAR_METRIC_MODIFIED_COSINE_SIMILARITY = 5,
} SoarMetric;

typedef enum SoarMethod {
  SOAR_METHOD_SANDWICH = 0,
  SOAR_METHOD_HARD_LIFT = 1,
  SOAR_METHOD_SIGMOID_BASELINE = 2,
} SoarMethod;

/**
 * Loaded models manifest and evaluation records.
 */
typedef struct SoarDataset SoarDataset;

typedef struct SoarForecast SoarForecast;

/**
 * Models x questions score matrix.
 */
typedef struct SoarScores SoarScores;

/**
 * One sample of a forecast curve. `predicted_brier` is NaN for the
 * sigmoid baseline.
 */
typedef struct SoarForecastPoint {
  double m;
  double predicted_brier;
  double predicted_accuracy;
  bool is_train_region;
} SoarForecastPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread; empty after a success.
 * The pointer stays valid until the next `soar_*` call on the same thread.
 */
const char *soar_last_error_message(void);

/**
 * Loads `models.csv` and `evals.jsonl`.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum SoarStatus soar_dataset_load(const char *models_path,
                                  const char *evals_path,
                                  struct SoarDataset **out);

/**
 * # Safety
 * `dataset` must come from `soar_dataset_load` and not be freed twice. Null is ignored.
 */
void soar_dataset_free(struct SoarDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle; out-pointers must be writable.
 */
enum SoarStatus soar_dataset_shape(const struct SoarDataset *dataset,
                                   size_t *n_models,
                                   size_t *n_questions);

/**
 * Scores every (model, question) pair. Rows are ordered by ascending
 * effective size, columns by question id.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_scores_compute(const struct SoarDataset *dataset,
                                    enum SoarMetric metric,
                                    struct SoarScores **out);

/**
 * # Safety
 * `scores` must come from `soar_scores_compute` and not be freed twice. Null is ignored.
 */
void soar_scores_free(struct SoarScores *scores);

/**
 * # Safety
 * `scores` must be a live handle; out-pointers must be writable.
 */
enum SoarStatus soar_scores_shape(const struct SoarScores *scores,
                                  size_t *n_models,
                                  size_t *n_questions);

/**
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_scores_get(const struct SoarScores *scores,
                                size_t model,
                                size_t question,
                                double *out);

/**
 * Mean score of one model over all questions.
 *
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_scores_aggregate(const struct SoarScores *scores, size_t model, double *out);

/**
 * # Safety
 * `scores` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_scores_effective_size(const struct SoarScores *scores,
                                           size_t model,
                                           double *out);

/**
 * Runs one forecasting method. `scores` is the continuous-metric matrix,
 * `accuracy` the accuracy matrix of the same models; only its per-model
 * aggregates are used.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum SoarStatus soar_forecast_run(const struct SoarScores *scores,
                                  const struct SoarScores *accuracy,
                                  enum SoarMethod method,
                                  double threshold,
                                  size_t groups,
                                  size_t easy_degree,
                                  size_t hard_degree,
                                  struct SoarForecast **out);

/**
 * # Safety
 * `forecast` must come from `soar_forecast_run` and not be freed twice. Null is ignored.
 */
void soar_forecast_free(struct SoarForecast *forecast);

/**
 * Number of samples on the forecast grid.
 *
 * # Safety
 * `forecast` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_forecast_len(const struct SoarForecast *forecast, size_t *out);

/**
 * # Safety
 * `forecast` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_forecast_point(const struct SoarForecast *forecast,
                                    size_t index,
                                    struct SoarForecastPoint *out);

/**
 * Predicted accuracy at an arbitrary effective size.
 *
 * # Safety
 * `forecast` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_forecast_accuracy_at(const struct SoarForecast *forecast,
                                          double m,
                                          double *out);

/**
 * Root-mean-square accuracy error over the held-out models (NaN if none).
 *
 * # Safety
 * `forecast` must be a live handle; `out` must be writable.
 */
enum SoarStatus soar_forecast_test_rmse(const struct SoarForecast *forecast, double *out);

/**
 * `log10(compute_flops / 1e21)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SoarStatus soar_effective_model_size(double compute_flops, double *out);

/**
 * `-(p - 1)^2` for a probability `p` on the correct choice.
 *
 * # Safety
 * `out` must be writable.
 */
enum SoarStatus soar_binary_brier(double p, double *out);

/**
 * Share of the total choice mass held by `correct_index`.
 *
 * # Safety
 * `probs` must point to `n` readable doubles; `out` must be writable.
 */
enum SoarStatus soar_conditional_prob(const double *probs,
                                      size_t n,
                                      size_t correct_index,
                                      double *out);

/**
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `out` must be writable.
 */
enum SoarStatus soar_pearson(const double *x, const double *y, size_t n, double *out);

/**
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `out` must be writable.
 */
enum SoarStatus soar_spearman(const double *x, const double *y, size_t n, double *out);

/**
 * # Safety
 * `x` and `y` must point to `n` readable doubles; `out` must be writable.
 */
enum SoarStatus soar_kendall_tau_b(const double *x, const double *y, size_t n, double *out);

/**
 * Writes the `groups + 1` cut points `floor(i * n / groups)` into `out`,
 * which must have room for `out_len >= groups + 1` entries.
 *
 * # Safety
 * `out` must point to `out_len` writable `size_t` slots.
 */
enum SoarStatus soar_group_boundaries(size_t n, size_t groups, size_t *out, size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOAR_H */
