#ifndef COF_H
#define COF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CofStatus {
  COF_STATUS_OK = 0,
  COF_STATUS_NULL_POINTER = 1,
  COF_STATUS_INVALID_ARGUMENT = 2,
  COF_STATUS_IO = 3,
  COF_STATUS_PARSE = 4,
  COF_STATUS_VALIDATION = 5,
  COF_STATUS_TRAINING = 6,
  COF_STATUS_MODEL_FORMAT = 7,
  COF_STATUS_UNDEFINED_METRIC = 8,
  COF_STATUS_INTERNAL = 9,
} CofStatus;

/**
 * A feature dataset read from a LETOR file.
 */
typedef struct CofDataset CofDataset;

/**
 * A trained ranking model.
 */
typedef struct CofModel CofModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cof_last_error(void);

uintptr_t cof_feature_count(void);

enum CofStatus cof_model_load(const char *path, struct CofModel **out);

enum CofStatus cof_model_save(const struct CofModel *model, const char *path);

void cof_model_free(struct CofModel *model);

/**
 * Scores one feature vector of `len` values; `len` must equal
 * `cof_feature_count()`.
 */
enum CofStatus cof_model_score(const struct CofModel *model,
                               const double *features,
                               uintptr_t len,
                               double *out);

enum CofStatus cof_dataset_read(const char *path, struct CofDataset **out);

/**
 * Number of instances, or 0 for a null handle.
 */
uintptr_t cof_dataset_len(const struct CofDataset *dataset);

void cof_dataset_free(struct CofDataset *dataset);

/**
 * Trains `algorithm` ("adarank", "listnet", "mart", "lambdarank",
 * "lambdamart"). A negative `rounds` selects the algorithm's default.
 */
enum CofStatus cof_train(const struct CofDataset *dataset,
                         const char *algorithm,
                         int64_t rounds,
                         uint64_t seed,
                         struct CofModel **out);

/**
 * Mean of `metric` ("map", "ndcg@k", "err@k", "p@k") over the dataset's
 * queries ranked by `model`. MAP skips queries without relevant documents.
 */
enum CofStatus cof_evaluate(const struct CofModel *model,
                            const struct CofDataset *dataset,
                            const char *metric,
                            double *out);

/**
 * NDCG@k of binary or graded labels given in ranked order.
 */
enum CofStatus cof_ndcg_at_k(const uint8_t *labels, uintptr_t len, uintptr_t k, double *out);

enum CofStatus cof_precision_at_k(const uint8_t *labels, uintptr_t len, uintptr_t k, double *out);

enum CofStatus cof_err_at_k(const uint8_t *labels,
                            uintptr_t len,
                            uintptr_t k,
                            uint8_t y_max,
                            double *out);

/**
 * Fails with `COF_STATUS_UNDEFINED_METRIC` when no label is relevant.
 */
enum CofStatus cof_average_precision(const uint8_t *labels, uintptr_t len, double *out);

/**
 * Runs the default preprocessing pipeline; the terms come back joined by
 * single spaces.
 */
enum CofStatus cof_process_text(const char *text, char **out);

void cof_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COF_H */
