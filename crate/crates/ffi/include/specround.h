#ifndef SPECROUND_H
#define SPECROUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrMethod {
  SR_METHOD_LTM = 0,
  SR_METHOD_NAIVE = 1,
  SR_METHOD_KMEANS = 2,
} SrMethod;

typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_POINTER = 1,
  SR_STATUS_INVALID_ARGUMENT = 2,
  SR_STATUS_COMPUTE_ERROR = 3,
  SR_STATUS_PANIC = 4,
} SrStatus;

/**
 * Opaque dataset handle.
 */
typedef struct SrDataset SrDataset;

/**
 * Opaque clustering result handle.
 */
typedef struct SrResult SrResult;

/**
 * Clustering parameters. Start from `sr_params_default()`.
 */
typedef struct SrParams {
  enum SrMethod method;
  /**
   * Number of leading eigenvectors.
   */
  size_t k_max;
  double delta;
  size_t restarts;
  uint64_t seed;
  /**
   * Cluster count for k-means; ignored otherwise.
   */
  size_t k;
  /**
   * Nonzero counts the deterministic link tables in the BIC.
   */
  int32_t count_links;
} SrParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sr_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sr_version(void);

struct SrParams sr_params_default(void);

/**
 * Copies an n×d row-major point array. `labels` may be NULL; otherwise it
 * holds n ground-truth cluster ids used to report metrics.
 */
enum SrStatus sr_dataset_from_points(const double *points,
                                     size_t n,
                                     size_t d,
                                     const size_t *labels,
                                     struct SrDataset **out);

/**
 * Copies a row-major n×n symmetric non-negative similarity matrix.
 */
enum SrStatus sr_dataset_from_similarity(const double *s, size_t n, struct SrDataset **out);

void sr_dataset_free(struct SrDataset *ds);

/**
 * Number of points in a dataset, 0 for NULL.
 */
size_t sr_dataset_len(const struct SrDataset *ds);

/**
 * Clusters `ds`. `similarity_fn` (`"knn:10"`, `"gaussian:0.2"`) is used for
 * point datasets and may be NULL for the default `knn:10`; it is ignored
 * for similarity datasets. `params` may be NULL for the defaults.
 */
enum SrStatus sr_cluster(const struct SrDataset *ds,
                         const char *similarity_fn,
                         const struct SrParams *params,
                         struct SrResult **out);

void sr_result_free(struct SrResult *r);

/**
 * Number of points, 0 for NULL.
 */
size_t sr_result_len(const struct SrResult *r);

/**
 * Number of clusters found, 0 for NULL.
 */
size_t sr_result_num_clusters(const struct SrResult *r);

/**
 * Number of eigenvectors behind the partition, or -1 (k-means, NULL).
 */
int64_t sr_result_q(const struct SrResult *r);

/**
 * Copies the cluster labels into `out`, which must hold `len` entries with
 * `len == sr_result_len(r)`.
 */
enum SrStatus sr_result_assignment(const struct SrResult *r, size_t *out, size_t len);

/**
 * Rand index against the dataset's labels; NaN when there were none.
 */
double sr_result_rand_index(const struct SrResult *r);

/**
 * Result as a NUL-terminated JSON string; release with `sr_string_free`.
 */
enum SrStatus sr_result_to_json(const struct SrResult *r, char **out);

void sr_string_free(char *s);

/**
 * Rand index of two labelings of `n` points.
 */
enum SrStatus sr_rand_index(const size_t *a, const size_t *b, size_t n, double *out);

/**
 * Variation of information (nats) of two labelings of `n` points.
 */
enum SrStatus sr_variation_of_information(const size_t *a, const size_t *b, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECROUND_H */
