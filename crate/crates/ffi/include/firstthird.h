#ifndef FIRSTTHIRD_H
#define FIRSTTHIRD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_ARGUMENT = 1,
  FT_STATUS_INVALID_UTF8 = 2,
  FT_STATUS_SHAPE = 3,
  FT_STATUS_CONSTRAINT = 4,
  FT_STATUS_NUMERIC = 5,
  FT_STATUS_EMPTY_VIDEO = 6,
  FT_STATUS_MALFORMED_PAIR = 7,
  FT_STATUS_INGEST = 8,
  FT_STATUS_DEGENERATE_VIDEO = 9,
  FT_STATUS_INFEASIBLE_PAIR = 10,
  FT_STATUS_SCENARIO_MISMATCH = 11,
  FT_STATUS_ORDERING = 12,
  FT_STATUS_CONFIG = 13,
  FT_STATUS_MALFORMED_ITEM = 14,
  FT_STATUS_NON_FINITE = 15,
  FT_STATUS_MODE = 16,
  FT_STATUS_FORMAT = 17,
  FT_STATUS_CORRUPTION = 18,
  FT_STATUS_IO = 19,
  FT_STATUS_OUT_OF_RANGE = 20,
  FT_STATUS_BUFFER_TOO_SMALL = 21,
  FT_STATUS_PANIC = 99,
} FtStatus;

/**
 * Viewpoint of a frame passed to [`ft_model_embed`].
 */
typedef enum FtModality {
  FT_MODALITY_THIRD_PERSON = 0,
  FT_MODALITY_FIRST_PERSON = 1,
} FtModality;

/**
 * A loaded or generated set of paired videos.
 */
typedef struct FtDataset FtDataset;

/**
 * A trained or checkpointed model with its optimizer and selector state.
 */
typedef struct FtModel FtModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ft_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ft_version(void);

/**
 * `logistic(d_pos − d_neg)`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one double.
 */
enum FtStatus ft_triplet_loss(double d_pos, double d_neg, double *out);

/**
 * Generates a planted synthetic dataset. `config` holds optional
 * `key = value` lines; `seed` overrides any seed there. When `out_dir` is
 * non-null the dataset is also written there as a manifest plus feature files.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum FtStatus ft_synth_generate(const char *config,
                                uint64_t seed,
                                const char *out_dir,
                                struct FtDataset **out);

/**
 * Loads a dataset from a JSONL manifest; `n_classes` of 0 skips the label range check.
 *
 * # Safety
 * `manifest` must be NUL-terminated; `out` must be writable.
 */
enum FtStatus ft_dataset_load(const char *manifest, size_t n_classes, struct FtDataset **out);

/**
 * Number of pairs, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live dataset handle.
 */
size_t ft_dataset_pair_count(const struct FtDataset *data);

/**
 * Per-frame feature dimension, or 0 for a null or empty dataset.
 *
 * # Safety
 * `data` must be null or a live dataset handle.
 */
size_t ft_dataset_feature_dim(const struct FtDataset *data);

/**
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void ft_dataset_free(struct FtDataset *data);

/**
 * Trains a model. `config` holds optional `key = value` lines over the defaults.
 *
 * # Safety
 * `data` must be a live handle, `config` null or NUL-terminated, `out` writable.
 */
enum FtStatus ft_train(const struct FtDataset *data, const char *config, struct FtModel **out);

/**
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum FtStatus ft_model_load(const char *path, struct FtModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` NUL-terminated.
 */
enum FtStatus ft_model_save(const struct FtModel *model, const char *path);

/**
 * Embedding width, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ft_model_embed_dim(const struct FtModel *model);

/**
 * Embeds one frame into `out[0..out_len]`; `out_len` must equal the embedding width.
 *
 * # Safety
 * `features` must hold `n_features` doubles and `out` room for `out_len`.
 */
enum FtStatus ft_model_embed(const struct FtModel *model,
                             enum FtModality modality,
                             const double *features,
                             size_t n_features,
                             double *out,
                             size_t out_len);

/**
 * Held-out correspondence accuracy over all test triplets, and at the top
 * `fraction` of triplets ranked by selector weight.
 *
 * # Safety
 * Handles must be live; `acc_all` and `acc_top` writable.
 */
enum FtStatus ft_eval_correspondence(const struct FtModel *model,
                                     const struct FtDataset *data,
                                     double fraction,
                                     double *acc_all,
                                     double *acc_top);

/**
 * Median held-out alignment error in seconds for moments of `moment_seconds`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum FtStatus ft_eval_alignment(const struct FtModel *model,
                                const struct FtDataset *data,
                                double moment_seconds,
                                double *out);

/**
 * Zero-shot class probabilities of pair `pair`'s first-person video.
 * Writes `n_classes` values; fails with `FT_STATUS_MODE` without a classifier.
 *
 * # Safety
 * Handles must be live; `out` must have room for `out_len` doubles.
 */
enum FtStatus ft_zero_shot(const struct FtModel *model,
                           const struct FtDataset *data,
                           size_t pair,
                           double *out,
                           size_t out_len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void ft_model_free(struct FtModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIRSTTHIRD_H */
