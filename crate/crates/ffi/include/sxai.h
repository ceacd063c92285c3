#ifndef SXAI_H
#define SXAI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SxaiStatus {
  SXAI_STATUS_OK = 0,
  SXAI_STATUS_NULL_POINTER = 1,
  SXAI_STATUS_INVALID_ARGUMENT = 2,
  SXAI_STATUS_IO = 3,
  SXAI_STATUS_SHAPE_MISMATCH = 4,
  SXAI_STATUS_NOT_FITTED = 5,
  SXAI_STATUS_INCOMPLETE_RADAR = 6,
  SXAI_STATUS_DEGENERATE_DATA = 7,
  SXAI_STATUS_INTERNAL = 99,
} SxaiStatus;

/**
 * Opaque trained model.
 */
typedef struct SxaiModel SxaiModel;

/**
 * Opaque semantic space.
 */
typedef struct SxaiSpace SxaiSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library;
 * valid until the next failing call on the same thread.
 */
const char *sxai_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sxai_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SxaiStatus sxai_model_load(const char *path, struct SxaiModel **out);

/**
 * # Safety
 * `model` must come from `sxai_model_load` and not be used afterwards.
 */
void sxai_model_free(struct SxaiModel *model);

/**
 * Writes the expected input as channels, height and width.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SxaiStatus sxai_model_input_shape(const struct SxaiModel *model,
                                       size_t *channels,
                                       size_t *height,
                                       size_t *width);

/**
 * # Safety
 * `model` must be a valid handle.
 */
size_t sxai_model_num_classes(const struct SxaiModel *model);

/**
 * Class probabilities into `out` (`out_len` must equal the class count).
 *
 * # Safety
 * `pixels` must hold `len` doubles and `out` `out_len` doubles.
 */
enum SxaiStatus sxai_model_predict(const struct SxaiModel *model,
                                   const double *pixels,
                                   size_t len,
                                   double *out,
                                   size_t out_len);

/**
 * Loads a semantic space record (TOML).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SxaiStatus sxai_space_load(const char *path, struct SxaiSpace **out);

/**
 * # Safety
 * `space` must come from `sxai_space_load` and not be used afterwards.
 */
void sxai_space_free(struct SxaiSpace *space);

/**
 * Semantic probability of an image in a fitted space.
 *
 * # Safety
 * Handles must be valid; `pixels` must hold `len` doubles.
 */
enum SxaiStatus sxai_space_probability(const struct SxaiModel *model,
                                       const struct SxaiSpace *space,
                                       const double *pixels,
                                       size_t len,
                                       double *out);

/**
 * Semantic probability of activation `a` under a normal fit.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SxaiStatus sxai_semantic_probability(double a,
                                          double mean,
                                          double std,
                                          double min,
                                          double max,
                                          double *out);

/**
 * Trust assessment sentence for an image. `spaces` must cover every class
 * and concept. The string is released with `sxai_string_free`.
 *
 * # Safety
 * `spaces` must hold `n_spaces` valid handles; `pixels` `len` doubles.
 */
enum SxaiStatus sxai_assess(const struct SxaiModel *model,
                            const struct SxaiSpace *const *spaces,
                            size_t n_spaces,
                            const double *pixels,
                            size_t len,
                            char **out_sentence);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sxai_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SXAI_H */
