#ifndef HALLUZIG_H
#define HALLUZIG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Values for [`HzConfig::scheme`].
 */
typedef enum HzScheme {
  HZ_SCHEME_PERS_IMG = 0,
  HZ_SCHEME_PERS_ENTROPY = 1,
  HZ_SCHEME_BETTI_CURVE = 2,
} HzScheme;

typedef enum HzStatus {
  HZ_STATUS_OK = 0,
  HZ_STATUS_NULL_POINTER = 1,
  HZ_STATUS_INVALID_ARGUMENT = 2,
  HZ_STATUS_DATA_ERROR = 3,
  HZ_STATUS_IO_ERROR = 4,
  HZ_STATUS_INVARIANT_VIOLATION = 5,
  HZ_STATUS_BUFFER_TOO_SMALL = 6,
  HZ_STATUS_PANIC = 7,
} HzStatus;

typedef struct HzDiagram HzDiagram;

typedef struct HzModel HzModel;

typedef struct HzSample HzSample;

typedef struct HzConfig {
  double top_percent;
  double depth_fraction;
  size_t min_persistence;
  /*
   One of the [`HzScheme`] values.
   */
  uint32_t scheme;
  /*
   Bit 0 selects dimension 0, bit 1 selects dimension 1.
   */
  uint32_t dims_mask;
  size_t image_resolution;
  double sigma;
  size_t curve_resolution;
} HzConfig;

/*
 A closed interval `[birth, death]` of snapshot indices.
 */
typedef struct HzInterval {
  uint8_t dim;
  size_t birth;
  size_t death;
} HzInterval;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *hz_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *hz_version(void);

/*
 Default feature configuration: top 10% of edges, all layers, minimum
 persistence 5, dimension 1, 32x32 persistence images.
 */
struct HzConfig hz_config_default(void);

/*
 Loads a sample from an attention dump directory.

 # Safety
 `dir` must be a NUL-terminated string and `out` a writable pointer.
 */
enum HzStatus hz_sample_load(const char *dir, struct HzSample **out);

/*
 Builds a sample from head-averaged attention matrices laid out as
 `num_layers` consecutive row-major `seq_len x seq_len` blocks.

 # Safety
 `data` must point to `num_layers * seq_len * seq_len` floats, `sample_id`
 must be NULL or a NUL-terminated string, and `out` must be writable.
 */
enum HzStatus hz_sample_from_matrices(const char *sample_id,
                                      const float *data,
                                      size_t num_layers,
                                      size_t seq_len,
                                      bool causal,
                                      struct HzSample **out);

/*
 # Safety
 `sample` must be NULL or a handle from this library that is not used again.
 */
void hz_sample_free(struct HzSample *sample);

/*
 Number of layers, or 0 for a NULL handle.

 # Safety
 `sample` must be NULL or a live handle.
 */
size_t hz_sample_num_layers(const struct HzSample *sample);

/*
 Sequence length, or 0 for a NULL handle.

 # Safety
 `sample` must be NULL or a live handle.
 */
size_t hz_sample_seq_len(const struct HzSample *sample);

/*
 Zigzag barcode of a sample, unfiltered. A NULL `config` uses the defaults.

 # Safety
 `sample` must be a live handle, `config` NULL or readable, `out` writable.
 */
enum HzStatus hz_diagram_compute(const struct HzSample *sample,
                                 const struct HzConfig *config,
                                 struct HzDiagram **out);

/*
 # Safety
 `diagram` must be NULL or a handle from this library that is not used again.
 */
void hz_diagram_free(struct HzDiagram *diagram);

/*
 Number of intervals, or 0 for a NULL handle.

 # Safety
 `diagram` must be NULL or a live handle.
 */
size_t hz_diagram_len(const struct HzDiagram *diagram);

/*
 Largest snapshot index of the filtration, or 0 for a NULL handle.

 # Safety
 `diagram` must be NULL or a live handle.
 */
size_t hz_diagram_max_index(const struct HzDiagram *diagram);

/*
 Copies interval `index` (sorted by dimension, birth, death) into `out`.

 # Safety
 `diagram` must be a live handle and `out` writable.
 */
enum HzStatus hz_diagram_get(const struct HzDiagram *diagram, size_t index, struct HzInterval *out);

/*
 Length of the feature vector a config produces.

 # Safety
 `config` must be NULL or readable, `width` writable.
 */
enum HzStatus hz_feature_width(const struct HzConfig *config, size_t *width);

/*
 Writes the feature vector of a sample into `out`. `written` always
 receives the required length; when `capacity` is too small nothing else is
 written and the call returns `HZ_STATUS_BUFFER_TOO_SMALL`.

 # Safety
 `sample` must be a live handle, `config` NULL or readable, `out` valid for
 `capacity` doubles (may be NULL when `capacity` is 0), `written` writable.
 */
enum HzStatus hz_featurize(const struct HzSample *sample,
                           const struct HzConfig *config,
                           double *out,
                           size_t capacity,
                           size_t *written);

/*
 Betti numbers of a graph given as `num_edges` vertex pairs (0-based).

 # Safety
 `edges` must point to `2 * num_edges` integers (may be NULL when
 `num_edges` is 0); `b0` and `b1` must be writable.
 */
enum HzStatus hz_betti_numbers(size_t num_vertices,
                               const uint32_t *edges,
                               size_t num_edges,
                               size_t *b0,
                               size_t *b1);

/*
 Loads a random-forest model saved by `halluzig train-eval --model-out`.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum HzStatus hz_model_load(const char *path, struct HzModel **out);

/*
 Feature width the model expects, or 0 for a NULL handle.

 # Safety
 `model` must be NULL or a live handle.
 */
size_t hz_model_feature_dim(const struct HzModel *model);

/*
 Class-1 probabilities for `rows` row-major feature vectors of width `cols`.

 # Safety
 `model` must be a live handle, `features` valid for `rows * cols` doubles
 and `probabilities` for `rows` doubles.
 */
enum HzStatus hz_model_predict(const struct HzModel *model,
                               const double *features,
                               size_t rows,
                               size_t cols,
                               double *probabilities);

/*
 # Safety
 `model` must be NULL or a handle from this library that is not used again.
 */
void hz_model_free(struct HzModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HALLUZIG_H */
