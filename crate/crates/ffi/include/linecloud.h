#ifndef LINECLOUD_H
#define LINECLOUD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_ARGUMENT = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_EMPTY_INPUT = 3,
  LC_STATUS_NON_FINITE = 4,
  LC_STATUS_PARSE_ERROR = 5,
  LC_STATUS_IO_ERROR = 6,
  LC_STATUS_PIPELINE_ERROR = 7,
  LC_STATUS_OUT_OF_RANGE = 8,
  LC_STATUS_PANIC = 9,
} LcStatus;

typedef struct LcCloud LcCloud;

typedef struct LcConfig LcConfig;

typedef struct LcResult LcResult;

typedef struct LcSegment {
  double a[3];
  double b[3];
  size_t plane_id;
  size_t contour_id;
  double length;
} LcSegment;

typedef struct LcPlane {
  size_t id;
  double normal[3];
  double centroid[3];
  double scale;
  size_t member_count;
  /**
   * 1 if post-processing kept the plane's segments.
   */
  int32_t kept;
} LcPlane;

typedef struct LcTiming {
  double segmentation_s;
  double line_detection_s;
  double postprocess_s;
  double total_s;
} LcTiming;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Empty after a success.
 * The pointer stays valid until the next `lc_*` call on this thread.
 */
const char *lc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lc_version(void);

/**
 * New configuration with default parameters.
 */
struct LcConfig *lc_config_new(void);

/**
 * Sets a parameter by its field name, e.g. `("theta_deg", "20")`.
 *
 * # Safety
 * `config` must come from [`lc_config_new`]; `key` and `value` must be
 * NUL-terminated strings.
 */
enum LcStatus lc_config_set(struct LcConfig *config, const char *key, const char *value);

/**
 * # Safety
 * `config` must come from [`lc_config_new`] or be null.
 */
void lc_config_free(struct LcConfig *config);

/**
 * Copies `count` points from `xyz` (`3 * count` doubles, interleaved).
 *
 * # Safety
 * `xyz` must point to `3 * count` readable doubles; `out` must be writable.
 */
enum LcStatus lc_cloud_from_xyz(const double *xyz, size_t count, struct LcCloud **out);

/**
 * Loads a cloud file. `format` is `"auto"`, `"xyz"`, `"pts"`, `"ply"` or
 * null for auto-detection.
 *
 * # Safety
 * `path` and, if non-null, `format` must be NUL-terminated; `out` writable.
 */
enum LcStatus lc_cloud_load(const char *path, const char *format, struct LcCloud **out);

/**
 * Number of points, 0 for a null handle.
 *
 * # Safety
 * `cloud` must be a live handle or null.
 */
size_t lc_cloud_len(const struct LcCloud *cloud);

/**
 * # Safety
 * `cloud` must be a live handle or null.
 */
void lc_cloud_free(struct LcCloud *cloud);

/**
 * Runs the detector. A null `config` uses the defaults.
 *
 * # Safety
 * `cloud` must be live, `config` live or null, `out` writable.
 */
enum LcStatus lc_detect(const struct LcCloud *cloud,
                        const struct LcConfig *config,
                        struct LcResult **out);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
size_t lc_result_segment_count(const struct LcResult *result);

/**
 * # Safety
 * `result` must be live and `out` writable.
 */
enum LcStatus lc_result_segment(const struct LcResult *result, size_t index, struct LcSegment *out);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
size_t lc_result_plane_count(const struct LcResult *result);

/**
 * # Safety
 * `result` must be live and `out` writable.
 */
enum LcStatus lc_result_plane(const struct LcResult *result, size_t index, struct LcPlane *out);

/**
 * # Safety
 * `result` must be live and `out` writable.
 */
enum LcStatus lc_result_timing(const struct LcResult *result, struct LcTiming *out);

/**
 * Writes the result as `"json"`, `"obj"` or `"csv"`.
 *
 * # Safety
 * `result` must be live; `path` and `format` NUL-terminated.
 */
enum LcStatus lc_result_save(const struct LcResult *result, const char *path, const char *format);

/**
 * # Safety
 * `result` must be a live handle or null.
 */
void lc_result_free(struct LcResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINECLOUD_H */
