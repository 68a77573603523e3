#ifndef MTPROBE_H
#define MTPROBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MtpStatus {
  MTP_STATUS_OK = 0,
  MTP_STATUS_NULL_POINTER = 1,
  MTP_STATUS_INVALID_UTF8 = 2,
  MTP_STATUS_CONFIG = 3,
  MTP_STATUS_IO = 4,
  MTP_STATUS_INVALID_INPUT = 5,
  MTP_STATUS_OUT_OF_RANGE = 6,
  MTP_STATUS_INTERNAL = 7,
  MTP_STATUS_PANIC = 8,
} MtpStatus;

typedef enum MtpFilterVerdict {
  MTP_FILTER_VERDICT_KEEP = 0,
  MTP_FILTER_VERDICT_DROP_EMPTY = 1,
  MTP_FILTER_VERDICT_DROP_RATIO = 2,
  MTP_FILTER_VERDICT_DROP_LENGTH = 3,
  MTP_FILTER_VERDICT_DROP_LANGUAGE = 4,
} MtpFilterVerdict;

/**
 * Detections for one pair.
 */
typedef struct MtpDetections MtpDetections;

/**
 * Compiled detector set. Safe to share between threads for concurrent checks.
 */
typedef struct MtpDetector MtpDetector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the next call
 * into this library from the same thread.
 */
const char *mtp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mtp_version(void);

/**
 * Builds a detector from a TOML run configuration. `config_toml` may be NULL for the
 * defaults. Corpus-level natural-hallucination detection is not available per pair.
 * Coverage needs `aligner = "external"` and links passed to
 * [`mtp_detector_check_aligned`].
 */
enum MtpStatus mtp_detector_new(const char *config_toml, struct MtpDetector **out);

void mtp_detector_free(struct MtpDetector *detector);

/**
 * Runs every per-pair detector on one sentence pair.
 */
enum MtpStatus mtp_detector_check(const struct MtpDetector *detector,
                                  const char *source,
                                  const char *target,
                                  struct MtpDetections **out);

/**
 * Like [`mtp_detector_check`], with Pharaoh-format links (`"0-0 1-2"`) over whitespace
 * tokens so that coverage can be checked when enabled.
 */
enum MtpStatus mtp_detector_check_aligned(const struct MtpDetector *detector,
                                          const char *source,
                                          const char *target,
                                          const char *alignment,
                                          struct MtpDetections **out);

void mtp_detections_free(struct MtpDetections *detections);

/**
 * Number of detections; 0 for NULL.
 */
size_t mtp_detections_len(const struct MtpDetections *detections);

/**
 * Detector name of detection `index`, or NULL when out of range. Owned by `detections`.
 */
const char *mtp_detections_detector(const struct MtpDetections *detections, size_t index);

/**
 * Evidence text of detection `index`, or NULL when out of range. Owned by `detections`.
 */
const char *mtp_detections_evidence(const struct MtpDetections *detections, size_t index);

/**
 * Number of source spans of detection `index`; 0 when out of range.
 */
size_t mtp_detections_span_count(const struct MtpDetections *detections, size_t index);

/**
 * Character offsets `[start, end)` of span `span` of detection `index`.
 */
enum MtpStatus mtp_detections_span(const struct MtpDetections *detections,
                                   size_t index,
                                   size_t span,
                                   size_t *start,
                                   size_t *end);

/**
 * The detections as report lines (one JSON object per line). Free with
 * [`mtp_string_free`].
 */
enum MtpStatus mtp_detections_to_json(const struct MtpDetections *detections, char **out);

void mtp_string_free(char *s);

/**
 * Length-ratio and length rules of the conventional bitext filter. No language check.
 */
enum MtpStatus mtp_standard_filter(const char *source,
                                   const char *target,
                                   double max_ratio,
                                   size_t max_words,
                                   enum MtpFilterVerdict *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MTPROBE_H */
