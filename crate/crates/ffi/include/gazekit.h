#ifndef GAZEKIT_H
#define GAZEKIT_H

#include <stddef.h>
#include <stdint.h>

typedef enum GkStatus {
  GK_STATUS_OK = 0,
  GK_STATUS_NULL_POINTER = 1,
  GK_STATUS_INVALID_ARGUMENT = 2,
  GK_STATUS_INVALID_IMAGE = 3,
  GK_STATUS_OUT_OF_BOUNDS = 4,
  GK_STATUS_DEGENERATE = 5,
  GK_STATUS_MODEL = 6,
  GK_STATUS_UNCALIBRATED = 7,
  GK_STATUS_FORMAT = 8,
  GK_STATUS_IO = 9,
  // The call succeeded but produced no result, e.g. no face in the frame.
  GK_STATUS_NO_RESULT = 10,
  // The output buffer was too small; the required count was still written.
  GK_STATUS_BUFFER_TOO_SMALL = 11,
  GK_STATUS_PANIC = 12,
} GkStatus;

typedef struct GkCascade GkCascade;

typedef struct GkImage GkImage;

typedef struct GkSession GkSession;

typedef struct GkRect {
  uint32_t x;
  uint32_t y;
  uint32_t width;
  uint32_t height;
} GkRect;

typedef struct GkSessionConfig {
  // 1 or 2.
  uint8_t pipeline;
  double screen_width;
  double screen_height;
  double mm_per_px;
  // Decay weight in (0, 1].
  double alpha;
} GkSessionConfig;

typedef struct GkPoint {
  double x;
  double y;
} GkPoint;

typedef struct GkEstimate {
  // Reported estimate (smoothed for pipeline 1).
  struct GkPoint point;
  // Estimate from this frame alone.
  struct GkPoint raw;
  double confidence;
} GkEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *gk_version(void);

// Message of the last failing call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *gk_last_error_message(void);

// Copies `len` bytes of interleaved RGB8 pixels into a new image.
//
// # Safety
// `rgb` must point to `len` readable bytes and `out` must be writable.
enum GkStatus gk_image_from_rgb(uint32_t width,
                                uint32_t height,
                                const uint8_t *rgb,
                                size_t len,
                                struct GkImage **out);

// Loads a PNG or PNM file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum GkStatus gk_image_load(const char *path, struct GkImage **out);

// Writes the image size. Either output may be NULL.
//
// # Safety
// `image` must be a live handle; non-null outputs must be writable.
enum GkStatus gk_image_size(const struct GkImage *image, uint32_t *width, uint32_t *height);

// # Safety
// `image` must be NULL or a handle not yet freed.
void gk_image_free(struct GkImage *image);

// Loads a Haar cascade in the OpenCV XML format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
enum GkStatus gk_cascade_load(const char *path, struct GkCascade **out);

// # Safety
// `cascade` must be NULL or a handle not yet freed. Sessions created with it
// keep their own reference, so it may be freed before them.
void gk_cascade_free(struct GkCascade *cascade);

// Runs multi-scale detection with the default scale factor and neighbor
// count. Writes up to `capacity` rectangles, strongest first, and the total
// number found to `count`. Returns `BufferTooSmall` when truncated.
//
// # Safety
// Handles must be live; `rects` must have room for `capacity` entries (it may
// be NULL when `capacity` is 0) and `count` must be writable.
enum GkStatus gk_detect(const struct GkCascade *cascade,
                        const struct GkImage *image,
                        uint32_t min_size,
                        struct GkRect *rects,
                        size_t capacity,
                        size_t *count);

// Creates a tracking session. With `face` NULL the skin-color finder locates
// the face and eyes; `eye` may only be set together with `face`.
//
// # Safety
// `config` must be readable, cascade handles live or NULL, `out` writable.
enum GkStatus gk_session_new(const struct GkSessionConfig *config,
                             const struct GkCascade *face,
                             const struct GkCascade *eye,
                             struct GkSession **out);

// # Safety
// `session` must be NULL or a handle not yet freed.
void gk_session_free(struct GkSession *session);

// Number of calibration targets (five).
//
// # Safety
// `session` must be a live handle.
size_t gk_session_target_count(const struct GkSession *session);

// Screen position of calibration target `index`.
//
// # Safety
// `session` must be a live handle and `out` writable.
enum GkStatus gk_session_target(const struct GkSession *session, size_t index, struct GkPoint *out);

// Records the frames captured while the user looked at target `index`.
//
// # Safety
// `session` must be live; `frames` must hold `n` live image handles.
enum GkStatus gk_session_calibrate_point(struct GkSession *session,
                                         size_t index,
                                         const struct GkImage *const *frames,
                                         size_t n);

// Fits the mapper once every target has been recorded.
//
// # Safety
// `session` must be a live handle.
enum GkStatus gk_session_calibrate_done(struct GkSession *session);

// Processes one frame. Returns `NoResult` when no eyes were found.
//
// # Safety
// Handles must be live and `out` writable.
enum GkStatus gk_session_track(struct GkSession *session,
                               const struct GkImage *image,
                               struct GkEstimate *out);

// Writes the fitted calibration as a JSON calibration file.
//
// # Safety
// `session` must be live and `path` a NUL-terminated string.
enum GkStatus gk_session_save_calibration(const struct GkSession *session, const char *path);

// Installs a saved calibration. Its mapping mode must match the session's
// pipeline (affine for 1, ratio for 2).
//
// # Safety
// `session` must be live and `path` a NUL-terminated string.
enum GkStatus gk_session_load_calibration(struct GkSession *session, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEKIT_H */
