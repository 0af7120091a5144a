#ifndef ROOMCAST_H
#define ROOMCAST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum RcStatus {
  RC_STATUS_OK = 0,
  RC_STATUS_NULL_POINTER = 1,
  RC_STATUS_INVALID_ARGUMENT = 2,
  RC_STATUS_PRECONDITION = 3,
  RC_STATUS_CONSISTENCY = 4,
  RC_STATUS_TAXONOMY = 5,
  RC_STATUS_PARSE = 6,
  RC_STATUS_IO = 7,
  RC_STATUS_CORRUPT_CLOUD = 8,
  RC_STATUS_CONFLICT = 9,
  RC_STATUS_PANIC = 10,
} RcStatus;

/**
 * A simulated scan (cloud plus per-point provenance) or a cloud read from disk.
 */
typedef struct RcCloud RcCloud;

/**
 * A generated or loaded scene together with its ray-casting index.
 */
typedef struct RcScene RcScene;

/**
 * Subset of the sensor model exposed over C. Zero fields fall back to defaults
 * except the noise and dropout terms, which are taken as given.
 */
typedef struct RcSensor {
  uint32_t channels;
  double azimuth_step;
  double max_range;
  double range_noise_sigma;
  double dropout_probability;
} RcSensor;

/**
 * Sensor pose in the room frame: position in meters, yaw in radians about +z.
 */
typedef struct RcPose {
  double x;
  double y;
  double z;
  double yaw;
} RcPose;

/**
 * One point, same layout as a velodyne record.
 */
typedef struct RcPoint {
  float x;
  float y;
  float z;
  float intensity;
} RcPoint;

/**
 * Oriented box for IoU queries. Dimensions: length along local x, width along local y.
 */
typedef struct RcBox {
  double cx;
  double cy;
  double cz;
  double length;
  double width;
  double height;
  double yaw;
} RcBox;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *rc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rc_version(void);

/**
 * Defaults of the sensor model.
 */
struct RcSensor rc_sensor_default(void);

/**
 * Generates a scene with the default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RcStatus rc_scene_generate(uint64_t seed, struct RcScene **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RcStatus rc_scene_load(const char *path, struct RcScene **out);

/**
 * # Safety
 * `scene` must come from this library; `path` must be a NUL-terminated string.
 */
enum RcStatus rc_scene_save(const struct RcScene *scene, const char *path);

/**
 * Number of placed objects; 0 for a null handle.
 *
 * # Safety
 * `scene` must be null or come from this library.
 */
uintptr_t rc_scene_object_count(const struct RcScene *scene);

/**
 * # Safety
 * `scene` must be null or a handle not yet freed.
 */
void rc_scene_free(struct RcScene *scene);

/**
 * Simulates one sweep. `sensor` may be null for the defaults.
 *
 * # Safety
 * Pointers must be valid; `out` must be writable.
 */
enum RcStatus rc_scan(const struct RcScene *scene,
                      struct RcPose pose,
                      const struct RcSensor *sensor,
                      uint64_t seed,
                      uint64_t frame_id,
                      struct RcCloud **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RcStatus rc_cloud_read(const char *path, struct RcCloud **out);

/**
 * # Safety
 * `cloud` must come from this library; `path` must be a NUL-terminated string.
 */
enum RcStatus rc_cloud_write(const struct RcCloud *cloud, const char *path);

/**
 * Point count; 0 for a null handle.
 *
 * # Safety
 * `cloud` must be null or come from this library.
 */
uintptr_t rc_cloud_len(const struct RcCloud *cloud);

/**
 * Borrowed view of the points, valid until the cloud is freed. Null for a null
 * handle; may be dangling-but-aligned when the cloud is empty.
 *
 * # Safety
 * `cloud` must be null or come from this library.
 */
const struct RcPoint *rc_cloud_points(const struct RcCloud *cloud);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void rc_cloud_free(struct RcCloud *cloud);

/**
 * Label file text (KITTI layout, sensor frame) for objects with at least
 * `min_points` hits. The string must be released with [`rc_string_free`].
 * Fails with `Precondition` for clouds read from disk.
 *
 * # Safety
 * `scene` must be the scene the cloud was scanned from; `out` must be writable.
 */
enum RcStatus rc_scan_labels(const struct RcScene *scene,
                             const struct RcCloud *cloud,
                             uint32_t min_points,
                             char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rc_string_free(char *s);

/**
 * Bird's-eye-view IoU of two boxes.
 *
 * # Safety
 * `out` must be writable.
 */
enum RcStatus rc_iou_bev(struct RcBox a, struct RcBox b, double *out);

/**
 * 3D IoU of two yaw-only boxes.
 *
 * # Safety
 * `out` must be writable.
 */
enum RcStatus rc_iou_3d(struct RcBox a, struct RcBox b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROOMCAST_H */
