#ifndef CHRIS_H
#define CHRIS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Model codes used across the ABI: 0 = AT, 1 = small network, 2 = big.
 */
#define CHRIS_MODEL_AT 0

#define CHRIS_MODEL_SMALL 1

#define CHRIS_MODEL_BIG 2

/**
 * Device codes: 0 = watch, 1 = phone.
 */
#define CHRIS_DEVICE_WATCH 0

#define CHRIS_DEVICE_PHONE 1

/**
 * Constraint kinds for `chris_select`.
 */
#define CHRIS_CONSTRAINT_MAX_MAE 0

#define CHRIS_CONSTRAINT_MAX_ENERGY 1

/**
 * Status codes returned by every fallible call.
 */
typedef enum ChrisStatus {
  /**
   * Success.
   */
  CHRIS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CHRIS_NULL_ARG = 1,
  /**
   * A path was not valid UTF-8 or not readable.
   */
  CHRIS_IO = 2,
  /**
   * A file failed to parse or validate.
   */
  CHRIS_PARSE = 3,
  /**
   * A scalar argument was out of range.
   */
  CHRIS_INVALID_ARG = 4,
  /**
   * No feasible configuration for the requested connection status.
   */
  CHRIS_NO_FEASIBLE_CONFIG = 5,
  /**
   * The constraint was infeasible; the closest configuration was
   * returned and flagged.
   */
  CHRIS_SOFT_VIOLATION = 6,
  /**
   * The predictor found fewer than two peaks.
   */
  CHRIS_NO_PEAKS = 7,
  /**
   * An index was out of bounds.
   */
  CHRIS_BAD_INDEX = 8,
  /**
   * An unexpected internal failure.
   */
  CHRIS_INTERNAL = 9,
} ChrisStatus;

/**
 * Opaque difficulty forest.
 */
typedef struct ChrisForest ChrisForest;

/**
 * Opaque energy-profile fixture set.
 */
typedef struct ChrisProfiles ChrisProfiles;

/**
 * Opaque stored configuration table.
 */
typedef struct ChrisTable ChrisTable;

/**
 * One table row flattened for C consumers.
 */
typedef struct ChrisConfigRow {
  uint8_t simple_model;
  uint8_t complex_model;
  uint8_t threshold;
  /**
   * 0 = local, 1 = hybrid.
   */
  uint8_t hybrid;
  double avg_mae_bpm;
  double avg_watch_mj;
  double offload_fraction;
} ChrisConfigRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version string; static, do not free.
 */
const char *chris_version(void);

/**
 * Human-readable description of a status code; static, do not free.
 */
const char *chris_status_message(enum ChrisStatus status);

/**
 * The primary measurement fixture. Free with `chris_profiles_free`.
 */
struct ChrisProfiles *chris_profiles_default(void);

/**
 * The alternate measurement fixture. Free with `chris_profiles_free`.
 */
struct ChrisProfiles *chris_profiles_alternate(void);

/**
 * Load profiles from a JSON file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
enum ChrisStatus chris_profiles_load_json(const char *path, struct ChrisProfiles **out);

/**
 * Wearable-side and phone-side energy for one window of the given model
 * on the given device.
 *
 * # Safety
 * All pointers must be valid.
 */
enum ChrisStatus chris_window_energy(const struct ChrisProfiles *profiles,
                                     uint8_t model,
                                     uint8_t device,
                                     double *out_watch_mj,
                                     double *out_phone_mj);

/**
 * # Safety
 * `p` must come from a `chris_profiles_*` constructor (or be null).
 */
void chris_profiles_free(struct ChrisProfiles *p);

/**
 * Load a difficulty forest from its JSON file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
enum ChrisStatus chris_forest_load_json(const char *path, struct ChrisForest **out);

/**
 * Classify a window's difficulty from its accelerometer block.
 *
 * `accel` points to 3 x 256 doubles, axis-major (ax[0..256], ay, az).
 * Writes the activity id (1..=9) to `out_activity`.
 *
 * # Safety
 * `accel` must point to 768 readable doubles; other pointers valid.
 */
enum ChrisStatus chris_forest_classify(const struct ChrisForest *forest,
                                       const double *accel,
                                       uint8_t *out_activity);

/**
 * # Safety
 * `f` must come from `chris_forest_load_json` (or be null).
 */
void chris_forest_free(struct ChrisForest *f);

/**
 * Load a stored configuration table from CSV.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
enum ChrisStatus chris_table_load_csv(const char *path, struct ChrisTable **out);

/**
 * Number of rows in a table; 0 for null.
 *
 * # Safety
 * `table` must come from `chris_table_load_csv` (or be null).
 */
size_t chris_table_len(const struct ChrisTable *table);

/**
 * Copy one table row into `out_row`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ChrisStatus chris_table_row(const struct ChrisTable *table,
                                 size_t index,
                                 struct ChrisConfigRow *out_row);

/**
 * Select a configuration under a constraint and connection status.
 *
 * `constraint_kind` is `CHRIS_CONSTRAINT_MAX_MAE` or
 * `CHRIS_CONSTRAINT_MAX_ENERGY`; `threshold` is BPM or mJ accordingly.
 * Writes the selected row's index within `table`. Returns
 * `ChrisSoftViolation` when the constraint was infeasible and the closest
 * configuration was selected instead.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ChrisStatus chris_select(const struct ChrisTable *table,
                              uint32_t constraint_kind,
                              double threshold,
                              bool connected,
                              size_t *out_index);

/**
 * Route one window given the selected row and a predicted activity.
 *
 * # Safety
 * Pointers must be valid.
 */
enum ChrisStatus chris_dispatch(const struct ChrisTable *table,
                                size_t row_index,
                                uint8_t activity,
                                uint8_t *out_model,
                                uint8_t *out_device);

/**
 * # Safety
 * `t` must come from `chris_table_load_csv` (or be null).
 */
void chris_table_free(struct ChrisTable *t);

/**
 * Adaptive-threshold heart-rate estimate of a 256-sample PPG window.
 *
 * # Safety
 * `ppg` must point to 256 readable doubles; `out_bpm` must be valid.
 */
enum ChrisStatus chris_at_predict(const double *ppg, double *out_bpm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHRIS_H */
