/* C ABI for the topoflow library. Generated by cbindgen; do not edit. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point.
 */
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_UTF8 = 2,
  TF_STATUS_PARSE = 3,
  TF_STATUS_IO = 4,
  TF_STATUS_DIMENSION_MISMATCH = 5,
  TF_STATUS_TOPOLOGICAL_IMBALANCE = 6,
  TF_STATUS_DUPLICATE_POSITION = 7,
  TF_STATUS_REMOVABLE_CHARGE = 8,
  TF_STATUS_UNDER_RESOLVED_LOOP = 9,
  TF_STATUS_INVALID_GRID = 10,
  TF_STATUS_GRID_MISMATCH = 11,
  TF_STATUS_INFEASIBLE_POTENTIAL = 12,
  TF_STATUS_BOUNDARY_CHARGE_IMBALANCE = 13,
  TF_STATUS_INVALID_EXPONENT = 14,
  TF_STATUS_INVALID_TREE = 15,
  TF_STATUS_UNSUPPORTED = 16,
  TF_STATUS_INVALID_PARAMETER = 17,
  TF_STATUS_NUMERICAL = 18,
  TF_STATUS_INTERNAL_PANIC = 19,
} TfStatus;

/**
 * Opaque handle over a validated charge configuration.
 */
typedef struct TfChargeConfig TfChargeConfig;

/**
 * Opaque handle over a sampled grid map.
 */
typedef struct TfGridMap TfGridMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Short stable name of a status code. Never fails; never needs freeing.
 */
const char *tf_status_name(enum TfStatus status);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from a topoflow function and not have been freed before.
 */
void tf_string_free(char *s);

/**
 * Parses a charge configuration from its JSON form
 * (`[{"pos": [x, ...], "deg": k}, ...]`) and validates the invariants.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum TfStatus tf_config_parse_json(const char *json, struct TfChargeConfig **out);

/**
 * # Safety
 * `config` must come from `tf_config_parse_json` and not be freed twice.
 */
void tf_config_free(struct TfChargeConfig *config);

/**
 * Number of charges in a parsed configuration.
 *
 * # Safety
 * `config` and `out` must be valid pointers.
 */
enum TfStatus tf_config_len(const struct TfChargeConfig *config, uintptr_t *out);

/**
 * Minimum transport cost of a configuration.
 *
 * # Safety
 * `config` and `out_cost` must be valid pointers.
 */
enum TfStatus tf_transport_cost(const struct TfChargeConfig *config, double *out_cost);

/**
 * Optimal transport plan as JSON (`{"edges": [...], "cost": c}`).
 *
 * # Safety
 * `config` and `out_json` must be valid pointers; free the string with
 * `tf_string_free`.
 */
enum TfStatus tf_transport_plan_json(const struct TfChargeConfig *config, char **out_json);

/**
 * Kantorovich dual value and duality gap.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TfStatus tf_dual_value(const struct TfChargeConfig *config,
                            double *out_value,
                            double *out_gap);

/**
 * Winding number of a closed loop given as `count` interleaved `(x, y)`
 * unit vectors.
 *
 * # Safety
 * `xy` must point at `2 * count` doubles; `out` must be valid.
 */
enum TfStatus tf_winding_number(const double *xy, uintptr_t count, int32_t *out);

/**
 * Parses a grid map from its CSV form (`nx,ny,h,ox,oy` header then
 * `i,j,ux,uy,masked` rows).
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be valid.
 */
enum TfStatus tf_gridmap_parse_csv(const char *csv, struct TfGridMap **out);

/**
 * Reads a grid map from a CSV file on disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum TfStatus tf_gridmap_read_csv(const char *path, struct TfGridMap **out);

/**
 * # Safety
 * `map` must come from a topoflow constructor and not be freed twice.
 */
void tf_gridmap_free(struct TfGridMap *map);

/**
 * Discrete p-Dirichlet energy of a grid map.
 *
 * # Safety
 * `map` and `out` must be valid pointers.
 */
enum TfStatus tf_p_energy(const struct TfGridMap *map, double p, double *out);

/**
 * Number of detected singularities and their total degree.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TfStatus tf_singularity_count(const struct TfGridMap *map,
                                   uintptr_t *out_count,
                                   int64_t *out_total_degree);

/**
 * Relaxed energy report of a grid map: `total = dirichlet + 2 pi transport`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TfStatus tf_relaxed_energy(const struct TfGridMap *map,
                                double *out_dirichlet,
                                double *out_transport,
                                double *out_total);

/**
 * Hierarchical dyadic-array cost, by recurrence and in closed form.
 *
 * # Safety
 * Out-pointers must be valid.
 */
enum TfStatus tf_hierarchical_cost(uint32_t m,
                                   uint32_t n,
                                   double h,
                                   double d,
                                   double alpha,
                                   double *out_recurrence,
                                   double *out_closed_form);

/**
 * Centralized plan cost (exact lattice sum when feasible, integral
 * estimate otherwise).
 *
 * # Safety
 * `out` must be valid.
 */
enum TfStatus tf_centralized_cost(uint32_t m,
                                  uint32_t n,
                                  double h,
                                  double d,
                                  double alpha,
                                  double *out);

/**
 * Regime of `alpha` against the critical exponent `1 - 1/m`:
 * -1 sub-critical, 0 critical, +1 super-critical.
 *
 * # Safety
 * `out_regime` must be valid.
 */
enum TfStatus tf_classify_regime(uint32_t m, double alpha, int32_t *out_regime);

/**
 * Cost of the optimal branched plan for a configuration.
 *
 * # Safety
 * `config` and `out_cost` must be valid pointers.
 */
enum TfStatus tf_branched_optimize_cost(const struct TfChargeConfig *config,
                                        double alpha,
                                        double *out_cost);

/**
 * Optimal branched plan as JSON.
 *
 * # Safety
 * `config` and `out_json` must be valid pointers; free the string with
 * `tf_string_free`.
 */
enum TfStatus tf_branched_optimize_json(const struct TfChargeConfig *config,
                                        double alpha,
                                        char **out_json);

/**
 * Library version as a static string; never needs freeing.
 */
const char *tf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
