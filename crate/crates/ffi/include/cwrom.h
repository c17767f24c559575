/* C interface of the cwrom lattice reduced-order modeling library. */

#ifndef CWROM_H
#define CWROM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum CwStatus {
  /**
   * success
   */
  CW_STATUS_OK = 0,
  /**
   * invalid configuration or arguments
   */
  CW_STATUS_CONFIG = 2,
  /**
   * numerical failure (non-SPD operator, non-convergence, ...)
   */
  CW_STATUS_NUMERIC = 3,
  /**
   * file i/o or format failure
   */
  CW_STATUS_IO = 4,
  /**
   * a required pointer argument was null
   */
  CW_STATUS_NULL_POINTER = 5,
} CwStatus;

/**
 * Opaque run configuration.
 */
typedef struct CwConfig CwConfig;

/**
 * Opaque trained component library.
 */
typedef struct CwLibrary CwLibrary;

/**
 * Opaque result record: named scalar metrics plus a density vector.
 */
typedef struct CwResult CwResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cw_last_error_message(void);

/**
 * Parse a TOML run configuration from a file.
 */
enum CwStatus cw_config_load(const char *path, struct CwConfig **out);

/**
 * Parse a TOML run configuration from text.
 */
enum CwStatus cw_config_parse(const char *toml_text, struct CwConfig **out);

void cw_config_free(struct CwConfig *config);

/**
 * Run the offline training phase and write the library file.
 */
enum CwStatus cw_train(const struct CwConfig *config, const char *library_path);

/**
 * Load a trained library file.
 */
enum CwStatus cw_library_load(const char *path, struct CwLibrary **out);

/**
 * Largest port basis size the library supports.
 */
int cw_library_available_size(const struct CwLibrary *library);

void cw_library_free(struct CwLibrary *library);

/**
 * Solve the configured lattice. `densities` may be null (all-solid);
 * `out_dir` may be null to skip field export; `basis_size <= 0` uses the
 * configured size.
 */
enum CwStatus cw_solve(const struct CwConfig *config,
                       const struct CwLibrary *library,
                       const double *densities,
                       uintptr_t n_densities,
                       const char *out_dir,
                       int basis_size,
                       struct CwResult **out);

/**
 * Minimize compliance under the configured volume budget.
 */
enum CwStatus cw_optimize(const struct CwConfig *config,
                          const struct CwLibrary *library,
                          const char *out_dir,
                          int basis_size,
                          struct CwResult **out);

/**
 * Scalar metric by name; NaN when the name is unknown.
 */
double cw_result_metric(const struct CwResult *result, const char *name);

/**
 * Number of densities carried by the result (0 for plain solves).
 */
uintptr_t cw_result_num_densities(const struct CwResult *result);

/**
 * Copy up to `cap` densities into `buf`; returns the number copied.
 */
uintptr_t cw_result_copy_densities(const struct CwResult *result, double *buf, uintptr_t cap);

void cw_result_free(struct CwResult *result);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CWROM_H */
