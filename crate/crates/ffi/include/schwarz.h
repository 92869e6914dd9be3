#ifndef SCHWARZ_H
#define SCHWARZ_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SchwarzStatus {
  SCHWARZ_STATUS_OK = 0,
  SCHWARZ_STATUS_NULL_POINTER = 1,
  SCHWARZ_STATUS_INVALID_CONFIG = 2,
  SCHWARZ_STATUS_LENGTH_MISMATCH = 3,
  SCHWARZ_STATUS_BACKEND_FAILURE = 4,
  SCHWARZ_STATUS_PANIC = 5,
} SchwarzStatus;

typedef enum SchwarzMethod {
  SCHWARZ_METHOD_UNRELAXED = 0,
  SCHWARZ_METHOD_CLASSICAL = 1,
  SCHWARZ_METHOD_AITKEN = 2,
  SCHWARZ_METHOD_ANDERSON = 3,
} SchwarzMethod;

/**
 * Opaque accelerator handle.
 */
typedef struct SchwarzAccelerator SchwarzAccelerator;

typedef struct SchwarzAcceleratorConfig {
  /**
   * One of the `SchwarzMethod` values.
   */
  int method;
  double rho;
  double rho_init;
  size_t n0;
  size_t m_and;
  bool memory_adaptation;
  size_t m_bar;
  double eps_and;
} SchwarzAcceleratorConfig;

typedef struct SchwarzCriteria {
  double eps_abs;
  double eps_rel;
  size_t maxit;
} SchwarzCriteria;

typedef struct SchwarzRunResult {
  bool converged;
  bool aborted;
  size_t iterations;
  /**
   * Errors of the last iteration; NaN if no iteration completed.
   */
  double e_abs;
  double e_rel;
} SchwarzRunResult;

/**
 * Evaluates `T(g)`: reads `len` values from `g`, writes `len` values to `tg`.
 * A nonzero return aborts the run.
 */
typedef int (*SchwarzOperator)(void *user_data, const double *g, double *tg, size_t len);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default settings for `method` (rho = rho_init = 1, n0 = 2, m_and = 20,
 * m_bar = 3, eps_and = 1e-5, no memory adaptation).
 */
SchwarzAcceleratorConfig schwarz_accelerator_config_default(int method);

/**
 * Creates an accelerator for interface data split into `n_interfaces`
 * blocks of the given lengths.
 */
SchwarzStatus schwarz_accelerator_new(const SchwarzAcceleratorConfig *config,
                                      const size_t *lengths,
                                      size_t n_interfaces,
                                      SchwarzAccelerator **out);

/**
 * Computes `g^(k+1)` from `g^(k)` and `T(g^(k))`, writing it to `out`.
 *
 * `k` starts at 1 and must increase by one per call. The relative errors
 * needed for memory adaptation are tracked by the handle.
 */
SchwarzStatus schwarz_accelerator_update(SchwarzAccelerator *handle,
                                         size_t k,
                                         const double *g,
                                         const double *tg,
                                         size_t len,
                                         double *out);

/**
 * Clears the accelerator's history.
 */
SchwarzStatus schwarz_accelerator_reset(SchwarzAccelerator *handle);

/**
 * Releases a handle. Null is ignored.
 */
void schwarz_accelerator_free(SchwarzAccelerator *handle);

/**
 * Absolute and relative errors between two interface iterates.
 */
SchwarzStatus schwarz_interface_errors(const double *prev,
                                       const double *curr,
                                       const size_t *lengths,
                                       size_t n_interfaces,
                                       double *e_abs,
                                       double *e_rel);

/**
 * Runs the accelerated fixed-point iteration `g <- T(g)` with a caller
 * supplied operator. `g` holds the initial guess on entry and the final
 * iterate on return (also after an abort).
 */
SchwarzStatus schwarz_run_fixed_point(SchwarzOperator op,
                                      void *user_data,
                                      const SchwarzAcceleratorConfig *config,
                                      const SchwarzCriteria *criteria_in,
                                      const size_t *lengths,
                                      size_t n_interfaces,
                                      double *g,
                                      SchwarzRunResult *result);

/**
 * Runs the 1D Laplace coupling problem with interface position `x_bar`.
 */
SchwarzStatus schwarz_laplace1d_run(double x_bar,
                                    size_t n_points,
                                    double g_init,
                                    const SchwarzAcceleratorConfig *config,
                                    const SchwarzCriteria *criteria_in,
                                    SchwarzRunResult *result,
                                    double *g_final);

/**
 * Runs every point of a TOML experiment config and writes the usual output
 * files to `out_dir` (or the config's default directory if null).
 * `n_aborted` receives the number of runs that aborted.
 */
SchwarzStatus schwarz_run_config(const char *config_path, const char *out_dir, size_t *n_aborted);

/**
 * Message of the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *schwarz_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *schwarz_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCHWARZ_H */
