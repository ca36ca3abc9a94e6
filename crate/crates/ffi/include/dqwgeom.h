/* C interface to dqw-geom: two-step lattice walks and their discrete geometry. */

#ifndef DQW_GEOM_H
#define DQW_GEOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DqwStatus {
  DQW_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DQW_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DQW_STATUS_INVALID_UTF8 = 2,
  /**
   * Arguments violate a precondition (sizes, ranges, seeds).
   */
  DQW_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The expression failed to parse.
   */
  DQW_STATUS_PARSE_ERROR = 4,
  /**
   * Evaluation hit a domain error (arccos out of range, ...).
   */
  DQW_STATUS_DOMAIN_ERROR = 5,
  /**
   * The requested site lies outside the valid slice range.
   */
  DQW_STATUS_RANGE_ERROR = 6,
  /**
   * An internal computation failed; see dqw_last_error.
   */
  DQW_STATUS_COMPUTE_ERROR = 7,
} DqwStatus;

/**
 * Opaque lattice descriptor.
 */
typedef struct DqwLattice DqwLattice;

/**
 * Opaque coin-angle definition: a parsed expression, a constant, or a
 * seeded random family.
 */
typedef struct DqwTheta DqwTheta;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the message of the most recent failure on this thread into `buf`
 * (NUL-terminated, truncated to `cap`). Returns the full message length.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be null (in which
 * case only the length is returned).
 */
uintptr_t dqw_last_error(char *buf, uintptr_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dqw_version(void);

/**
 * Create a lattice with P spatial sites (even, ≥ 4), J stored slices (≥ 3)
 * and spacing eps (> 0).
 *
 * # Safety
 * `out` must be a valid pointer. The returned handle must be released with
 * [`dqw_lattice_free`].
 */
enum DqwStatus dqw_lattice_new(uint32_t p_sites,
                               uint32_t j_slices,
                               double eps,
                               struct DqwLattice **out);

/**
 * # Safety
 * `lat` must be a handle from [`dqw_lattice_new`] (or null) and must not be
 * used afterwards.
 */
void dqw_lattice_free(struct DqwLattice *lat);

/**
 * Parse a coin-angle expression in the variables t and x.
 *
 * # Safety
 * `src` must be a NUL-terminated string, `out` a valid pointer. The handle
 * must be released with [`dqw_theta_free`].
 */
enum DqwStatus dqw_theta_parse(const char *src, struct DqwTheta **out);

/**
 * A constant coin angle (radians).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DqwStatus dqw_theta_constant(double value, struct DqwTheta **out);

/**
 * Independent uniform angles in [−amplitude, amplitude], reproducible from
 * the seed.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DqwStatus dqw_theta_random(uint64_t seed, double amplitude, struct DqwTheta **out);

/**
 * # Safety
 * `theta` must be a handle from one of the constructors (or null) and must
 * not be used afterwards.
 */
void dqw_theta_free(struct DqwTheta *theta);

/**
 * θ at lattice site (j, p); p wraps periodically.
 *
 * # Safety
 * All pointers must be valid handles / writable locations.
 */
enum DqwStatus dqw_theta_eval(const struct DqwTheta *theta,
                              const struct DqwLattice *lat,
                              uint32_t j,
                              int64_t p,
                              double *out);

/**
 * Run the walk from a seeded random unit state and record the flat norm of
 * every stored slice into `out_norms` (length `n_steps + 1`).
 *
 * # Safety
 * `out_norms` must point to at least `n_steps + 1` writable doubles.
 */
enum DqwStatus dqw_walk_norms(const struct DqwLattice *lat,
                              const struct DqwTheta *theta,
                              uint64_t state_seed,
                              uint32_t n_steps,
                              double *out_norms);

/**
 * Transport velocities and volume density per site. Each output buffer
 * holds J×P row-major doubles; slices above `*out_valid_hi` and degenerate
 * sites are NaN. Null buffers are skipped.
 *
 * # Safety
 * Non-null buffers must hold J×P writable doubles; `out_valid_hi` must be
 * valid.
 */
enum DqwStatus dqw_metric(const struct DqwLattice *lat,
                          const struct DqwTheta *theta,
                          double *out_x_minus,
                          double *out_x_plus,
                          double *out_mu,
                          uint32_t *out_valid_hi);

/**
 * The slow discrete Riemann curvature ρˢ per site, into a J×P row-major
 * buffer (NaN outside `[*out_valid_lo, *out_valid_hi]` and on masked sites).
 *
 * # Safety
 * `out_rho` must hold J×P writable doubles; the range pointers must be
 * valid.
 */
enum DqwStatus dqw_rho_slow(const struct DqwLattice *lat,
                            const struct DqwTheta *theta,
                            double *out_rho,
                            uint32_t *out_valid_lo,
                            uint32_t *out_valid_hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQW_GEOM_H */
