#ifndef CSK_H
#define CSK_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CSK_EQUALIZER_NONE = 0,
  CSK_EQUALIZER_SVD_PRE = 1,
  CSK_EQUALIZER_ZF = 2,
  CSK_EQUALIZER_LMMSE = 3,
} CskEqualizer;

typedef enum {
  CSK_PROFILE_BALANCED = 0,
  CSK_PROFILE_UNBALANCED = 1,
  CSK_PROFILE_EXTREME = 2,
} CskProfile;

typedef enum {
  CSK_STATUS_OK = 0,
  CSK_STATUS_NULL_POINTER = 1,
  CSK_STATUS_INVALID_INPUT = 2,
  CSK_STATUS_INVALID_DOMAIN = 3,
  CSK_STATUS_INFEASIBLE = 4,
  CSK_STATUS_SINGULAR_CHANNEL = 5,
  CSK_STATUS_DOMAIN_VIOLATION = 6,
  CSK_STATUS_BUFFER_TOO_SMALL = 7,
  CSK_STATUS_INTERNAL = 8,
  CSK_STATUS_PANIC = 9,
} CskStatus;

/**
 * Opaque designed constellation.
 */
typedef struct CskConstellation CskConstellation;

/**
 * Opaque bit-to-symbol labeling.
 */
typedef struct CskLabeling CskLabeling;

/**
 * Opaque design specification.
 */
typedef struct CskSpec CskSpec;

/**
 * Error counts at one OSNR point.
 */
typedef struct {
  double osnr_db;
  uint64_t n_bits;
  uint64_t bit_errors;
  uint64_t symbol_errors;
  double ber;
} CskBerPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *csk_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t csk_last_error_message(char *buf, uintptr_t len);

/**
 * One RGB LED, 8 symbols, unit defaults for the chosen color profile.
 *
 * # Safety
 * `out` must be valid for writes.
 */
CskStatus csk_spec_new(CskProfile profile, CskSpec **out);

/**
 * # Safety
 * `spec` must be null or a handle from [`csk_spec_new`] not yet freed.
 */
void csk_spec_free(CskSpec *spec);

/**
 * Uniform PAPR cap for every LED; a value `<= 0` removes the cap.
 *
 * # Safety
 * `spec` must be a live handle.
 */
CskStatus csk_spec_set_papr(CskSpec *spec, double alpha);

/**
 * # Safety
 * `spec` must be a live handle.
 */
CskStatus csk_spec_set_restarts(CskSpec *spec, uintptr_t restarts, uint64_t seed);

/**
 * # Safety
 * `spec` must be a live handle.
 */
CskStatus csk_spec_set_color(CskSpec *spec, double red, double green, double blue);

/**
 * Multi-start design. With `CskEqualizer::SvdPre` the
 * constellation lives in the pre-equalized domain of the cross-talk
 * channel; otherwise it is a plain intensity design.
 *
 * # Safety
 * `spec` must be a live handle and `out` valid for writes.
 */
CskStatus csk_design(const CskSpec *spec,
                     CskEqualizer equalizer,
                     double eps,
                     CskConstellation **out);

/**
 * Builds a constellation from `n_symbols * dim` row-major intensities.
 *
 * # Safety
 * `points` must be valid for `n_symbols * dim` reads; `out` for writes.
 */
CskStatus csk_constellation_from_points(const double *points,
                                        uintptr_t n_symbols,
                                        uintptr_t dim,
                                        CskConstellation **out);

/**
 * # Safety
 * `c` must be null or a live constellation handle.
 */
void csk_constellation_free(CskConstellation *c);

/**
 * Minimum Euclidean distance; NaN for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
double csk_constellation_med(const CskConstellation *c);

/**
 * Optimized squared-distance bound of a designed constellation.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
double csk_constellation_t_star(const CskConstellation *c);

/**
 * Writes the symbol count and dimension.
 *
 * # Safety
 * `c` must be a live handle; the outputs valid for writes.
 */
CskStatus csk_constellation_shape(const CskConstellation *c, uintptr_t *n_symbols, uintptr_t *dim);

/**
 * Copies the row-major points into `buf` of `len` doubles.
 *
 * # Safety
 * `c` must be a live handle, `buf` valid for `len` writes.
 */
CskStatus csk_constellation_points(const CskConstellation *c, double *buf, uintptr_t len);

/**
 * Binary switching labeling at the given design OSNR.
 *
 * # Safety
 * `c` must be a live handle and `out` valid for writes.
 */
CskStatus csk_label(const CskConstellation *c,
                    double design_osnr_db,
                    double avg_power,
                    uintptr_t restarts,
                    uint64_t seed,
                    CskLabeling **out);

/**
 * # Safety
 * `l` must be null or a live labeling handle.
 */
void csk_labeling_free(CskLabeling *l);

/**
 * Union-bound cost of the labeling; NaN for a null handle.
 *
 * # Safety
 * `l` must be null or a live handle.
 */
double csk_labeling_cost(const CskLabeling *l);

/**
 * Copies the word of every symbol into `buf` of `len` entries.
 *
 * # Safety
 * `l` must be a live handle, `buf` valid for `len` writes.
 */
CskStatus csk_labeling_words(const CskLabeling *l, uint32_t *buf, uintptr_t len);

/**
 * Monte Carlo BER of `c` under `l` at one OSNR, through the receiver the
 * constellation was designed for.
 *
 * # Safety
 * Handles must be live and `out` valid for writes.
 */
CskStatus csk_simulate(const CskConstellation *c,
                       const CskLabeling *l,
                       CskEqualizer equalizer,
                       double osnr_db,
                       uint64_t n_bits,
                       uint64_t seed,
                       double avg_power,
                       CskBerPoint *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSK_H */
