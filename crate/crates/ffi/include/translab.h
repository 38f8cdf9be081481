#ifndef TRANSLAB_H
#define TRANSLAB_H

#include <stddef.h>
#include <stdint.h>

typedef enum tl_status {
  TL_STATUS_OK = 0,
  TL_STATUS_DOMAIN = 1,
  TL_STATUS_OVERFLOW = 2,
  TL_STATUS_UNDERFLOW = 3,
  TL_STATUS_SINGULARITY = 4,
  TL_STATUS_CONFIG = 5,
  TL_STATUS_DIVERGENCE = 6,
  TL_STATUS_NUMERIC = 7,
  TL_STATUS_FIT = 8,
  TL_STATUS_IO = 9,
  TL_STATUS_JSON = 10,
  TL_STATUS_NULL_POINTER = 11,
  TL_STATUS_INVALID_UTF8 = 12,
  TL_STATUS_PANIC = 13,
} tl_status;

// Grid function handle (a solved field on a structured grid).
typedef struct tl_grid_function tl_grid_function;

// Boundary trace handle.
typedef struct tl_trace tl_trace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty after a success.
// The pointer stays valid until the next library call on this thread.
const char *tl_last_error(void);

// Library version as a static NUL-terminated string.
const char *tl_version(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void tl_string_free(char *s);

// Modified Bessel function `K0(x)`, `x > 0`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_bessel_k0(double x, double *out);

// Modified Bessel function `K1(x)`, `x > 0`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_bessel_k1(double x, double *out);

// `e^x K0(x)`, `x > 0`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_bessel_k0_scaled(double x, double *out);

// `e^x K1(x)`, `x > 0`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_bessel_k1_scaled(double x, double *out);

// Modified Bessel function `I0(x)`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_bessel_i0(double x, double *out);

// Exponential integral `Ei(x)`, `x < 0`.
//
// # Safety
// `out` must be a valid pointer to a double.
enum tl_status tl_expint_ei(double x, double *out);

// Parses a trace from JSON.
//
// # Safety
// `json` must be a NUL-terminated string; `out` a valid pointer.
enum tl_status tl_trace_from_json(const char *json, struct tl_trace **out);

// Piecewise step trace `c_left` for `x < x0`, `c_right` after.
//
// # Safety
// `out` must be a valid pointer.
enum tl_status tl_trace_step(double x0, double c_left, double c_right, struct tl_trace **out);

// # Safety
// `trace` must come from this library and not have been freed. Null is ignored.
void tl_trace_free(struct tl_trace *trace);

// # Safety
// `trace` must be a live handle; `out` a valid pointer.
enum tl_status tl_trace_eval(const struct tl_trace *trace, double x, double *out);

// Bounded L-harmonic extension of `trace` from the line `x3 = b`,
// evaluated at `(x2, x3)` with `x3 < b`.
//
// # Safety
// `trace` must be a live handle; `out` a valid pointer.
enum tl_status tl_poisson_duffin(const struct tl_trace *trace,
                                 double b,
                                 double x2,
                                 double x3,
                                 double *out);

// Heat evolution of `trace` for time `t > 0`, evaluated at `x`.
//
// # Safety
// `trace` must be a live handle; `out` a valid pointer.
enum tl_status tl_heat_convolve(const struct tl_trace *trace, double x, double t, double *out);

// Solves a Dirichlet problem described by a JSON solve config (the same
// schema as the `solve` command; missing fields take defaults).
//
// # Safety
// `config_json` must be NUL-terminated; `out` a valid pointer.
enum tl_status tl_solve(const char *config_json, struct tl_grid_function **out);

// # Safety
// `gf` must come from this library and not have been freed. Null is ignored.
void tl_grid_function_free(struct tl_grid_function *gf);

// Node counts along x2 and x3, and the spacing.
//
// # Safety
// `gf` must be a live handle; the out pointers valid.
enum tl_status tl_grid_function_shape(const struct tl_grid_function *gf,
                                      size_t *nx2,
                                      size_t *nx3,
                                      double *h);

// Value at node `(i, j)`; NaN for nodes outside the domain.
//
// # Safety
// `gf` must be a live handle; `out` a valid pointer.
enum tl_status tl_grid_function_value(const struct tl_grid_function *gf,
                                      size_t i,
                                      size_t j,
                                      double *out);

// Bilinear interpolation at `(x2, x3)`.
//
// # Safety
// `gf` must be a live handle; `out` a valid pointer.
enum tl_status tl_grid_function_interpolate(const struct tl_grid_function *gf,
                                            double x2,
                                            double x3,
                                            double *out);

// Runs a named experiment. `config_json` may be null for defaults. On
// success `*report_json` receives the canonical JSON report (free it with
// [`tl_string_free`]) and `*passed` is 1 when every verdict holds.
//
// # Safety
// `name` must be NUL-terminated, `config_json` null or NUL-terminated, and
// the out pointers valid.
enum tl_status tl_run_experiment(const char *name,
                                 const char *config_json,
                                 char **report_json,
                                 int32_t *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSLAB_H */
