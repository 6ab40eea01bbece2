#ifndef ISOTUNE_H
#define ISOTUNE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define ISOTUNE_STRUCTURE_IOPID 0

#define ISOTUNE_STRUCTURE_FOPID 1

#define ISOTUNE_STRUCTURE_FOPI 2

typedef enum IsotuneStatus {
  ISOTUNE_STATUS_OK = 0,
  ISOTUNE_STATUS_NULL_POINTER = 1,
  ISOTUNE_STATUS_INVALID_ARGUMENT = 2,
  ISOTUNE_STATUS_NUMERICAL = 3,
  ISOTUNE_STATUS_CONFIG = 4,
  ISOTUNE_STATUS_DATA = 5,
  ISOTUNE_STATUS_IO = 6,
  ISOTUNE_STATUS_PANIC = 7,
} IsotuneStatus;

// Opaque discrete-time transfer function.
typedef struct IsotuneTf IsotuneTf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after a
// success. Valid until the next call into the library on this thread.
const char *isotune_last_error(void);

// Library version as a static NUL-terminated string.
const char *isotune_version(void);

// Discrete transfer function from coefficients in `z`, highest power first.
//
// # Safety
// `num` and `den` must point to `num_len` and `den_len` readable doubles;
// `out` must be writable.
enum IsotuneStatus isotune_tf_from_coeffs(const double *num,
                                          size_t num_len,
                                          const double *den,
                                          size_t den_len,
                                          double ts,
                                          struct IsotuneTf **out);

// Releases a transfer function. Null is ignored.
//
// # Safety
// `tf` must come from this library and must not be used afterwards.
void isotune_tf_free(struct IsotuneTf *tf);

// Numerator and denominator degrees.
//
// # Safety
// `tf` must be a live handle; outputs must be writable.
enum IsotuneStatus isotune_tf_order(const struct IsotuneTf *tf,
                                    size_t *num_degree,
                                    size_t *den_degree);

// Frequency response at `omega` rad/s.
//
// # Safety
// `tf` must be a live handle; outputs must be writable.
enum IsotuneStatus isotune_tf_freq_response(const struct IsotuneTf *tf,
                                            double omega,
                                            double *re,
                                            double *im);

// Largest pole modulus.
//
// # Safety
// `tf` must be a live handle; `out` must be writable.
enum IsotuneStatus isotune_tf_spectral_radius(const struct IsotuneTf *tf, double *out);

// First `len` samples of the impulse response.
//
// # Safety
// `tf` must be a live handle; `out` must hold `len` doubles.
enum IsotuneStatus isotune_tf_impulse(const struct IsotuneTf *tf, size_t len, double *out);

// Product of two transfer functions.
//
// # Safety
// `a` and `b` must be live handles; `out` must be writable.
enum IsotuneStatus isotune_tf_mul(const struct IsotuneTf *a,
                                  const struct IsotuneTf *b,
                                  struct IsotuneTf **out);

// Unity negative feedback `L / (1 + L)`.
//
// # Safety
// `l` must be a live handle; `out` must be writable.
enum IsotuneStatus isotune_tf_feedback(const struct IsotuneTf *l, struct IsotuneTf **out);

// Discretized reference closed loop for a phase margin in degrees and a
// crossover in rad/s. `oust_order` counts zero-pole pairs on each side of
// the band centre.
//
// # Safety
// `out` must be writable.
enum IsotuneStatus isotune_reference_model(double phi_m_deg,
                                           double omega_c,
                                           size_t oust_order,
                                           double omega_b,
                                           double omega_h,
                                           double ts,
                                           struct IsotuneTf **out);

// Discretized controller of the given structure (`ISOTUNE_STRUCTURE_*`).
//
// # Safety
// `theta` must hold `theta_len` doubles; `out` must be writable.
enum IsotuneStatus isotune_controller(uint32_t structure_code,
                                      const double *theta,
                                      size_t theta_len,
                                      double ts,
                                      size_t oust_order,
                                      double omega_b,
                                      double omega_h,
                                      struct IsotuneTf **out);

// Unity-feedback simulation of plant `p` with controller `c` driven by `r`.
//
// # Safety
// `r`, `u` and `y` must hold `len` doubles; handles must be live.
enum IsotuneStatus isotune_closed_loop_sim(const struct IsotuneTf *p,
                                           const struct IsotuneTf *c,
                                           const double *r,
                                           size_t len,
                                           double *u,
                                           double *y);

// Fictitious reference `C^{-1} u + y` for logged data.
//
// # Safety
// `u`, `y` and `out` must hold `len` doubles; `c` must be live.
enum IsotuneStatus isotune_fictitious_reference(const struct IsotuneTf *c,
                                                const double *u,
                                                const double *y,
                                                size_t len,
                                                double *out);

// Solves the lower-triangular Toeplitz system with first column
// `first_col` for right-hand side `rhs`.
//
// # Safety
// All buffers must hold `len` doubles.
enum IsotuneStatus isotune_toeplitz_solve(const double *first_col,
                                          const double *rhs,
                                          size_t len,
                                          double *out);

// Runs the tuner on a TOML configuration and an experiment CSV. On success
// `out_json` receives a JSON object with `parameter_names`, `theta_star`,
// `j_star`, `j_threshold`, `verdict` and `evaluations`; release it with
// [`isotune_string_free`].
//
// # Safety
// `config_toml` and `data_path` must be NUL-terminated; `out_json` must be
// writable.
enum IsotuneStatus isotune_tune(const char *config_toml, const char *data_path, char **out_json);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and must not be used afterwards.
void isotune_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOTUNE_H */
