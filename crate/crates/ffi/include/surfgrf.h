#ifndef SURFGRF_H
#define SURFGRF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes of every fallible function.
 */
typedef enum SgrfStatus {
  SGRF_STATUS_OK = 0,
  SGRF_STATUS_NULL_POINTER = 1,
  SGRF_STATUS_INVALID_ARGUMENT = 2,
  SGRF_STATUS_DOMAIN = 3,
  SGRF_STATUS_GEOMETRY = 4,
  SGRF_STATUS_SOLVER = 5,
  SGRF_STATUS_PARSE = 6,
  SGRF_STATUS_IO = 7,
  SGRF_STATUS_PANIC = 8,
} SgrfStatus;

/**
 * One sampled random field.
 */
typedef struct SgrfField SgrfField;

/**
 * Discretized operator `κ² − Δ_Γ` with its multilevel hierarchy.
 */
typedef struct SgrfProblem SgrfProblem;

/**
 * Closed multipatch surface.
 */
typedef struct SgrfSurface SgrfSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *sgrf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sgrf_version(void);

/**
 * Builtin surface: `"sphere"`, `"torus"` or `"cube"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum SgrfStatus sgrf_surface_builtin(const char *name, struct SgrfSurface **out);

/**
 * Surface from a multipatch geometry file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SgrfStatus sgrf_surface_load(const char *path, struct SgrfSurface **out);

/**
 * # Safety
 * `surface` must be a live handle and `out` writable.
 */
enum SgrfStatus sgrf_surface_num_patches(const struct SgrfSurface *surface, size_t *out);

/**
 * # Safety
 * `surface` must be null or a handle not yet freed.
 */
void sgrf_surface_free(struct SgrfSurface *surface);

/**
 * Assembles mass and stiffness matrices and the multilevel hierarchy for
 * level `level` and spline degree `degree`.
 *
 * # Safety
 * `surface` must be a live handle and `out` writable.
 */
enum SgrfStatus sgrf_problem_new(const struct SgrfSurface *surface,
                                 size_t level,
                                 size_t degree,
                                 double kappa,
                                 struct SgrfProblem **out);

/**
 * # Safety
 * `problem` must be a live handle and `out` writable.
 */
enum SgrfStatus sgrf_problem_num_dofs(const struct SgrfProblem *problem, size_t *out);

/**
 * Load vector of the real spherical harmonic `(l, m)`, evaluated at the
 * radial projection of each surface point onto the unit sphere.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum SgrfStatus sgrf_problem_harmonic_load(const struct SgrfProblem *problem,
                                           uint32_t l,
                                           int32_t m,
                                           double *out,
                                           size_t len);

/**
 * Coefficients of `(κ² − Δ_Γ)^{−β}` applied to a load vector. `quadrature`
 * is the sinc budget summed over stages, 0 for the level default;
 * `improved` selects the improved splitting of `β`.
 *
 * # Safety
 * `load` and `out` must point to `len` doubles each.
 */
enum SgrfStatus sgrf_problem_apply_fractional(const struct SgrfProblem *problem,
                                              double beta,
                                              size_t quadrature,
                                              bool improved,
                                              const double *load,
                                              double *out,
                                              size_t len);

/**
 * Value at parameter `(x, y)` of patch `patch` of the spline with
 * coefficients `coeffs`.
 *
 * # Safety
 * `coeffs` must point to `len` doubles and `out` be writable.
 */
enum SgrfStatus sgrf_problem_evaluate(const struct SgrfProblem *problem,
                                      const double *coeffs,
                                      size_t len,
                                      size_t patch,
                                      double x,
                                      double y,
                                      double *out);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void sgrf_problem_free(struct SgrfProblem *problem);

/**
 * Draws one Whittle-Matérn field with seed `seed`. `sqrt_terms` is the
 * number of terms of the mass square-root expansion (0 for the default).
 *
 * # Safety
 * `surface` must be a live handle and `out` writable.
 */
enum SgrfStatus sgrf_sample(const struct SgrfSurface *surface,
                            size_t level,
                            size_t degree,
                            double beta,
                            double kappa,
                            uint64_t seed,
                            size_t sqrt_terms,
                            struct SgrfField **out);

/**
 * # Safety
 * `field` must be a live handle and `out` writable.
 */
enum SgrfStatus sgrf_field_num_dofs(const struct SgrfField *field, size_t *out);

/**
 * Copies the spline coefficients into `out`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum SgrfStatus sgrf_field_coefficients(const struct SgrfField *field, double *out, size_t len);

/**
 * Surface point (`point[3]`, may be null) and field value at parameter
 * `(x, y)` of patch `patch`.
 *
 * # Safety
 * `value` must be writable; `point` null or three writable doubles.
 */
enum SgrfStatus sgrf_field_evaluate(const struct SgrfField *field,
                                    size_t patch,
                                    double x,
                                    double y,
                                    double *point,
                                    double *value);

/**
 * # Safety
 * `field` must be null or a handle not yet freed.
 */
void sgrf_field_free(struct SgrfField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFGRF_H */
