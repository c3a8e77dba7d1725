#ifndef RELAX_H
#define RELAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelaxStatus {
  RELAX_STATUS_OK = 0,
  RELAX_STATUS_NULL_POINTER = 1,
  RELAX_STATUS_INVALID_ARGUMENT = 2,
  RELAX_STATUS_UNKNOWN_MODEL = 3,
  RELAX_STATUS_CONFIG = 4,
  RELAX_STATUS_OUT_OF_DOMAIN = 5,
  RELAX_STATUS_SINGULAR = 6,
  RELAX_STATUS_CFL_VIOLATION = 7,
  RELAX_STATUS_INADMISSIBLE = 8,
  RELAX_STATUS_STABILITY_VIOLATION = 9,
  RELAX_STATUS_IO = 10,
  RELAX_STATUS_INTERNAL = 11,
} RelaxStatus;

// Opaque model handle.
typedef struct RelaxModel RelaxModel;

// Opaque simulation handle.
typedef struct RelaxSim RelaxSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *relax_last_error(void);

// Library version as a static NUL-terminated string.
const char *relax_version(void);

// Builds a model by registry name. `keys`/`values` hold `num_params`
// parameter overrides and may be null when `num_params` is 0.
//
// # Safety
// `name` and each of `keys[0..num_params]` must be NUL-terminated strings;
// `values` must hold `num_params` doubles; `out` must be writable.
enum RelaxStatus relax_model_create(const char *name,
                                    const char *const *keys,
                                    const double *values,
                                    size_t num_params,
                                    struct RelaxModel **out);

// # Safety
// `model` must come from [`relax_model_create`] and not be used afterwards.
void relax_model_free(struct RelaxModel *model);

// Number of state components `N`; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t relax_model_state_dim(const struct RelaxModel *model);

// Number of equilibrium components `n`; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t relax_model_equil_dim(const struct RelaxModel *model);

// First-order corrector at `(u, du_dx)`: writes `U1` (`N` doubles) and the
// effective flux (`n` doubles). Either output may be null.
//
// # Safety
// `u` and `du_dx` must hold `n` doubles; non-null outputs must be writable
// for `N` and `n` doubles respectively.
enum RelaxStatus relax_corrector(const struct RelaxModel *model,
                                 const double *u,
                                 const double *du_dx,
                                 double *out_u1,
                                 double *out_flux);

// Effective diffusion matrix `M(u)` (row-major, `n*n` doubles). `du_dx` is
// only read by gradient-dependent models and may be null otherwise.
//
// # Safety
// `u` (and `du_dx` when non-null) must hold `n` doubles; `out` must be
// writable for `n*n` doubles.
enum RelaxStatus relax_effective_matrix(const struct RelaxModel *model,
                                        const double *u,
                                        const double *du_dx,
                                        double *out);

// Creates a simulation from TOML configuration text. Output settings in the
// text are ignored; results are read back through the handle.
//
// # Safety
// `config_toml` must be a NUL-terminated string; `out` must be writable.
enum RelaxStatus relax_sim_create(const char *config_toml, struct RelaxSim **out);

// # Safety
// `sim` must come from [`relax_sim_create`] and not be used afterwards.
void relax_sim_free(struct RelaxSim *sim);

// Advances to `t_target`. `out_steps`, when non-null, receives the number
// of steps taken. On failure the simulation keeps the last good state.
//
// # Safety
// `sim` must be a live handle; `out_steps` must be null or writable.
enum RelaxStatus relax_sim_advance(struct RelaxSim *sim, double t_target, size_t *out_steps);

// Current time; NaN for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
double relax_sim_time(const struct RelaxSim *sim);

// Number of cells; 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
size_t relax_sim_num_cells(const struct RelaxSim *sim);

// State components per cell; 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
size_t relax_sim_state_dim(const struct RelaxSim *sim);

// Copies the cell states, cell-major, into `out` of length `len`, which
// must equal `num_cells * state_dim`.
//
// # Safety
// `sim` must be a live handle; `out` must be writable for `len` doubles.
enum RelaxStatus relax_sim_copy_state(const struct RelaxSim *sim, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAX_H */
