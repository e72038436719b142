/* C interface for the dmpflight movement-primitive library. */

#ifndef DMPFLIGHT_H
#define DMPFLIGHT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Primitive family selector, mirrors the library's kinds.
typedef enum DmpfKind {
  DMPF_DISCRETE = 0,
  DMPF_RHYTHMIC = 1,
  DMPF_FILTERED = 2,
} DmpfKind;

// Result of every fallible FFI call.
typedef enum DmpfStatus {
  // Operation succeeded.
  DMPF_OK = 0,
  // A required pointer argument was NULL.
  DMPF_NULL_ARGUMENT = 1,
  // Invalid data, file contents, or configuration.
  DMPF_INVALID_DATA = 2,
  // Numerical failure (divergence, singular metric, ...).
  DMPF_NUMERICAL = 3,
  // A path or string argument was not valid UTF-8.
  DMPF_BAD_STRING = 4,
} DmpfStatus;

// Opaque movement-primitive handle.
typedef struct DmpfPrimitive DmpfPrimitive;

// Opaque sampled-trajectory handle.
typedef struct DmpfTrajectory DmpfTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the message of the most recent error on this thread into `buf`
// (NUL-terminated, truncated to `len`). Returns the full message length
// in bytes, excluding the terminator. A NULL `buf` just queries the length.
size_t dmpf_last_error(char *buf, size_t len);

// Load a primitive parameter file (TOML).
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` must be a valid
// pointer. On success `*out` owns the handle.
enum DmpfStatus dmpf_primitive_load(const char *path, struct DmpfPrimitive **out);

// Save a primitive parameter file (TOML).
//
// # Safety
// `primitive` must be a live handle from this library; `path` a valid
// NUL-terminated string.
enum DmpfStatus dmpf_primitive_save(const struct DmpfPrimitive *primitive, const char *path);

// Fit a primitive to a demonstration trajectory CSV.
//
// # Safety
// `path` must be a valid NUL-terminated string; `out` a valid pointer.
enum DmpfStatus dmpf_learn_from_csv(const char *path,
                                    size_t n_basis,
                                    enum DmpfKind kind,
                                    struct DmpfPrimitive **out);

// Number of degrees of freedom of a primitive; 0 for a NULL handle.
//
// # Safety
// `primitive` must be NULL or a live handle.
size_t dmpf_primitive_n_dofs(const struct DmpfPrimitive *primitive);

// Retarget the goal of one DOF (index order matches the parameter file).
//
// # Safety
// `primitive` must be a live handle.
enum DmpfStatus dmpf_primitive_set_goal(struct DmpfPrimitive *primitive, size_t dof, double goal);

// Integrate the primitive from rest at its recorded start.
//
// # Safety
// `primitive` must be a live handle; `out` a valid pointer. On success
// `*out` owns the trajectory.
enum DmpfStatus dmpf_primitive_rollout(const struct DmpfPrimitive *primitive,
                                       double dt,
                                       double duration,
                                       struct DmpfTrajectory **out);

// Convex superposition of two primitives of the same kind and basis.
// `alpha` weights the first primitive.
//
// # Safety
// `first` and `second` must be live handles; `out` a valid pointer.
enum DmpfStatus dmpf_blend(const struct DmpfPrimitive *first,
                           const struct DmpfPrimitive *second,
                           double alpha,
                           struct DmpfPrimitive **out);

// Number of samples in a trajectory; 0 for a NULL handle.
//
// # Safety
// `trajectory` must be NULL or a live handle.
size_t dmpf_trajectory_len(const struct DmpfTrajectory *trajectory);

// Number of DOFs of a trajectory; 0 for a NULL handle.
//
// # Safety
// `trajectory` must be NULL or a live handle.
size_t dmpf_trajectory_n_dofs(const struct DmpfTrajectory *trajectory);

// Read one sample: position, velocity, and acceleration of `dof` at
// `index`. Out-pointers may be NULL to skip a channel.
//
// # Safety
// `trajectory` must be a live handle; non-NULL out-pointers must be valid.
enum DmpfStatus dmpf_trajectory_sample(const struct DmpfTrajectory *trajectory,
                                       size_t dof,
                                       size_t index,
                                       double *y,
                                       double *ydot,
                                       double *yddot);

// Write a trajectory CSV (deterministic bytes).
//
// # Safety
// `trajectory` must be a live handle; `path` a valid NUL-terminated string.
enum DmpfStatus dmpf_trajectory_write_csv(const struct DmpfTrajectory *trajectory,
                                          const char *path);

// Release a primitive handle. NULL is a no-op.
//
// # Safety
// `primitive` must be NULL or a handle not freed before.
void dmpf_primitive_free(struct DmpfPrimitive *primitive);

// Release a trajectory handle. NULL is a no-op.
//
// # Safety
// `trajectory` must be NULL or a handle not freed before.
void dmpf_trajectory_free(struct DmpfTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMPFLIGHT_H */
