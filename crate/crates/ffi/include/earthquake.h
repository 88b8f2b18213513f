#ifndef EARTHQUAKE_H
#define EARTHQUAKE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EqStatus {
  EQ_STATUS_OK = 0,
  EQ_STATUS_NULL_POINTER = 1,
  EQ_STATUS_INVALID_UTF8 = 2,
  EQ_STATUS_PARSE = 3,
  EQ_STATUS_INVALID_LAMINATION = 4,
  EQ_STATUS_INVALID_GEOMETRY = 5,
  EQ_STATUS_INVALID_MAP = 6,
  EQ_STATUS_NUMERICAL = 7,
  EQ_STATUS_OUT_OF_RANGE = 8,
  EQ_STATUS_INTERNAL = 9,
} EqStatus;

// Opaque piecewise Möbius homeomorphism of the circle.
typedef struct EqCircleMap EqCircleMap;

// Opaque measured lamination.
typedef struct EqLamination EqLamination;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` as a
// nul-terminated string and returns its length without the terminator.
// With a null `buf` or a too small `len` nothing is copied, so a first call
// with `len = 0` sizes the buffer. Returns 0 when there is no error.
//
// # Safety
// `buf` is null or valid for `len` writable bytes.
size_t eq_last_error_message(char *buf, size_t len);

// Parses a lamination from a JSON array of `{"p_angle", "q_angle", "weight"}`
// records.
//
// # Safety
// `json` is a valid nul-terminated string; `out_lam` is valid for writes.
enum EqStatus eq_lamination_from_json(const char *json, struct EqLamination **out_lam);

// Builds a lamination from `n` triples `(p, q, weight)` of endpoint angles
// and transverse weight.
//
// # Safety
// `atoms` is valid for `3 * n` reads (or may be null when `n` is 0);
// `out_lam` is valid for writes.
enum EqStatus eq_lamination_from_atoms(const double *atoms,
                                       size_t n,
                                       struct EqLamination **out_lam);

// Number of atoms.
//
// # Safety
// `lam` is a live handle; `out_len` is valid for writes.
enum EqStatus eq_lamination_len(const struct EqLamination *lam, size_t *out_len);

// Endpoint angles and weight of atom `i`.
//
// # Safety
// `lam` is a live handle; `out_atom` is valid for 3 writes.
enum EqStatus eq_lamination_atom(const struct EqLamination *lam, size_t i, double *out_atom);

// Lamination mass of the box with counterclockwise corner angles
// `corners[0..4]`.
//
// # Safety
// `lam` is a live handle; `corners` is valid for 4 reads; `out_mass` is
// valid for writes.
enum EqStatus eq_lamination_box_mass(const struct EqLamination *lam,
                                     const double *corners,
                                     double *out_mass);

// Serializes the lamination as JSON into a new string that the caller
// releases with [`eq_string_free`].
//
// # Safety
// `lam` is a live handle; `out_json` is valid for writes.
enum EqStatus eq_lamination_to_json(const struct EqLamination *lam, char **out_json);

// Releases a lamination. Null is ignored.
//
// # Safety
// `lam` is null or a handle from this library not yet freed.
void eq_lamination_free(struct EqLamination *lam);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` is null or a string from this library not yet freed.
void eq_string_free(char *s);

// Boundary extension of the left earthquake along `lam`, fixing the stratum
// of the origin (nudged off any atom through it).
//
// # Safety
// `lam` is a live handle; `out_map` is valid for writes.
enum EqStatus eq_earthquake_boundary(const struct EqLamination *lam, struct EqCircleMap **out_map);

// Boundary map of the earthquake along `t · lam`, fixing the default base
// stratum.
//
// # Safety
// `lam` is a live handle; `out_map` is valid for writes.
enum EqStatus eq_earthquake_path(const struct EqLamination *lam,
                                 double t,
                                 struct EqCircleMap **out_map);

// Parses a circle map from its text form.
//
// # Safety
// `text` is a valid nul-terminated string; `out_map` is valid for writes.
enum EqStatus eq_circle_map_from_text(const char *text, struct EqCircleMap **out_map);

// Number of breakpoints.
//
// # Safety
// `map` is a live handle; `out_len` is valid for writes.
enum EqStatus eq_circle_map_breakpoints(const struct EqCircleMap *map, size_t *out_len);

// Image of the boundary angle `angle`, in `[0, 2π)`.
//
// # Safety
// `map` is a live handle; `out_angle` is valid for writes.
enum EqStatus eq_circle_map_eval(const struct EqCircleMap *map, double angle, double *out_angle);

// Recovers the earthquake measure of a boundary map.
//
// # Safety
// `map` is a live handle; `out_lam` is valid for writes.
enum EqStatus eq_recover_measure(const struct EqCircleMap *map, struct EqLamination **out_lam);

// Liouville measure of the pullback of a box under `map`.
//
// # Safety
// `map` is a live handle; `corners` is valid for 4 reads; `out_mass` is
// valid for writes.
enum EqStatus eq_pullback_liouville(const struct EqCircleMap *map,
                                    const double *corners,
                                    double *out_mass);

// Releases a circle map. Null is ignored.
//
// # Safety
// `map` is null or a handle from this library not yet freed.
void eq_circle_map_free(struct EqCircleMap *map);

// Liouville measure of the box with counterclockwise corner angles
// `corners[0..4]`.
//
// # Safety
// `corners` is valid for 4 reads; `out_mass` is valid for writes.
enum EqStatus eq_liouville_box(const double *corners, double *out_mass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EARTHQUAKE_H */
