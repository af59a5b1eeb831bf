#ifndef QLR_H
#define QLR_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
typedef struct QlrInstance QlrInstance;

#define QLR_OK 0

#define QLR_ERR_NULL 1

#define QLR_ERR_PARSE 2

#define QLR_ERR_INVALID 3

#define QLR_ERR_KIND 4

#define QLR_ERR_CAP 5

#define QLR_ERR_NUMERIC 6

#define QLR_ERR_INFEASIBLE 7

#define QLR_ERR_UTF8 8

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message for this thread; valid until the next failing call.
 */
const char *qlr_last_error(void);

/**
 * Library version string (static storage).
 */
const char *qlr_version(void);

/**
 * Parse an instance from JSON. On success stores a new handle in `out`
 * and returns QLR_OK; the handle must be released with
 * `qlr_instance_free`.
 */
int32_t qlr_instance_parse(const char *json, QlrInstance **out);

void qlr_instance_free(QlrInstance *handle);

/**
 * Number of qubits, or -1 for a null handle.
 */
int64_t qlr_instance_n(const QlrInstance *handle);

/**
 * Number of constraint edges, or -1 for a null handle.
 */
int64_t qlr_instance_edge_count(const QlrInstance *handle);

/**
 * Run the local-ratio solver (tvc or pcvc instances). On success stores
 * a report JSON string in `out_json`; release it with `qlr_string_free`.
 * `with_certificate_check` re-validates the decomposition and fails with
 * QLR_ERR_NUMERIC if it does not pass.
 */
int32_t qlr_solve_local_ratio(const QlrInstance *handle,
                              bool with_certificate_check,
                              char **out_json);

/**
 * Solve an entangled-constraint instance; emits the component report
 * JSON on success.
 */
int32_t qlr_solve_evc(const QlrInstance *handle, char **out_json);

/**
 * Exact ground energy via the oracle matching the instance kind.
 * Writes the energy to `out_energy`; QLR_ERR_INFEASIBLE if the
 * constraint subspace is empty.
 */
int32_t qlr_exact_ground_energy(const QlrInstance *handle, double *out_energy);

/**
 * Release a string returned by a solve call.
 */
void qlr_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLR_H */
