#ifndef CRNFLUX_H
#define CRNFLUX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrnfluxStatus {
  CRNFLUX_STATUS_OK = 0,
  CRNFLUX_STATUS_NULL_POINTER = 1,
  CRNFLUX_STATUS_INVALID_UTF8 = 2,
  CRNFLUX_STATUS_PARSE = 3,
  CRNFLUX_STATUS_UNBOUNDED_STATE_SPACE = 4,
  CRNFLUX_STATUS_EMPTY_STATE_SPACE = 5,
  CRNFLUX_STATUS_AMBIGUOUS_EDGE = 6,
  CRNFLUX_STATUS_CYCLE_BUDGET_EXCEEDED = 7,
  CRNFLUX_STATUS_SINGULAR_DENOMINATOR = 8,
  CRNFLUX_STATUS_MISSING_LABEL = 9,
  CRNFLUX_STATUS_CLOSURE_VIOLATION = 10,
  CRNFLUX_STATUS_ABSORBING_STATE = 11,
  CRNFLUX_STATUS_ASSIGNMENT = 12,
  CRNFLUX_STATUS_INVALID_ARGUMENT = 13,
  CRNFLUX_STATUS_IO = 14,
  CRNFLUX_STATUS_JSON = 15,
  CRNFLUX_STATUS_OUT_OF_RANGE = 16,
  CRNFLUX_STATUS_BUFFER_TOO_SMALL = 17,
  CRNFLUX_STATUS_PANIC = 18,
} CrnfluxStatus;

typedef enum CrnfluxXMode {
  CRNFLUX_X_MODE_FALLING_FACTORIAL = 0,
  CRNFLUX_X_MODE_CONCENTRATION = 1,
} CrnfluxXMode;

// State space, cycles, fluxes and class fluxes of one network at one
// system size.
typedef struct CrnfluxAnalysis CrnfluxAnalysis;

// A parsed reaction network.
typedef struct CrnfluxNetwork CrnfluxNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *crnflux_version(void);

// Message for the last failed call on this thread; empty after success
// except for a failed `crnflux_network_validate`.
const char *crnflux_last_error_message(void);

// Parses a network description.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` a valid pointer.
enum CrnfluxStatus crnflux_network_parse(const char *text, struct CrnfluxNetwork **out);

// # Safety
// `net` must be null or a handle from `crnflux_network_parse` not yet freed.
void crnflux_network_free(struct CrnfluxNetwork *net);

// Internal species, external species and reaction counts.
//
// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_network_dims(const struct CrnfluxNetwork *net,
                                        uintptr_t *n_internal,
                                        uintptr_t *n_external,
                                        uintptr_t *n_reactions);

// Checks the network hypotheses; `passed` receives the verdict. On a
// failed check the violations are left in the last error message.
//
// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_network_validate(const struct CrnfluxNetwork *net,
                                            bool strict,
                                            bool exchange_shape,
                                            bool *passed);

// Enumerates states and cycles and computes all fluxes.
//
// `omega <= 0` uses the value from the network file, `max_cycle_len == 0`
// means unbounded and `max_cycles == 0` the default budget.
//
// # Safety
// `net` and `out` must be valid.
enum CrnfluxStatus crnflux_analysis_new(const struct CrnfluxNetwork *net,
                                        double omega,
                                        enum CrnfluxXMode x_mode,
                                        uintptr_t max_cycle_len,
                                        uintptr_t max_cycles,
                                        struct CrnfluxAnalysis **out);

// # Safety
// `a` must be null or a handle from `crnflux_analysis_new` not yet freed.
void crnflux_analysis_free(struct CrnfluxAnalysis *a);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_n_states(const struct CrnfluxAnalysis *a, uintptr_t *n);

// Copy numbers of state `i`; `required` receives the species count.
//
// # Safety
// `a` and `required` must be valid; `buf` must hold `cap` entries.
enum CrnfluxStatus crnflux_analysis_state(const struct CrnfluxAnalysis *a,
                                          uintptr_t i,
                                          uint64_t *buf,
                                          uintptr_t cap,
                                          uintptr_t *required);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_n_cycles(const struct CrnfluxAnalysis *a, uintptr_t *n);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_cycle_len(const struct CrnfluxAnalysis *a,
                                              uintptr_t i,
                                              uintptr_t *len);

// State indices of cycle `i`, smallest first.
//
// # Safety
// `a` and `required` must be valid; `buf` must hold `cap` entries.
enum CrnfluxStatus crnflux_analysis_cycle_states(const struct CrnfluxAnalysis *a,
                                                 uintptr_t i,
                                                 uintptr_t *buf,
                                                 uintptr_t cap,
                                                 uintptr_t *required);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_cycle_flux(const struct CrnfluxAnalysis *a,
                                               uintptr_t i,
                                               double *omega);

// Stationary distribution; `required` receives the state count.
//
// # Safety
// `a` and `required` must be valid; `buf` must hold `cap` entries.
enum CrnfluxStatus crnflux_analysis_stationary(const struct CrnfluxAnalysis *a,
                                               double *buf,
                                               uintptr_t cap,
                                               uintptr_t *required);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_n_classes(const struct CrnfluxAnalysis *a, uintptr_t *n);

// Net reaction counts of class `i`; `required` receives the reaction count.
//
// # Safety
// `a` and `required` must be valid; `buf` must hold `cap` entries.
enum CrnfluxStatus crnflux_analysis_class_key(const struct CrnfluxAnalysis *a,
                                              uintptr_t i,
                                              int64_t *buf,
                                              uintptr_t cap,
                                              uintptr_t *required);

// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_class_flux(const struct CrnfluxAnalysis *a,
                                               uintptr_t i,
                                               double *omega);

// Flux table as CSV. Free the string with `crnflux_string_free`.
//
// # Safety
// All pointers must be valid.
enum CrnfluxStatus crnflux_analysis_fluxes_csv(const struct CrnfluxAnalysis *a, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void crnflux_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRNFLUX_H */
