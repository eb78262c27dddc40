#ifndef HALFLINE_H
#define HALFLINE_H

/* C interface to the halfline solver library.
 *
 * Every function returns an hl_status. On failure the message is available
 * from hl_last_error() until the next call on the same thread. Strings
 * returned through out-parameters are owned by the caller and released with
 * hl_free_string. */

#include <stddef.h>

#if defined(_WIN32)
#define HL_API __declspec(dllexport)
#else
#define HL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hl_status {
  HL_OK = 0,
  HL_INVALID_ARGUMENT = 1,
  HL_TRUNCATION_MISMATCH = 2,
  HL_OVERFLOW = 3,
  HL_QUADRATURE_NONCONVERGENCE = 4,
  HL_NON_CONTRACTION = 5,
  HL_MAX_ITERATIONS = 6,
  HL_DOMAIN = 7,
  HL_INTERNAL = 8
} hl_status;

typedef struct hl_state hl_state;
typedef struct hl_trajectory hl_trajectory;

HL_API const char* hl_version(void);
HL_API const char* hl_last_error(void);
HL_API const char* hl_status_name(hl_status s);
HL_API void hl_free_string(char* s);

/* States: coefficients u^(n), n = 0..truncation, as interleaved (re, im). */
HL_API hl_status hl_state_create(const double* re_im, size_t truncation, double time, hl_state** out);
HL_API hl_status hl_state_from_json(const char* json, hl_state** out);
HL_API hl_status hl_state_to_json(const hl_state* s, char** out);
HL_API hl_status hl_state_truncation(const hl_state* s, size_t* out);
HL_API hl_status hl_state_coeff(const hl_state* s, size_t n, double* re, double* im);
HL_API hl_status hl_state_sobolev_norm(const hl_state* s, double exponent, double* out);
HL_API hl_status hl_state_convolve(const hl_state* a, const hl_state* b, hl_state** out);
HL_API hl_status hl_state_power(const hl_state* a, unsigned exponent, hl_state** out);
HL_API void hl_state_free(hl_state* s);

/* Resonance function for integer or real alpha; indices are n_0..n_k. */
HL_API hl_status hl_phase(double alpha, const unsigned long long* indices, size_t count, double* out);
HL_API hl_status hl_phase_lower_bound(double alpha, const unsigned long long* indices, size_t count, double* out);
/* *pass = 1 when no counterexample exists up to cap. */
HL_API hl_status hl_certify_phase_bound(double alpha, int k, unsigned long long cap, int* pass);

/* Equation given as JSON: {"alpha":..., "k":... | "nonlin_coeffs":{...}, "dispersion":...}. */
HL_API hl_status hl_simulate(const char* spec_json, const hl_state* phi, double T, double tol, hl_trajectory** out);
HL_API hl_status hl_trajectory_final_time(const hl_trajectory* tr, double* out);
HL_API hl_status hl_trajectory_state_at(const hl_trajectory* tr, double t, hl_state** out);
HL_API hl_status hl_trajectory_to_json(const hl_trajectory* tr, size_t max_samples, char** out);
HL_API void hl_trajectory_free(hl_trajectory* tr);

/* Runs a subcommand (simulate, picard, gauge, phase-check, inflate,
 * cross-validate, batch) on a JSON parameter object. result_json receives
 * {"output":..., "csv":{name: text}, "manifest":...}; *verdict is 1 when
 * every identity check held. */
HL_API hl_status hl_run(const char* subcommand, const char* params_json, char** result_json, int* verdict);

#ifdef __cplusplus
}
#endif

#endif
