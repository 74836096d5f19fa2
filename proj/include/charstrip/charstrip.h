/* charstrip: first-order hyperbolic boundary-value problems on the strip
 * [0,1] x R. C interface to the solver library.
 *
 * All functions return a cs_status. On failure the message for the calling
 * thread is available from cs_last_error() until the next call on that thread.
 * Strings and field views returned from a result stay valid until the result
 * is freed. */
#ifndef CHARSTRIP_H
#define CHARSTRIP_H

#include <stddef.h>

#if defined(CHARSTRIP_BUILDING)
#define CS_API __attribute__((visibility("default")))
#else
#define CS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. Library errors start at 10. */
typedef enum cs_status {
    CS_OK = 0,
    CS_VERDICT_FAILED = 1,
    CS_USAGE = 2,
    CS_SYNTAX_ERROR = 10,
    CS_UNKNOWN_IDENTIFIER = 11,
    CS_DIVISION_BY_ZERO = 12,
    CS_DOMAIN_ERROR = 13,
    CS_UNBOUND_VARIABLE = 14,
    CS_VALIDATION_FAILED = 15,
    CS_SINGULAR_Q = 16,
    CS_STATE_OUT_OF_BOX = 17,
    CS_STEP_FAILURE = 18,
    CS_LOOKBACK_OUT_OF_WINDOW = 19,
    CS_VERSION_MISMATCH = 20,
    CS_MIXED_SIGN_B = 21,
    CS_B3_INAPPLICABLE = 22,
    CS_NON_CONTRACTION = 23,
    CS_TOLERANCE_NOT_REACHED = 24,
    CS_WINDOW_TOO_SHORT = 25,
    CS_OUTER_DIVERGENCE = 26,
    CS_STATE_LEFT_BOX = 27,
    CS_SMALLNESS_GATE = 28,
    CS_CONFIG_ERROR = 29,
    CS_IO_ERROR = 30,
    CS_INVALID_ARGUMENT = 31,
    CS_RESOURCE_LIMIT = 32,
    CS_INTERNAL = 99
} cs_status;

typedef struct cs_config cs_config;
typedef struct cs_result cs_result;

/* A read-only view of a sampled field. values[(c*(nx+1) + i)*nt + k] holds
 * component c at x = i/nx and t = t_lo + k*dt. */
typedef struct cs_field_view {
    int components;
    int nx;
    int nt;
    int periodic;
    double t_lo;
    double dt;
    const double* values;
} cs_field_view;

typedef void (*cs_progress_fn)(const char* line, void* user);

CS_API const char* cs_version(void);
CS_API const char* cs_status_name(cs_status status);
CS_API const char* cs_last_error(void);

CS_API cs_status cs_config_load(const char* path, cs_config** out);
CS_API cs_status cs_config_parse(const char* text, cs_config** out);
/* Overrides the grid resolution; pass 0 to keep a value. */
CS_API cs_status cs_config_set_grid(cs_config* cfg, int nx, int nt);
/* The command named in the config, or "" when it names none. */
CS_API const char* cs_config_command(const cs_config* cfg);
CS_API void cs_config_free(cs_config* cfg);

/* Progress lines for later runs on this thread; fn may be NULL. */
CS_API void cs_set_progress(cs_progress_fn fn, void* user);

/* Runs "check", "solve-linear", "solve-quasilinear" or "counterexample"
 * (NULL or "" uses the config's command). out_dir may be NULL to use the
 * config's output directory; an empty string writes nothing. On CS_OK or
 * CS_VERDICT_FAILED *out holds the result. */
CS_API cs_status cs_run(const cs_config* cfg, const char* command, const char* out_dir, cs_result** out);

CS_API const char* cs_result_json(const cs_result* res);
CS_API const char* cs_result_summary(const cs_result* res);
/* 1 when every requested verdict passed. */
CS_API int cs_result_verdict(const cs_result* res);
/* Comma separated names of failed verdicts, "" when none. */
CS_API const char* cs_result_failed(const cs_result* res);
/* Fields: "solution", "solution_v", "derivative", "V", "U" depending on the command. */
CS_API cs_status cs_result_field(const cs_result* res, const char* name, cs_field_view* view);
CS_API void cs_result_free(cs_result* res);

/* CSV of the backward characteristic of family j (1-based) through (x, t).
 * The returned string is owned by the caller and released with cs_string_free. */
CS_API cs_status cs_dump_characteristic(const cs_config* cfg, int family, double x, double t, char** csv);
CS_API void cs_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
