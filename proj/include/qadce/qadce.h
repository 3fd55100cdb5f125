/* C interface to the qadce library: joint activity detection and channel
 * estimation under low-resolution ADCs.
 *
 * Every fallible call returns a qadce_status. On failure a description is
 * available from qadce_last_error() on the calling thread until the next
 * failing call on that thread. Strings returned through char** out
 * parameters are owned by the caller and released with qadce_string_free().
 */
#ifndef QADCE_QADCE_H
#define QADCE_QADCE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QADCE_BUILDING_LIBRARY)
#    define QADCE_API __declspec(dllexport)
#  else
#    define QADCE_API __declspec(dllimport)
#  endif
#else
#  define QADCE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qadce_status {
    QADCE_OK = 0,
    QADCE_ERR_INVALID_ARGUMENT = 1,
    QADCE_ERR_DIMENSION_MISMATCH = 2,
    QADCE_ERR_CONFIG = 3,
    QADCE_ERR_NOT_CONVERGED = 4,
    QADCE_ERR_NUMERIC = 5,
    QADCE_ERR_IO = 6,
    QADCE_ERR_CANCELLED = 7,
    QADCE_ERR_OUT_OF_MEMORY = 8,
    QADCE_ERR_INTERNAL = 99
} qadce_status;

typedef struct qadce_config qadce_config;
typedef struct qadce_trial qadce_trial;

QADCE_API const char* qadce_version(void);
QADCE_API const char* qadce_status_name(qadce_status status);
QADCE_API const char* qadce_last_error(void);
QADCE_API void qadce_string_free(char* s);

/* Configuration. Profiles: "desk" (the default) and "large". */
QADCE_API qadce_status qadce_config_create(qadce_config** out);
QADCE_API qadce_status qadce_config_create_profile(const char* profile, qadce_config** out);
QADCE_API qadce_status qadce_config_clone(const qadce_config* cfg, qadce_config** out);
QADCE_API void qadce_config_destroy(qadce_config* cfg);
/* "key = value" lines, '#' comments; keys as accepted by qadce_config_set. */
QADCE_API qadce_status qadce_config_load_file(qadce_config* cfg, const char* path);
QADCE_API qadce_status qadce_config_load_string(qadce_config* cfg, const char* text);
QADCE_API qadce_status qadce_config_set(qadce_config* cfg, const char* key, const char* value);
QADCE_API qadce_status qadce_config_validate(const qadce_config* cfg);
/* Current values in the file format. */
QADCE_API qadce_status qadce_config_dump(const qadce_config* cfg, char** out);

/* One Monte-Carlo trial, deterministic in (cfg, seed). */
typedef struct qadce_trial_metrics {
    double mse;
    double tpr, fnr, fpr;
    int has_tpr, has_fnr, has_fpr; /* 0 when the rate is undefined */
    int64_t devices, antennas, grid_size, pilot_length, active;
    double snr_db;
    int adc_bits; /* -1 for an unquantized front end */
    uint64_t seed;
    int iterations;
    int converged;
    double active_component_power;
    double wall_time_s;
} qadce_trial_metrics;

QADCE_API qadce_status qadce_trial_run(const qadce_config* cfg, uint64_t seed, qadce_trial** out);
QADCE_API void qadce_trial_destroy(qadce_trial* trial);
QADCE_API qadce_status qadce_trial_metrics_get(const qadce_trial* trial, qadce_trial_metrics* out);
QADCE_API qadce_status qadce_trial_csv_header(int with_timing, char** out);
QADCE_API qadce_status qadce_trial_csv_row(const qadce_trial* trial, int with_timing, char** out);

/* Per-iteration CSV "iter,objective,change". */
QADCE_API qadce_status qadce_trial_trace_csv(const qadce_trial* trial, char** out);

/* Vector accessors. Each writes min(capacity, length) entries to buf (buf
 * may be NULL when capacity is 0) and stores the full length in *length. */
QADCE_API qadce_status qadce_trial_estimate(const qadce_trial* trial, double* buf, size_t capacity, size_t* length);
QADCE_API qadce_status qadce_trial_truth(const qadce_trial* trial, double* buf, size_t capacity, size_t* length);
QADCE_API qadce_status qadce_trial_activity(const qadce_trial* trial, uint8_t* detected, uint8_t* truth,
                                            size_t capacity, size_t* length);
QADCE_API qadce_status qadce_trial_llr(const qadce_trial* trial, double* buf, size_t capacity, size_t* length,
                                       double* threshold);
/* Objective per iteration; empty unless objective_check was enabled. */
QADCE_API qadce_status qadce_trial_objective_trace(const qadce_trial* trial, double* buf, size_t capacity,
                                                   size_t* length);

/* Sweep over one axis ("pilot_length", "snr_db" or "adc_bits") with values
 * given as a comma-separated list ("inf" allowed for adc_bits). The callback,
 * if any, receives the CSV header and then each row as it completes; a
 * nonzero return stops the sweep and the call returns QADCE_ERR_CANCELLED
 * with the rows so far in *csv. threads = 0 picks QADCE_THREADS or the
 * hardware concurrency. csv may be NULL. */
typedef int (*qadce_row_callback)(const char* row, void* user);

typedef struct qadce_sweep_options {
    const char* axis;
    const char* values;
    int trials_per_point;
    uint64_t seed_base;
    int threads;
} qadce_sweep_options;

QADCE_API qadce_status qadce_sweep_run(const qadce_config* base, const qadce_sweep_options* opts,
                                       qadce_row_callback on_row, void* user, char** csv);

/* Lloyd-Max designs for N(0, input_std^2) as a JSON array with thresholds,
 * levels, Bussgang gain, residual variance and distortion per bit width. */
QADCE_API qadce_status qadce_quantizer_report(const int* bits, size_t count, double input_std, char** json);

/* Runs the oracle suites. *report receives a JSON array of
 * {"name","passed","detail","seconds"}; *all_passed is 1 when every check
 * passed. full = 1 uses the large sample counts. */
QADCE_API qadce_status qadce_selftest(int full, uint64_t seed, char** report, int* all_passed);

#ifdef __cplusplus
}
#endif

#endif
