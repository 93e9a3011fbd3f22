/* C interface to the cramp library.
 *
 * Every object is an opaque handle created and destroyed through this API.
 * Functions return a cramp_status; on failure cramp_last_error() describes the
 * problem for the calling thread until the next call. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * cramp_string_free.
 */
#ifndef CRAMP_H
#define CRAMP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CRAMP_API __declspec(dllexport)
#else
#define CRAMP_API __attribute__((visibility("default")))
#endif

typedef enum cramp_status {
  CRAMP_OK = 0,
  CRAMP_E_CONFIG = 1,
  CRAMP_E_ARGUMENT = 2,
  CRAMP_E_INVALID_SCENARIO = 3,
  CRAMP_E_DEGENERATE = 10,
  CRAMP_E_INVALID_MATRIX = 11,
  CRAMP_E_DIMENSION = 12,
  CRAMP_E_RANK_DEFICIENT = 13,
  CRAMP_E_SAMPLE_SIZE = 14,
  CRAMP_E_PARSE = 15,
  CRAMP_E_IO = 16,
  CRAMP_E_NON_PD = 17,
  CRAMP_E_INTERNAL = 99
} cramp_status;

typedef struct cramp_dataset cramp_dataset;
typedef struct cramp_config cramp_config;
typedef struct cramp_outcome cramp_outcome;
typedef struct cramp_null_cache cramp_null_cache;

CRAMP_API const char* cramp_version(void);
CRAMP_API const char* cramp_last_error(void);
/* Nonzero for statuses caused by bad parameters rather than bad data. */
CRAMP_API int cramp_status_is_config(cramp_status status);
CRAMP_API void cramp_string_free(char* s);
/* FNV-1a 64-bit digest of a file's bytes as 16 hex digits. */
CRAMP_API cramp_status cramp_file_digest(const char* path, char** out);

/* Datasets: n rows of p values, row-major. */
CRAMP_API cramp_status cramp_dataset_create(const double* values, size_t n, size_t p,
                                            cramp_dataset** out);
/* Numeric table with an optional header row and optional leading label column. */
CRAMP_API cramp_status cramp_dataset_load(const char* path, char delimiter, int header,
                                          int label_column, cramp_dataset** out);
CRAMP_API void cramp_dataset_destroy(cramp_dataset* d);
CRAMP_API size_t cramp_dataset_rows(const cramp_dataset* d);
CRAMP_API size_t cramp_dataset_cols(const cramp_dataset* d);

/* Config. Integer keys: k, projections, null_reps, threads, keep_null_sample.
 * Real keys: alpha. String keys: base, hypothesis, null_sampling
 * (reduced | explicit | fresh). Setting base also sets the matching
 * hypothesis. */
CRAMP_API cramp_status cramp_config_create(cramp_config** out);
CRAMP_API void cramp_config_destroy(cramp_config* c);
CRAMP_API cramp_status cramp_config_set_int(cramp_config* c, const char* key, int64_t value);
CRAMP_API cramp_status cramp_config_set_real(cramp_config* c, const char* key, double value);
CRAMP_API cramp_status cramp_config_set_string(cramp_config* c, const char* key,
                                               const char* value);
CRAMP_API cramp_status cramp_config_set_seed(cramp_config* c, uint64_t seed);
CRAMP_API cramp_status cramp_config_validate(const cramp_config* c);

/* Null-distribution cache; directory may be NULL for memory only. */
CRAMP_API cramp_status cramp_null_cache_create(const char* directory, cramp_null_cache** out);
CRAMP_API void cramp_null_cache_destroy(cramp_null_cache* cache);

/* Random-projection test. cache may be NULL. */
CRAMP_API cramp_status cramp_run_one_sample(const cramp_config* c, const cramp_dataset* x,
                                            cramp_null_cache* cache, uint64_t observation,
                                            cramp_outcome** out);
CRAMP_API cramp_status cramp_run_two_sample(const cramp_config* c, const cramp_dataset* x,
                                            const cramp_dataset* y, cramp_null_cache* cache,
                                            uint64_t observation, cramp_outcome** out);
CRAMP_API void cramp_outcome_destroy(cramp_outcome* o);
CRAMP_API double cramp_outcome_mean_p(const cramp_outcome* o);
CRAMP_API double cramp_outcome_critical_value(const cramp_outcome* o);
CRAMP_API int cramp_outcome_reject(const cramp_outcome* o);
/* Copies up to cap values and returns the total count. */
CRAMP_API size_t cramp_outcome_pvalues(const cramp_outcome* o, double* buf, size_t cap);
CRAMP_API size_t cramp_outcome_null_sample(const cramp_outcome* o, double* buf, size_t cap);
CRAMP_API cramp_status cramp_outcome_to_json(const cramp_outcome* o, char** out);

/* Empirical critical value for the given group sizes (m = 0 for one sample). */
CRAMP_API cramp_status cramp_critical_value(const cramp_config* c, size_t n, size_t m,
                                            size_t p, cramp_null_cache* cache,
                                            double* critical_value);

/* Direct (unprojected) tests. method is one of lrt-identity, lrt-sphericity,
 * john, nagao, lw, syk-u, syk-v, czz-u, czz-v for one sample (y = NULL) or
 * box-m, wald, schott, syk2, lc, clx for two. monte_carlo selects the
 * permutation calibration where available. */
CRAMP_API cramp_status cramp_direct_test(const char* method, const cramp_dataset* x,
                                         const cramp_dataset* y, int monte_carlo,
                                         int mc_replicates, uint64_t seed, int threads,
                                         double* statistic, double* p_value);

/* Simulation grid. Each finished cell is passed to on_row as a CSV line (no
 * header, no newline); the full result set is returned in out as CSV or
 * JSON (format "csv" or "json"). */
typedef void (*cramp_row_callback)(const char* csv_line, void* user);
CRAMP_API const char* cramp_grid_csv_header(void);
CRAMP_API cramp_status cramp_simulate_grid(const char* grid_path, int threads,
                                           const char* cache_dir, const char* format,
                                           cramp_row_callback on_row, void* user,
                                           char** out);

/* Gene-expression workflow driven by a JSON request; see the README for the
 * field list. Returns the report as JSON and as CSV. */
CRAMP_API cramp_status cramp_genes_run(const char* request_json, char** report_json,
                                       char** report_csv);

#ifdef __cplusplus
}
#endif

#endif /* CRAMP_H */
