#ifndef SANDBOOST_H
#define SANDBOOST_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SB_API __declspec(dllexport)
#else
#define SB_API __attribute__((visibility("default")))
#endif

typedef enum {
  SB_OK = 0,
  SB_ERR_INTERNAL = 1,
  SB_ERR_CONFIG = 2,
  SB_ERR_DATA = 3,
  SB_ERR_NUMERIC = 4
} sb_status;

typedef struct sb_dataset sb_dataset;
typedef struct sb_report sb_report;

/* Message of the last failed call on this thread ("" if none). */
SB_API const char* sb_last_error(void);
/* Machine-readable tag of the last failure, e.g. "MissingColumn". */
SB_API const char* sb_last_error_code(void);
SB_API const char* sb_version(void);

/* x_cols may be NULL when n_x == 0; subgroup_col may be NULL or "". */
SB_API sb_status sb_dataset_load_csv(const char* path, const char* group_col, const char* y_col,
                                     const char* d_col, const char* const* x_cols, size_t n_x,
                                     const char* subgroup_col, sb_dataset** out);
SB_API sb_status sb_dataset_parse_csv(const char* text, const char* group_col, const char* y_col,
                                      const char* d_col, const char* const* x_cols, size_t n_x,
                                      const char* subgroup_col, sb_dataset** out);
SB_API int sb_dataset_n_groups(const sb_dataset* data);
SB_API int sb_dataset_n_obs(const sb_dataset* data);
SB_API void sb_dataset_free(sb_dataset* data);

/* options_json: flat JSON object (folds, splits, alpha, correlation, weights, seed, ...). */
SB_API sb_status sb_fit(const sb_dataset* data, const char* options_json, sb_report** out);
SB_API double sb_report_beta(const sb_report* r);
SB_API double sb_report_variance(const sb_report* r);
SB_API void sb_report_ci(const sb_report* r, double* lower, double* upper);
SB_API sb_status sb_report_json(const sb_report* r, char** json_out);
SB_API void sb_report_free(sb_report* r);

/* Both outputs are allocated; release with sb_string_free. csv_out may be NULL. */
SB_API sb_status sb_simulate(const char* options_json, char** json_out, char** csv_out);
SB_API sb_status sb_population(const char* options_json, char** json_out, char** csv_out);

SB_API void sb_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
