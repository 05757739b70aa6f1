#ifndef RELDEV_H
#define RELDEV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ReldevStatus {
  RELDEV_STATUS_OK = 0,
  RELDEV_STATUS_DOMAIN = 1,
  RELDEV_STATUS_BUDGET = 2,
  RELDEV_STATUS_DIVERGENT = 3,
  RELDEV_STATUS_DENOMINATOR_ZERO = 4,
  RELDEV_STATUS_VALIDATION = 5,
  RELDEV_STATUS_PARSE = 6,
  RELDEV_STATUS_IO = 7,
  RELDEV_STATUS_NULL_POINTER = 8,
  RELDEV_STATUS_INVALID_UTF8 = 9,
  RELDEV_STATUS_OUT_OF_RANGE = 10,
  RELDEV_STATUS_PANIC = 11,
} ReldevStatus;

/*
 Verdict codes in [`ReldevRow::verdict`].
 */
typedef enum ReldevVerdict {
  RELDEV_VERDICT_PASS = 0,
  RELDEV_VERDICT_INCONCLUSIVE = 1,
  RELDEV_VERDICT_VACUOUS = 2,
  RELDEV_VERDICT_FAIL = 3,
} ReldevVerdict;

/*
 Opaque Monte Carlo report.
 */
typedef struct ReldevReport ReldevReport;

/*
 Opaque hypothesis class over a finite domain.
 */
typedef struct ReldevTable ReldevTable;

/*
 One ε row of an experiment report.
 */
typedef struct ReldevRow {
  double epsilon;
  double threshold;
  uint64_t exceedance_count;
  uint64_t trials;
  double frequency;
  double ci_lower;
  double ci_upper;
  double rhs;
  int32_t verdict;
} ReldevRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next failing call on the same thread.
 */
const char *reldev_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *reldev_version(void);

/*
 Releases a string returned by this library. NULL is a no-op.

 # Safety
 `s` must come from this library and not have been freed.
 */
void reldev_string_free(char *s);

/*
 Evaluates bound `id` on a JSON request (NULL or "" means all defaults) and
 writes the headline value: the clipped probability for probability
 bounds, the value otherwise. `out_vacuous` may be NULL.

 # Safety
 String arguments must be NUL-terminated; `out_value` must be writable.
 */
enum ReldevStatus reldev_bound_evaluate(const char *id,
                                        const char *request_json,
                                        double *out_value,
                                        bool *out_vacuous);

/*
 Like [`reldev_bound_evaluate`] but returns the full JSON output.

 # Safety
 String arguments must be NUL-terminated; `out_json` must be writable.
 */
enum ReldevStatus reldev_bound_evaluate_json(const char *id,
                                             const char *request_json,
                                             char **out_json);

/*
 `Pr[X >= mp]` for `X ~ Binomial(m, p)`.

 # Safety
 `out` must be writable.
 */
enum ReldevStatus reldev_binomial_tail_geq_mean(uint64_t m, double p, double *out);

/*
 `Pr[X <= mp]` for `X ~ Binomial(m, p)`.

 # Safety
 `out` must be writable.
 */
enum ReldevStatus reldev_binomial_tail_leq_mean(uint64_t m, double p, double *out);

/*
 `Pr[X = k]` for `X ~ Binomial(m, p)`.

 # Safety
 `out` must be writable.
 */
enum ReldevStatus reldev_binomial_pmf(uint64_t m, double p, uint64_t k, double *out);

/*
 Builds a class from a row-major `rows x domain_size` label matrix
 (nonzero byte = label 1). Duplicate rows are merged.

 # Safety
 `labels` must point to `rows * domain_size` readable bytes.
 */
enum ReldevStatus reldev_table_new(const uint8_t *labels,
                                   size_t rows,
                                   size_t domain_size,
                                   struct ReldevTable **out);

/*
 The threshold class `x >= t`, `t = 0..=n`, on `n` points.

 # Safety
 `out` must be writable.
 */
enum ReldevStatus reldev_table_thresholds(size_t n, struct ReldevTable **out);

/*
 Loads a hypothesis table CSV.

 # Safety
 `path` must be NUL-terminated; `out` must be writable.
 */
enum ReldevStatus reldev_table_load_csv(const char *path, struct ReldevTable **out);

/*
 # Safety
 `table` must come from this library and not have been freed. NULL is a no-op.
 */
void reldev_table_free(struct ReldevTable *table);

/*
 Number of distinct hypotheses.

 # Safety
 `table` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_table_len(const struct ReldevTable *table, size_t *out);

/*
 Growth function at `m` under the default enumeration budget.

 # Safety
 `table` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_table_growth(const struct ReldevTable *table, size_t m, uint64_t *out);

/*
 VC-dimension under the default enumeration budget.

 # Safety
 `table` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_table_vc_dimension(const struct ReldevTable *table, size_t *out);

/*
 Distinct labelings induced on the `len` domain points in `sample`.

 # Safety
 `table` must be a live handle; `sample` must hold `len` readable entries.
 */
enum ReldevStatus reldev_table_shatter(const struct ReldevTable *table,
                                       const size_t *sample,
                                       size_t len,
                                       uint64_t *out);

/*
 Validates and runs an experiment given as JSON.

 # Safety
 `config_json` must be NUL-terminated; `out` must be writable.
 */
enum ReldevStatus reldev_experiment_run(const char *config_json, struct ReldevReport **out);

/*
 # Safety
 `report` must come from this library and not have been freed. NULL is a no-op.
 */
void reldev_report_free(struct ReldevReport *report);

/*
 Number of ε rows.

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_report_row_count(const struct ReldevReport *report, size_t *out);

/*
 Copies row `index` into `out`.

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_report_row(const struct ReldevReport *report,
                                    size_t index,
                                    struct ReldevRow *out);

/*
 Whether any row has a fail verdict.

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum ReldevStatus reldev_report_has_failure(const struct ReldevReport *report, bool *out);

/*
 The report as JSON (17-digit floats).

 # Safety
 `report` must be a live handle; `out_json` must be writable.
 */
enum ReldevStatus reldev_report_to_json(const struct ReldevReport *report, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELDEV_H */
