#ifndef SORITES_H
#define SORITES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SoritesStatus {
  SORITES_STATUS_OK = 0,
  SORITES_STATUS_NULL_POINTER = 1,
  SORITES_STATUS_INVALID_UTF8 = 2,
  SORITES_STATUS_INVALID_ARGUMENT = 3,
  SORITES_STATUS_PARSE_ERROR = 4,
  /**
   * A conditional probability needed by a check is undefined.
   */
  SORITES_STATUS_UNDEFINED = 5,
  SORITES_STATUS_PANIC = 6,
} SoritesStatus;

typedef enum SoritesAssumption {
  SORITES_ASSUMPTION_WEAK_SURFACE_AUTONOMY = 0,
  SORITES_ASSUMPTION_SURFACE_LOCALITY = 1,
  SORITES_ASSUMPTION_WEAK_HIDDEN_AUTONOMY = 2,
  SORITES_ASSUMPTION_HIDDEN_AUTONOMY = 3,
  SORITES_ASSUMPTION_PARAMETER_INDEPENDENCE = 4,
  SORITES_ASSUMPTION_OUTCOME_INDEPENDENCE = 5,
  SORITES_ASSUMPTION_IMPROVED_PREDICTIONS = 6,
  /**
   * Against the simplified QM surface.
   */
  SORITES_ASSUMPTION_QM_AGREEMENT = 7,
  SORITES_ASSUMPTION_CONDITIONAL_QM_AGREEMENT = 8,
} SoritesAssumption;

typedef enum SoritesTheorem {
  SORITES_THEOREM_STRONGER = 0,
  SORITES_THEOREM_BELL = 1,
} SoritesTheorem;

typedef enum SoritesConclusion {
  SORITES_CONCLUSION_CONTRADICTION_ESTABLISHED = 0,
  SORITES_CONCLUSION_PREMISE_FAILED = 1,
  SORITES_CONCLUSION_INCONSISTENT = 2,
  SORITES_CONCLUSION_BOUND_EXCEEDED = 3,
} SoritesConclusion;

/**
 * A chain of `N` solid links and one dashed link.
 */
typedef struct SoritesChain SoritesChain;

/**
 * A surface or hidden-variable model read from a model file.
 */
typedef struct SoritesModel SoritesModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *sorites_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void sorites_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum SoritesStatus sorites_chain_new(int64_t n_links, struct SoritesChain **out);

/**
 * # Safety
 * `chain` must be NULL or a handle from [`sorites_chain_new`], not yet freed.
 */
void sorites_chain_free(struct SoritesChain *chain);

/**
 * Number of setting pairs, `N + 1`; 0 for a NULL handle.
 *
 * # Safety
 * `chain` must be NULL or a live handle.
 */
uint32_t sorites_chain_experiment_count(const struct SoritesChain *chain);

/**
 * Angle between neighbouring settings in degrees; NaN for a NULL handle.
 *
 * # Safety
 * `chain` must be NULL or a live handle.
 */
double sorites_chain_delta_theta(const struct SoritesChain *chain);

/**
 * Minimum expected number of broken links over local strategies.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum SoritesStatus sorites_chain_local_floor(const struct SoritesChain *chain, double *out);

/**
 * Expected number of broken links under quantum mechanics.
 *
 * # Safety
 * `chain` must be NULL or a live handle.
 */
double sorites_chain_qm_expected_failures(const struct SoritesChain *chain);

/**
 * # Safety
 * `out` must be writable.
 */
enum SoritesStatus sorites_prob_no_link_broken(int64_t n_links, double *out);

/**
 * Parses a `sorites-model/1` document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum SoritesStatus sorites_model_parse(const char *json, struct SoritesModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from [`sorites_model_parse`], not yet freed.
 */
void sorites_model_free(struct SoritesModel *model);

/**
 * Checks one assumption. A tolerance of 0 compares exactly.
 *
 * # Safety
 * `model` must be a live handle and `holds` writable.
 */
enum SoritesStatus sorites_model_check(const struct SoritesModel *model,
                                       enum SoritesAssumption assumption,
                                       double tolerance,
                                       bool *holds);

/**
 * Runs a theorem pipeline. When `report_json` is not NULL it receives the
 * `sorites-report/1` document, to be freed with [`sorites_string_free`].
 * A surface model is treated as its single-valued hidden-variable lift.
 *
 * # Safety
 * `model` must be a live handle, `conclusion` writable, `report_json`
 * NULL or writable.
 */
enum SoritesStatus sorites_model_run_theorem(const struct SoritesModel *model,
                                             enum SoritesTheorem which,
                                             double tolerance,
                                             enum SoritesConclusion *conclusion,
                                             char **report_json);

/**
 * Samples `trials` runs of the experiment at the given angles (degrees).
 * `counts` receives the outcome counts for (0,0), (0,1), (1,0), (1,1).
 *
 * # Safety
 * `model` must be a live handle and `counts` point to 4 writable values.
 */
enum SoritesStatus sorites_model_sample(const struct SoritesModel *model,
                                        double alice_degrees,
                                        double bob_degrees,
                                        uint64_t trials,
                                        uint64_t seed,
                                        uint64_t *counts);

/**
 * Deterministic GHZ assignments meeting all four correlations, out of
 * `total`.
 *
 * # Safety
 * Both pointers must be writable.
 */
enum SoritesStatus sorites_ghz_enumerate(uint64_t *satisfying, uint64_t *total);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SORITES_H */
