#ifndef FSGD_H
#define FSGD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsgdStatus {
  FSGD_STATUS_OK = 0,
  FSGD_STATUS_NULL_POINTER = 1,
  FSGD_STATUS_INVALID_ARGUMENT = 2,
  FSGD_STATUS_DIMENSION_MISMATCH = 3,
  FSGD_STATUS_DIVERGENCE = 4,
  FSGD_STATUS_PARSE = 5,
  FSGD_STATUS_CHECKPOINT = 6,
  FSGD_STATUS_IO = 7,
  FSGD_STATUS_PANIC = 8,
} FsgdStatus;

// Model coefficients and step counter.
typedef struct FsgdModel FsgdModel;

// A learning-rate and truncation rule.
typedef struct FsgdSchedule FsgdSchedule;

// Sieve-SGD state; predictions use the averaged model.
typedef struct FsgdSieve FsgdSieve;

// Smoothness grid bounds and rate constants for adaptive selection.
typedef struct FsgdLepskiConfig {
  double s0;
  double s1;
  double a;
  double b;
} FsgdLepskiConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *fsgd_last_error(void);

// Library version as a static NUL-terminated string.
const char *fsgd_version(void);

// Value of the `j`-th trigonometric basis function at `x`.
enum FsgdStatus fsgd_basis_eval(size_t j, double x, double *out);

// Sup-norm bound of the basis functions.
double fsgd_basis_bound(void);

enum FsgdStatus fsgd_schedule_fixed_p(double a, double b, double s, struct FsgdSchedule **out);

enum FsgdStatus fsgd_schedule_three_stage(size_t p,
                                          double a1,
                                          double a2,
                                          double b,
                                          double s,
                                          struct FsgdSchedule **out);

enum FsgdStatus fsgd_schedule_polynomial(double a, double s, struct FsgdSchedule **out);

enum FsgdStatus fsgd_schedule_constant(double gamma, size_t trunc, struct FsgdSchedule **out);

// The rule used for the Sieve-SGD comparison runs.
enum FsgdStatus fsgd_schedule_sieve_default(struct FsgdSchedule **out);

// Learning rate and truncation for step `i >= 1`.
enum FsgdStatus fsgd_schedule_at(const struct FsgdSchedule *schedule,
                                 uint64_t i,
                                 double *gamma,
                                 size_t *trunc);

void fsgd_schedule_free(struct FsgdSchedule *schedule);

enum FsgdStatus fsgd_model_new(size_t p, bool include_intercept, struct FsgdModel **out);

enum FsgdStatus fsgd_model_clone(const struct FsgdModel *model, struct FsgdModel **out);

void fsgd_model_free(struct FsgdModel *model);

enum FsgdStatus fsgd_model_dim(const struct FsgdModel *model, size_t *out);

enum FsgdStatus fsgd_model_step_count(const struct FsgdModel *model, uint64_t *out);

// One update with explicit learning rate and truncation. `residual` may be
// null; otherwise it receives `y - f(x)` before the update.
enum FsgdStatus fsgd_model_step(struct FsgdModel *model,
                                const double *x,
                                size_t p,
                                double y,
                                double gamma,
                                size_t trunc,
                                double *residual);

// Feeds `rows` samples (row-major `x`, `rows * p` values) using the schedule
// at the model's current step. Stops at the first failing row, leaving the
// model as it was after the previous row.
enum FsgdStatus fsgd_model_fit(struct FsgdModel *model,
                               const struct FsgdSchedule *schedule,
                               const double *x,
                               const double *y,
                               size_t rows,
                               size_t p);

// One adaptive step; the selected smoothness is written to `chosen_s` when
// it is non-null.
enum FsgdStatus fsgd_model_lepski_step(struct FsgdModel *model,
                                       struct FsgdLepskiConfig cfg,
                                       const double *x,
                                       size_t p,
                                       double y,
                                       double *chosen_s);

enum FsgdStatus fsgd_model_predict(const struct FsgdModel *model,
                                   const double *x,
                                   size_t p,
                                   double *out);

// Predicts `rows` row-major points into `out[0..rows]`.
enum FsgdStatus fsgd_model_predict_batch(const struct FsgdModel *model,
                                         const double *x,
                                         size_t rows,
                                         size_t p,
                                         double *out);

enum FsgdStatus fsgd_model_save(const struct FsgdModel *model, const char *path);

enum FsgdStatus fsgd_model_load(const char *path, struct FsgdModel **out);

enum FsgdStatus fsgd_sieve_new(size_t p,
                               bool include_intercept,
                               double omega,
                               struct FsgdSieve **out);

void fsgd_sieve_free(struct FsgdSieve *sieve);

enum FsgdStatus fsgd_sieve_step(struct FsgdSieve *sieve,
                                const struct FsgdSchedule *schedule,
                                const double *x,
                                size_t p,
                                double y);

enum FsgdStatus fsgd_sieve_predict(const struct FsgdSieve *sieve,
                                   const double *x,
                                   size_t p,
                                   double *out);

// Copies the averaged model into a new model handle.
enum FsgdStatus fsgd_sieve_average(const struct FsgdSieve *sieve, struct FsgdModel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FSGD_H */
