#ifndef ADAM_INFOMAX_H
#define ADAM_INFOMAX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AiAlgorithm {
  AI_ALGORITHM_ADAM = 0,
  AI_ALGORITHM_SGD = 1,
  AI_ALGORITHM_MOMENTUM = 2,
} AiAlgorithm;

typedef enum AiDirection {
  AI_DIRECTION_ASCENT = 0,
  AI_DIRECTION_DESCENT = 1,
} AiDirection;

typedef enum AiGradient {
  AI_GRADIENT_STANDARD = 0,
  AI_GRADIENT_NATURAL = 1,
} AiGradient;

typedef enum AiStatus {
  AI_STATUS_OK = 0,
  AI_STATUS_INVALID_ARGUMENT = 1,
  AI_STATUS_SINGULAR_MATRIX = 2,
  AI_STATUS_DEGENERATE = 3,
  AI_STATUS_DIVERGED = 4,
  AI_STATUS_IO = 5,
  AI_STATUS_PARSE = 6,
  AI_STATUS_NULL_POINTER = 7,
  AI_STATUS_PANIC = 8,
} AiStatus;

typedef enum AiTraceKind {
  /**
   * One entry per block update.
   */
  AI_TRACE_KIND_ITERATIONS = 0,
  /**
   * One entry per epoch: PI at the epoch end, mean gradient norm.
   */
  AI_TRACE_KIND_EPOCHS = 1,
} AiTraceKind;

/**
 * Adam moment state. Opaque to C.
 */
typedef struct AiAdam AiAdam;

/**
 * Outcome of [`ai_separate`]. Opaque to C.
 */
typedef struct AiResult AiResult;

typedef struct AiAdamHyper {
  double eta;
  double beta1;
  double beta2;
  double epsilon;
} AiAdamHyper;

typedef struct AiRunConfig {
  enum AiAlgorithm algorithm;
  enum AiGradient gradient;
  size_t block_size;
  size_t epochs;
  struct AiAdamHyper adam;
  double mu;
  double alpha;
  uint64_t seed;
} AiRunConfig;

/**
 * `pi` and `grad_norm` are NaN when absent.
 */
typedef struct AiTraceEntry {
  uint64_t iteration;
  uint64_t epoch;
  double pi;
  double grad_norm;
} AiTraceEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *ai_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ai_version(void);

/**
 * Defaults: Adam, natural gradient, B = 30, 100 epochs, η = 0.001,
 * β1 = 0.9, β2 = 0.999, ε = 1e-8, μ = 0.001, α = 0.5, seed 0.
 */
struct AiRunConfig ai_run_config_default(void);

/**
 * Per-experiment defaults. `experiment` is 1, 2 or 3.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `AiRunConfig`.
 */
enum AiStatus ai_run_config_for_experiment(uint32_t experiment,
                                           enum AiAlgorithm algorithm,
                                           uint64_t seed,
                                           struct AiRunConfig *out);

/**
 * Runs the separator on `channels × samples` mixtures `x`.
 *
 * `w0` (`channels × channels`) may be null for the identity start.
 * `mixing` (`channels × channels`) may be null; when given, the trace
 * carries the performance index at every epoch end. On success `*out`
 * owns a result that must be released with [`ai_result_free`].
 *
 * # Safety
 * Non-null pointers must reference arrays of the stated sizes; `config`
 * and `out` must be valid.
 */
enum AiStatus ai_separate(const double *x,
                          size_t channels,
                          size_t samples,
                          const struct AiRunConfig *config,
                          const double *w0,
                          const double *mixing,
                          struct AiResult **out);

/**
 * Number of channels `N`; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle from [`ai_separate`].
 */
size_t ai_result_channels(const struct AiResult *result);

/**
 * Samples per separated channel; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle from [`ai_separate`].
 */
size_t ai_result_samples(const struct AiResult *result);

/**
 * Copies the final `N×N` separating matrix (row-major); `len` must be `N*N`.
 *
 * # Safety
 * `result` must be a live handle; `out` must hold `len` doubles.
 */
enum AiStatus ai_result_w(const struct AiResult *result, double *out, size_t len);

/**
 * Copies the `N×samples` separated signals (row-major).
 *
 * # Safety
 * `result` must be a live handle; `out` must hold `len` doubles.
 */
enum AiStatus ai_result_separated(const struct AiResult *result, double *out, size_t len);

/**
 * Entries in the chosen trace; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle from [`ai_separate`].
 */
size_t ai_result_trace_len(const struct AiResult *result, enum AiTraceKind kind);

/**
 * Reads trace entry `index` of the chosen trace.
 *
 * # Safety
 * `result` must be a live handle; `out` must be valid for one entry.
 */
enum AiStatus ai_result_trace_entry(const struct AiResult *result,
                                    enum AiTraceKind kind,
                                    size_t index,
                                    struct AiTraceEntry *out);

/**
 * Releases a result. Null is ignored.
 *
 * # Safety
 * `result` must be null or a handle from [`ai_separate`] not yet freed.
 */
void ai_result_free(struct AiResult *result);

/**
 * Amari performance index of `Q = W·A` for `n×n` row-major `w` and `a`.
 *
 * # Safety
 * `w` and `a` must hold `n*n` doubles; `out` must be valid.
 */
enum AiStatus ai_amari_pi(const double *w, const double *a, size_t n, double *out);

/**
 * Writes the `n×n` Hilbert matrix; `len` must be `n*n`.
 *
 * # Safety
 * `out` must hold `len` doubles.
 */
enum AiStatus ai_hilbert(size_t n, double *out, size_t len);

/**
 * Entropy gradient for one `n×b` block `x` at `w`; writes `n×n` to `out`.
 *
 * # Safety
 * `w` must hold `n*n`, `x` `n*b` and `out` `n*n` doubles.
 */
enum AiStatus ai_gradient(const double *w,
                          const double *x,
                          size_t n,
                          size_t b,
                          enum AiGradient variant,
                          double *out);

/**
 * Adam defaults: η = 0.001, β1 = 0.9, β2 = 0.999, ε = 1e-8.
 */
struct AiAdamHyper ai_adam_hyper_default(void);

/**
 * Creates Adam state for `dim` parameters; release with [`ai_adam_free`].
 *
 * # Safety
 * `hyper` and `out` must be valid.
 */
enum AiStatus ai_adam_new(size_t dim, const struct AiAdamHyper *hyper, struct AiAdam **out);

/**
 * One Adam step on gradient `g`; writes the additive update to `update`.
 * The state is unchanged when the call fails.
 *
 * # Safety
 * `adam` must be a live handle; `g` and `update` must hold `dim` doubles.
 */
enum AiStatus ai_adam_step(struct AiAdam *adam,
                           const double *g,
                           size_t dim,
                           enum AiDirection direction,
                           double *update);

/**
 * Steps taken so far; 0 for a null handle.
 *
 * # Safety
 * `adam` must be null or a live handle.
 */
uint64_t ai_adam_steps(const struct AiAdam *adam);

/**
 * Releases Adam state. Null is ignored.
 *
 * # Safety
 * `adam` must be null or a handle from [`ai_adam_new`] not yet freed.
 */
void ai_adam_free(struct AiAdam *adam);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADAM_INFOMAX_H */
