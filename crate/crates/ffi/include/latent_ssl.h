#ifndef LATENT_SSL_H
#define LATENT_SSL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  LSS_STATUS_OK = 0,
  LSS_STATUS_NULL_POINTER = 1,
  LSS_STATUS_INVALID_ARGUMENT = 2,
  LSS_STATUS_DOMAIN = 3,
  LSS_STATUS_PRECONDITION = 4,
  LSS_STATUS_UNSUPPORTED = 5,
  LSS_STATUS_NON_CONVERGENCE = 6,
  LSS_STATUS_NOT_POSITIVE_DEFINITE = 7,
  LSS_STATUS_BOUNDARY_LEAK = 8,
  LSS_STATUS_ENUMERATION_TOO_LARGE = 9,
  LSS_STATUS_CONFIG = 10,
  LSS_STATUS_IO = 11,
  LSS_STATUS_INTERNAL = 12,
  LSS_STATUS_PANIC = 13,
} LssStatus;

// Which information matrix [`lss_fisher_matrix`] copies out.
typedef enum {
  // `I_y|x`, 2x2 in the reduced parameters.
  LSS_FISHER_KIND_Y_GIVEN_X = 0,
  // `I_xy`, 3x3.
  LSS_FISHER_KIND_XY = 1,
  // `I_x`, 3x3.
  LSS_FISHER_KIND_X = 2,
  // `I_xy - I_x`, 3x3.
  LSS_FISHER_KIND_CONDITIONAL = 3,
} LssFisherKind;

typedef enum {
  LSS_MODEL_MODEL1 = 0,
  LSS_MODEL_MODEL2 = 1,
  LSS_MODEL_MODEL3 = 2,
  LSS_MODEL_NO_LABEL = 3,
} LssModel;

// Opaque dataset.
typedef struct LssDataset LssDataset;

// Opaque Fisher-information set.
typedef struct LssFisher LssFisher;

// Opaque grid posterior.
typedef struct LssPosterior LssPosterior;

// Prior hyperparameters; `concentration` is the Dirichlet pair.
typedef struct {
  double concentration[2];
  double mean_location;
  double mean_scale;
  double reduced_scale;
  bool ordered_means;
} LssPrior;

// Two-component scalar mixture `(a1; b1, b2; sigma)`.
typedef struct {
  double a1;
  double b1;
  double b2;
  double sigma;
} LssMixture;

typedef struct {
  double alpha;
  double c1;
  double c2;
  double c3;
  double c_nl;
} LssCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL terminated,
// truncated to `len` bytes). Returns the full message length, or 0 when
// there is no error.
//
// # Safety
// `buf` must be null or valid for `len` writable bytes.
uintptr_t lss_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *lss_version(void);

// The prior used when none is given.
LssPrior lss_prior_default(void);

// Reduced parameters `(c1, c2)` of a mixture with `sigma = 1`.
//
// # Safety
// `w`, `c1` and `c2` must be valid pointers.
LssStatus lss_reduce_params(const LssMixture *w, double *c1, double *c2);

// Fisher matrices at `truth` with the default quadrature.
//
// # Safety
// `truth` and `out` must be valid pointers; `*out` receives a handle to free
// with [`lss_fisher_free`].
LssStatus lss_fisher_new(const LssMixture *truth, LssFisher **out);

// # Safety
// `h` must be null or a handle from [`lss_fisher_new`] not yet freed.
void lss_fisher_free(LssFisher *h);

// Copies one information matrix, row-major, into `out` (capacity `len`
// doubles) and its dimension into `dim`.
//
// # Safety
// `h` must be a live handle, `out` valid for `len` doubles, `dim` valid.
LssStatus lss_fisher_matrix(const LssFisher *h,
                            LssFisherKind kind,
                            double *out,
                            uintptr_t len,
                            uintptr_t *dim);

// Dominant-term coefficients at `alpha`.
//
// # Safety
// `h` must be a live handle and `out` valid.
LssStatus lss_coefficients(const LssFisher *h, double alpha, LssCoefficients *out);

// Samples `n` points from `truth`, the first `alpha * n` of them labeled.
//
// # Safety
// `truth` and `out` must be valid; free the handle with [`lss_dataset_free`].
LssStatus lss_dataset_sample(const LssMixture *truth,
                             uintptr_t n,
                             double alpha,
                             uint64_t seed,
                             LssDataset **out);

// # Safety
// `h` must be null or a live dataset handle.
void lss_dataset_free(LssDataset *h);

// Labeled and unlabeled counts.
//
// # Safety
// `h`, `labeled` and `unlabeled` must be valid.
LssStatus lss_dataset_counts(const LssDataset *h, uintptr_t *labeled, uintptr_t *unlabeled);

// Grid posterior of `model` on the compact grid.
//
// # Safety
// `data`, `prior` and `out` must be valid; free with [`lss_posterior_free`].
LssStatus lss_grid_posterior(const LssDataset *data,
                             LssModel model,
                             const LssPrior *prior,
                             LssPosterior **out);

// # Safety
// `h` must be null or a live posterior handle.
void lss_posterior_free(LssPosterior *h);

// Log marginal likelihood on the grid.
//
// # Safety
// `h` and `out` must be valid.
LssStatus lss_posterior_log_normalizer(const LssPosterior *h, double *out);

// Exact per-label KL error of the posterior's predictor on `data`, whose
// hidden labels must not exceed the enumeration limit.
//
// # Safety
// All pointers must be valid; `post` must come from the same dataset.
LssStatus lss_kl_error_exact(const LssDataset *data,
                             const LssPosterior *post,
                             const LssMixture *truth,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LATENT_SSL_H */
