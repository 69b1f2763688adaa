/*
 * Public C interface for the lvggm library: estimation of latent-variable
 * Gaussian graphical models with sparse-plus-low-rank precision structure,
 * synthetic model generation, theory diagnostics, and Monte-Carlo studies.
 *
 * All functions return lvggm_status (LVGGM_OK on success) unless they are
 * trivial accessors; on failure, lvggm_last_error() holds a thread-local
 * human-readable message. Objects returned through out-parameters are owned
 * by the caller and released with the matching *_free function.
 */
#ifndef LVGGM_H
#define LVGGM_H

#include <stdint.h>

#if defined(_WIN32)
#  define LVGGM_API __declspec(dllexport)
#else
#  define LVGGM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lvggm_status {
  LVGGM_OK = 0,
  LVGGM_ERR_INVALID_ARG = 1, /* bad input / precondition violated */
  LVGGM_ERR_NUMERIC = 2,     /* numerical failure (not PD, no convergence, ...) */
  LVGGM_ERR_IO = 3,          /* file missing, malformed, or unwritable */
  LVGGM_ERR_UNATTAINABLE = 4 /* requested target outside the feasible range */
} lvggm_status;

/* Library version, "major.minor.patch". */
LVGGM_API const char* lvggm_version(void);

/* Thread-local message describing the most recent failure in this thread. */
LVGGM_API const char* lvggm_last_error(void);

/* ------------------------------------------------------------- matrices */

typedef struct lvggm_mat lvggm_mat;

/* data may be NULL (zero-initialized); otherwise column-major rows*cols. */
LVGGM_API lvggm_status lvggm_mat_create(int rows, int cols, const double* data,
                                        lvggm_mat** out);
LVGGM_API lvggm_status lvggm_mat_read_csv(const char* path, lvggm_mat** out);
LVGGM_API lvggm_status lvggm_mat_write_csv(const lvggm_mat* m, const char* path);
LVGGM_API int lvggm_mat_rows(const lvggm_mat* m);
LVGGM_API int lvggm_mat_cols(const lvggm_mat* m);
LVGGM_API double lvggm_mat_get(const lvggm_mat* m, int i, int j);
/* Column-major contiguous storage, rows*cols doubles. */
LVGGM_API const double* lvggm_mat_data(const lvggm_mat* m);
LVGGM_API void lvggm_mat_free(lvggm_mat* m);

/* Sample covariance (1/n) X X^T of a p x n column-sample matrix; center
 * subtracts empirical row means first. */
LVGGM_API lvggm_status lvggm_cov_from_data(const lvggm_mat* X, int center,
                                           lvggm_mat** out);
LVGGM_API lvggm_status lvggm_effective_rank(const lvggm_mat* m, double* out);

typedef enum lvggm_norm_kind {
  LVGGM_NORM_ELEMENTWISE_MAX = 0,
  LVGGM_NORM_SPECTRAL = 1,
  LVGGM_NORM_FROBENIUS = 2,
  LVGGM_NORM_NUCLEAR = 3,
  LVGGM_NORM_ELEMENTWISE_L1 = 4
} lvggm_norm_kind;

LVGGM_API lvggm_status lvggm_matrix_norm(const lvggm_mat* m,
                                         lvggm_norm_kind kind, double* out);

/* ------------------------------------------------------ synthetic models */

typedef struct lvggm_model lvggm_model;

typedef enum lvggm_model_part {
  LVGGM_PART_S_STAR = 0,     /* conditional precision of the observed block */
  LVGGM_PART_L_STAR = 1,     /* negative semidefinite low-rank term */
  LVGGM_PART_THETA_STAR = 2, /* marginal precision S* + L* */
  LVGGM_PART_SIGMA_STAR = 3, /* marginal covariance */
  LVGGM_PART_JOINT = 4       /* full (p+r) x (p+r) joint precision */
} lvggm_model_part;

/* Chain conditional graph (tridiagonal, off-diagonals 0.4 * diag) with r
 * latent variables coupled by dense entries latent_scale * U[-1,1]; the
 * coupling is shrunk if needed to keep a 0.05 PD margin on the joint. */
LVGGM_API lvggm_status lvggm_model_chain(int p, double diag, int r,
                                         double latent_scale, uint64_t seed,
                                         lvggm_model** out);

/* Random sparse conditional graph: each off-diagonal pair is nonzero with
 * probability `density`, magnitudes in [0.1, 0.5], diagonally dominant. */
LVGGM_API lvggm_status lvggm_model_random(int p, double density, int r,
                                          double latent_scale, uint64_t seed,
                                          lvggm_model** out);

/* Wraps an externally supplied joint precision matrix (first p_observed
 * rows/columns observed, the rest latent) and marginalizes it. */
LVGGM_API lvggm_status lvggm_model_from_joint(const lvggm_mat* J,
                                              int p_observed,
                                              lvggm_model** out);

/* Rescales the latent coupling so tr(G)/tr(S*^{-1}) hits `target` (bisection,
 * <= 60 iterations, 1e-6 relative tolerance). LVGGM_ERR_UNATTAINABLE with the
 * achievable range in lvggm_last_error() if the target is out of reach. */
LVGGM_API lvggm_status lvggm_model_set_energy_ratio(lvggm_model* m,
                                                    double target);

LVGGM_API lvggm_status lvggm_model_part_matrix(const lvggm_model* m,
                                               lvggm_model_part part,
                                               lvggm_mat** out);
LVGGM_API lvggm_status lvggm_model_energy_ratio(const lvggm_model* m,
                                                double* out);
/* Any out-pointer may be NULL. support_size counts ordered off-diagonal
 * nonzero pairs of S*; coupling_factor is the factor actually applied to the
 * drawn latent coupling (margin cap and/or ratio scaling). */
LVGGM_API lvggm_status lvggm_model_info(const lvggm_model* m, int* p, int* r,
                                        int* support_size, int* rank,
                                        double* coupling_factor);
/* Draws n samples X = C Z (C = chol(Sigma*), Z standard normal), p x n. */
LVGGM_API lvggm_status lvggm_model_sample(const lvggm_model* m, int n,
                                          uint64_t seed, lvggm_mat** out);
LVGGM_API void lvggm_model_free(lvggm_model* m);

/* ---------------------------------------------------------------- solver */

typedef struct lvggm_solver_opts {
  double lambda;      /* elementwise l1 weight on S */
  double mu;          /* nuclear-norm weight on L */
  double rho;         /* augmented-Lagrangian penalty, default 1.0 */
  int max_iters;      /* default 2000 */
  double eps_abs;     /* default 1e-7 */
  double eps_rel;     /* default 1e-6 */
  int latent_enabled; /* 0: graphical-lasso mode (L pinned to 0), default 1 */
  int adaptive_rho;   /* 0/1, default 0 */
} lvggm_solver_opts;

LVGGM_API void lvggm_solver_opts_init(lvggm_solver_opts* opts);

typedef struct lvggm_estimate lvggm_estimate;

typedef enum lvggm_estimate_part {
  LVGGM_PART_S_HAT = 0,
  LVGGM_PART_L_HAT = 1,
  LVGGM_PART_THETA_HAT = 2
} lvggm_estimate_part;

/* Three-block consensus splitting of
 *   min <Sigma_hat, R> - logdet R + lambda ||S||_1 + mu ||L||_*
 *   s.t. R = S + L, -L PSD
 * with closed-form updates. Theta_hat is PD by construction. Non-convergence
 * within max_iters is NOT an error: the best iterate is returned with
 * converged = 0. */
LVGGM_API lvggm_status lvggm_estimate_run(const lvggm_mat* sigma_hat,
                                          const lvggm_solver_opts* opts,
                                          lvggm_estimate** out);

LVGGM_API lvggm_status lvggm_estimate_part_matrix(const lvggm_estimate* e,
                                                  lvggm_estimate_part part,
                                                  lvggm_mat** out);
/* Any out-pointer may be NULL. */
LVGGM_API lvggm_status lvggm_estimate_stats(const lvggm_estimate* e,
                                            int* iterations,
                                            double* primal_residual,
                                            double* dual_residual,
                                            double* objective,
                                            int* converged);
LVGGM_API void lvggm_estimate_free(lvggm_estimate* e);

/* Objective value <Sigma_hat, S+L> - logdet(S+L) + lambda||S||_1 + mu||L||_*;
 * LVGGM_ERR_NUMERIC if S + L is not positive definite. */
LVGGM_API lvggm_status lvggm_objective(const lvggm_mat* sigma_hat,
                                       const lvggm_mat* S, const lvggm_mat* L,
                                       double lambda, double mu, double* out);

/* ------------------------------------------------------------ diagnostics */

typedef enum lvggm_schedule_regime {
  LVGGM_SCHEDULE_DIMENSION = 0,     /* lambda = 160 C1 sb sqrt(ln p/n), mu = 16 C2 rho sqrt(p/n) */
  LVGGM_SCHEDULE_EFFRANK = 1,     /* mu = C4 rho sqrt(r_eff ln p / n) */
  LVGGM_SCHEDULE_PRACTICAL = 2 /* lambda = Ca sb sqrt(ln p/n), mu = Cb rho sqrt(r_eff ln p/n) */
} lvggm_schedule_regime;

typedef struct lvggm_schedule_constants {
  double C1, C2, C4; /* theory constants, default 1 */
  double Ca, Cb;     /* practical constants, defaults 0.5 and 1.0 */
} lvggm_schedule_constants;

LVGGM_API void lvggm_schedule_constants_init(lvggm_schedule_constants* c);

/* sigma may be the true or the sample covariance; sigma_bar = max diagonal,
 * rho = spectral norm, r_eff = tr/||.||_2 of the same matrix. */
LVGGM_API lvggm_status lvggm_select_regularization(
    const lvggm_mat* sigma, int n, lvggm_schedule_regime regime,
    const lvggm_schedule_constants* constants, double* lambda_out,
    double* mu_out);

typedef struct lvggm_diag_report {
  double sigma_bar;       /* max diagonal of Sigma* */
  double rho_star;        /* spectral norm of Sigma* */
  double r_eff;           /* effective rank of Sigma* */
  double rfe_lower_bound; /* lambda_min(Theta*)^2 */
  /* max singular values of P_a F* P_b, order:
   * (E,U), (E-perp,U), (E,U-perp), (E-perp,U-perp); valid iff sfi_computed. */
  double sfi[4];
  double Lambda;        /* 2 + 3 max{lam sqrt(s)/(mu sqrt(r)), inverse} */
  double sfi_threshold; /* kappa_min / (c1 Lambda^2), c1 = 16M/(M-6) */
  double error_bound;   /* (6/kappa_L) max{lam sqrt(s), mu sqrt(r)} */
  double lambda;        /* the weights the report was evaluated at */
  double mu;
  int support_size; /* s = |E|, ordered off-diagonal pairs */
  int rank;         /* r = rank of the low-rank term */
  int sfi_computed; /* 0 when p > 64 (operator norms are skipped) */
  int sfi_defined;  /* Lambda/threshold defined (s > 0 and r > 0) */
  int sfi_satisfied;
} lvggm_diag_report;

/* Theory diagnostics for a ground-truth pair (S*, L*): spectra of Sigma*,
 * the trivial restricted-eigenvalue bound, structured-incoherence singular
 * values, and the error-bound evaluation at (lambda, mu). M_const is the
 * burn-in constant (> 6; 7 is customary). */
LVGGM_API lvggm_status lvggm_diagnose(const lvggm_mat* S_star,
                                      const lvggm_mat* L_star, double lambda,
                                      double mu, double M_const,
                                      lvggm_diag_report* out);

/* Monte-Carlo check of the concentration schedule: fraction of `trials`
 * sample sets whose covariance deviation stays within lambda/2 (elementwise)
 * and mu/2 (spectral) under the dimension-scaled schedule with constants
 * C1, C2. */
LVGGM_API lvggm_status lvggm_deviation_check(const lvggm_mat* sigma_star,
                                             int n, int trials, uint64_t seed,
                                             double C1, double C2,
                                             double* rate_elementwise,
                                             double* rate_spectral);

/* ------------------------------------------------------------ experiments */

typedef enum lvggm_experiment_kind {
  LVGGM_EXPERIMENT_EFFRANK = 0, /* effective rank vs energy ratio */
  LVGGM_EXPERIMENT_SCALING = 1  /* Frobenius error vs rescaled sample size */
} lvggm_experiment_kind;

/* Runs a study from a flat key=value config file and writes the records CSV
 * (schema: study,p,r,n,ratio,rescaled_n,metric,converged,seed,wall_time_ms).
 * seed_override, when nonzero via has_seed_override, replaces base_seed.
 * record_count may be NULL. */
LVGGM_API lvggm_status lvggm_experiment_run(lvggm_experiment_kind kind,
                                            const char* config_path,
                                            const char* output_csv,
                                            int has_seed_override,
                                            uint64_t seed_override,
                                            int* record_count);

/* Coarse 5x5 log-grid search around the config's (Ca, Cb) minimizing mean
 * error on a held-out seed set; tune_reps repetitions per grid point. */
LVGGM_API lvggm_status lvggm_experiment_tune(const char* config_path,
                                             int tune_reps,
                                             int has_seed_override,
                                             uint64_t seed_override,
                                             double* Ca_out, double* Cb_out,
                                             double* mean_error_out);

/* OLS slope of log(metric) on log(rescaled_n) over converged records. */
LVGGM_API lvggm_status lvggm_fit_loglog(const char* records_csv,
                                        double* slope, double* intercept,
                                        double* residual, int* used);

/* Renders a records CSV as a standalone SVG scatter (plus a sibling .dat
 * file). x_field/y_field: "ratio", "rescaled_n", "metric", or "n". Points
 * out-parameters may be NULL. */
LVGGM_API lvggm_status lvggm_plot(const char* records_csv,
                                  const char* x_field, const char* y_field,
                                  int log_axes, int with_fit,
                                  const char* svg_path, int* points,
                                  int* excluded);

/* 64-bit FNV-1a digest of the canonicalized (whitespace- and comment-
 * insensitive) form of a key=value config text. */
LVGGM_API uint64_t lvggm_config_digest(const char* text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LVGGM_H */
