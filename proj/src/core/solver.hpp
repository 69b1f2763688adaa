#pragma once

#include "core/numeric.hpp"

namespace lvggm::solver {

struct SolverConfig {
  double lambda = 0.1;        // elementwise l1 weight on S
  double mu = 0.1;            // nuclear-norm weight on L
  double rho = 1.0;           // augmented-Lagrangian penalty
  int max_iters = 2000;
  double eps_abs = 1e-7;
  double eps_rel = 1e-6;
  bool latent_enabled = true;  // false: graphical-lasso mode, L is pinned to 0
  bool adaptive_rho = false;   // x2 / /2 when one residual dominates 10x

  void validate() const;
};

struct Estimate {
  Mat S_hat;
  Mat L_hat;
  Mat Theta_hat;  // the consensus variable; positive definite by construction
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double first_primal_residual = 0.0;  // residual after the first sweep
  double objective_value = 0.0;
  bool converged = false;
};

// <Sigma_hat, S+L> - logdet(S+L) + lambda * ||S||_1 + mu * ||L||_*.
// Throws if S + L is not positive definite (the objective is +inf there).
double objective(const Mat& Sigma_hat, const Mat& S, const Mat& L,
                 double lambda, double mu);

// argmin_R <Sigma_hat, R> - logdet R + (rho/2) ||R - V||_F^2, closed form:
// eigendecompose rho V - Sigma_hat = Q diag(d) Q^T and map each eigenvalue to
// the positive root of rho x^2 - d x - 1 = 0, so the result is always PD.
// Stationarity: Sigma_hat - R^{-1} + rho (R - V) = 0.
Mat prox_neg_logdet(const Mat& Sigma_hat, const Mat& V, double rho);

// argmin_L tau ||L||_* + (1/2) ||L - V||_F^2 over NSD L; on that cone the
// nuclear norm is -tr(L), so each eigenvalue maps to min(v_i + tau, 0).
Mat prox_nsd_nuclear(const Mat& V, double tau);

// Three-block consensus splitting of the regularized ML program
//   min <Sigma_hat, R> - logdet R + lambda ||S||_1 + mu ||L||_*
//   s.t. R = S + L,  -L PSD
// with closed-form updates for every block. Returns Theta_hat = R.
Estimate lvggm_admm(const Mat& Sigma_hat, const SolverConfig& cfg);

// l1-penalized precision estimation: same scheme with the latent block off.
Estimate glasso(const Mat& Sigma_hat, double lambda, SolverConfig cfg = {});

}  // namespace lvggm::solver
