#include "core/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lvggm::solver {

namespace {

void require_finite(const Mat& M, const char* which) {
  if (!M.allFinite()) {
    throw std::runtime_error(std::string("lvggm_admm: ") + which +
                             " produced non-finite values");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (lambda < 0.0 || mu < 0.0) {
    throw std::invalid_argument("SolverConfig: lambda and mu must be nonnegative");
  }
  if (rho <= 0.0 || eps_abs <= 0.0 || eps_rel <= 0.0) {
    throw std::invalid_argument("SolverConfig: rho and tolerances must be positive");
  }
  if (max_iters < 1) {
    throw std::invalid_argument("SolverConfig: max_iters must be positive");
  }
}

double objective(const Mat& Sigma_hat, const Mat& S, const Mat& L,
                 double lambda, double mu) {
  const Mat Theta = S + L;
  Eigen::LLT<Mat> llt(0.5 * (Theta + Theta.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("objective: S + L is not positive definite");
  }
  double logdet = 0.0;
  const auto& chol = llt.matrixLLT();
  for (int i = 0; i < Theta.rows(); ++i) {
    logdet += 2.0 * std::log(chol(i, i));
  }
  // S and L are symmetric, so the nuclear norm is the absolute eigenvalue sum.
  const double nuclear_L = eigh(L).values.cwiseAbs().sum();
  return (Sigma_hat.cwiseProduct(Theta)).sum() - logdet +
         lambda * matrix_norm(S, NormKind::ElementwiseL1) + mu * nuclear_L;
}

Mat prox_neg_logdet(const Mat& Sigma_hat, const Mat& V, double rho) {
  const int p = static_cast<int>(V.rows());
  const Mat W = rho * V - Sigma_hat;
  EighResult ed = eigh(W);
  Vec rvals(p);
  for (int i = 0; i < p; ++i) {
    const double d = ed.values(i);
    rvals(i) = (d + std::sqrt(d * d + 4.0 * rho)) / (2.0 * rho);
  }
  return ed.vectors * rvals.asDiagonal() * ed.vectors.transpose();
}

Mat prox_nsd_nuclear(const Mat& V, double tau) {
  const int p = static_cast<int>(V.rows());
  EighResult ed = eigh(V);
  Vec lvals(p);
  for (int i = 0; i < p; ++i) {
    lvals(i) = std::min(ed.values(i) + tau, 0.0);
  }
  return ed.vectors * lvals.asDiagonal() * ed.vectors.transpose();
}

Estimate lvggm_admm(const Mat& Sigma_hat, const SolverConfig& cfg) {
  cfg.validate();
  const int p = static_cast<int>(Sigma_hat.rows());
  if (Sigma_hat.cols() != p) {
    throw std::invalid_argument("lvggm_admm: Sigma_hat must be square");
  }
  if (!Sigma_hat.allFinite()) {
    throw std::invalid_argument("lvggm_admm: Sigma_hat has non-finite entries");
  }

  double rho = cfg.rho;
  // Diagonal, PD, cheap: S0 = diag(Sigma_hat + lambda I)^{-1}.
  Mat S = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    S(i, i) = 1.0 / (Sigma_hat(i, i) + cfg.lambda);
  }
  Mat L = Mat::Zero(p, p);
  Mat U = Mat::Zero(p, p);
  Mat R = Mat::Zero(p, p);

  Estimate est;
  Mat SL_prev = S + L;
  double primal = 0.0, dual = 0.0;
  int iter = 0;
  bool converged = false;

  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    // R-update: closed-form prox of the smooth term, PD by construction.
    R = prox_neg_logdet(Sigma_hat, S + L - U, rho);
    require_finite(R, "R-update");

    // S-update: elementwise shrinkage.
    S = soft_threshold(R - L + U, cfg.lambda / rho);
    require_finite(S, "S-update");

    // L-update: eigenvalue clamp onto the negative semidefinite cone.
    // Skipped entirely in graphical-lasso mode.
    if (cfg.latent_enabled) {
      L = prox_nsd_nuclear(R - S + U, cfg.mu / rho);
      require_finite(L, "L-update");
    }

    U += R - S - L;
    require_finite(U, "dual update");

    const Mat SL = S + L;
    primal = (R - SL).norm();
    dual = rho * (SL - SL_prev).norm();
    SL_prev = SL;
    if (iter == 1) est.first_primal_residual = primal;

    const double eps_pri =
        p * cfg.eps_abs + cfg.eps_rel * std::max(R.norm(), SL.norm());
    const double eps_dual = p * cfg.eps_abs + cfg.eps_rel * rho * U.norm();
    if (primal <= eps_pri && dual <= eps_dual) {
      converged = true;
      break;
    }

    if (cfg.adaptive_rho) {
      // Residual balancing; U is the scaled dual, so it shrinks when rho grows.
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        U *= 0.5;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        U *= 2.0;
      }
    }
  }

  est.S_hat = 0.5 * (S + S.transpose());
  est.L_hat = 0.5 * (L + L.transpose());
  est.Theta_hat = 0.5 * (R + R.transpose());
  est.iterations = std::min(iter, cfg.max_iters);
  est.primal_residual = primal;
  est.dual_residual = dual;
  est.converged = converged;
  try {
    est.objective_value = objective(Sigma_hat, est.S_hat, est.L_hat,
                                    cfg.lambda, cfg.latent_enabled ? cfg.mu : 0.0);
  } catch (const std::runtime_error&) {
    // A truncated run can leave S + L outside the PD cone; the objective is
    // +inf there but the best iterate is still returned.
    est.objective_value = std::numeric_limits<double>::infinity();
  }
  return est;
}

Estimate glasso(const Mat& Sigma_hat, double lambda, SolverConfig cfg) {
  cfg.lambda = lambda;
  cfg.latent_enabled = false;
  cfg.mu = 0.0;
  return lvggm_admm(Sigma_hat, cfg);
}

}  // namespace lvggm::solver
