#include "core/models.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace lvggm::models {

namespace {

double min_eigenvalue(const Mat& M) {
  return eigh(M).values(0);
}

// Largest generalized eigenvalue of (M0, J_LL), i.e. of J_LL^{-1/2} M0
// J_LL^{-1/2}. Governs how far the latent coupling can be scaled before the
// Schur complement J_LL - s^2 M0 loses positive definiteness.
double coupling_limit_eig(const Mat& M0, const Mat& J_LL) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(
      0.5 * (M0 + M0.transpose()), 0.5 * (J_LL + J_LL.transpose()));
  if (ges.info() != Eigen::Success) {
    throw std::runtime_error("scale_to_energy_ratio: generalized eigensolve failed");
  }
  return ges.eigenvalues().maxCoeff();
}

JointModel with_coupling_scaled(const JointModel& jm, double s) {
  JointModel out = jm;
  out.J.topRightCorner(jm.p, jm.r) *= s;
  out.J.bottomLeftCorner(jm.r, jm.p) *= s;
  out.coupling_factor = jm.coupling_factor * s;
  return out;
}

}  // namespace

void JointModel::validate() const {
  if (p < 1 || r < 0) {
    throw std::invalid_argument("JointModel: need p >= 1 and r >= 0");
  }
  if (J.rows() != p + r || J.cols() != p + r) {
    throw std::invalid_argument("JointModel: J must be (p+r) x (p+r)");
  }
  if (!J.allFinite()) {
    throw std::invalid_argument("JointModel: J has non-finite entries");
  }
  if ((J - J.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, J.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("JointModel: J is not symmetric");
  }
  if (min_eigenvalue(J) <= 0.0) {
    throw std::invalid_argument("JointModel: J is not positive definite");
  }
}

void MarginalModel::validate() const {
  const int p = static_cast<int>(S_star.rows());
  if (Theta_star.rows() != p || Sigma_star.rows() != p || L_star.rows() != p) {
    throw std::invalid_argument("MarginalModel: inconsistent dimensions");
  }
  if ((Theta_star - S_star - L_star).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("MarginalModel: Theta_star != S_star + L_star");
  }
  const double inv_err = (Sigma_star * Theta_star - Mat::Identity(p, p)).norm();
  if (inv_err > 1e-8 * std::sqrt(static_cast<double>(p))) {
    throw std::invalid_argument("MarginalModel: Sigma_star is not the inverse of Theta_star");
  }
  const Vec ev = eigh(L_star).values;
  if (ev.maxCoeff() > 1e-10) {
    throw std::invalid_argument("MarginalModel: L_star must be negative semidefinite");
  }
  if (min_eigenvalue(Theta_star) <= 0.0) {
    throw std::invalid_argument("MarginalModel: Theta_star is not positive definite");
  }
}

Mat chain_precision(int p, double diag) {
  if (p < 2) {
    throw std::invalid_argument("chain_precision: p must be >= 2");
  }
  if (diag <= 0.0) {
    throw std::invalid_argument("chain_precision: diag must be positive");
  }
  Mat S = Mat::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    S(i, i) = diag;
    if (i + 1 < p) {
      S(i, i + 1) = 0.4 * diag;
      S(i + 1, i) = 0.4 * diag;
    }
  }
  return S;
}

std::pair<Mat, SupportSet> random_sparse_precision(int p, double density,
                                                   std::uint64_t seed) {
  if (p < 1) {
    throw std::invalid_argument("random_sparse_precision: p must be >= 1");
  }
  if (density < 0.0 || density > 1.0) {
    throw std::invalid_argument("random_sparse_precision: density must be in [0, 1]");
  }
  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(0.1, 0.5);

  Mat S = Mat::Zero(p, p);
  SupportSet support;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (unit(engine) < density) {
        double value = magnitude(engine);
        if (unit(engine) < 0.5) value = -value;
        S(i, j) = value;
        S(j, i) = value;
        support.emplace_back(i, j);
        support.emplace_back(j, i);
      }
    }
  }
  for (int i = 0; i < p; ++i) {
    S(i, i) = S.row(i).cwiseAbs().sum() + 0.5;
  }
  return {S, support};
}

JointModel assemble_joint(const Mat& S_OO, int r, double latent_scale,
                          std::uint64_t seed) {
  const int p = static_cast<int>(S_OO.rows());
  if (S_OO.cols() != p) {
    throw std::invalid_argument("assemble_joint: S_OO must be square");
  }
  if (r < 0) {
    throw std::invalid_argument("assemble_joint: r must be nonnegative");
  }
  if (latent_scale <= 0.0) {
    throw std::invalid_argument("assemble_joint: latent_scale must be positive");
  }
  Eigen::LLT<Mat> llt(0.5 * (S_OO + S_OO.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("assemble_joint: S_OO is not positive definite");
  }

  JointModel jm;
  jm.p = p;
  jm.r = r;
  jm.J = Mat::Zero(p + r, p + r);
  jm.J.topLeftCorner(p, p) = S_OO;
  if (r == 0) {
    jm.validate();
    return jm;
  }

  auto engine = make_engine(seed);
  std::uniform_real_distribution<double> coupling(-1.0, 1.0);
  Mat J_OL(p, r);
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < p; ++i) {
      J_OL(i, j) = latent_scale * coupling(engine);
    }
  }

  // Shur complement with J_LL = I is I - M0 where M0 = J_LO S_OO^{-1} J_OL.
  // Keep its smallest eigenvalue at or above the 0.05 margin, shrinking the
  // coupling only if necessary (never amplifying).
  constexpr double kMargin = 0.05;
  Mat M0 = J_OL.transpose() * llt.solve(J_OL);
  const double lam_max = eigh(M0).values.maxCoeff();
  double factor = 1.0;
  if (1.0 - lam_max < kMargin) {
    factor = std::sqrt((1.0 - kMargin) / lam_max);
  }
  J_OL *= factor;

  jm.J.topRightCorner(p, r) = J_OL;
  jm.J.bottomLeftCorner(r, p) = J_OL.transpose();
  jm.J.bottomRightCorner(r, r) = Mat::Identity(r, r);
  jm.coupling_factor = factor;
  jm.validate();
  return jm;
}

JointModel joint_from_matrix(const Mat& J, int p_observed) {
  JointModel jm;
  jm.p = p_observed;
  jm.r = static_cast<int>(J.rows()) - p_observed;
  jm.J = J;
  jm.validate();
  return jm;
}

MarginalModel marginalize(const JointModel& jm) {
  jm.validate();
  MarginalModel mm;
  mm.S_star = jm.J_OO();
  const int p = jm.p;

  if (jm.r == 0) {
    mm.L_star = Mat::Zero(p, p);
    mm.rank_r = 0;
  } else {
    Mat J_OL = jm.J_OL();
    Eigen::LLT<Mat> llt_LL(jm.J_LL());
    if (llt_LL.info() != Eigen::Success) {
      throw std::runtime_error("marginalize: J_LL is not positive definite");
    }
    mm.L_star = -J_OL * llt_LL.solve(J_OL.transpose());
    mm.L_star = 0.5 * (mm.L_star + mm.L_star.transpose());

    Eigen::ColPivHouseholderQR<Mat> qr(J_OL);
    if (qr.rank() == jm.r) {
      mm.rank_r = jm.r;
    } else {
      const Vec ev = eigh(mm.L_star).values;
      const double spectral = ev.cwiseAbs().maxCoeff();
      mm.rank_r = 0;
      for (int i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) > 1e-10 * spectral) ++mm.rank_r;
      }
    }
  }

  mm.Theta_star = mm.S_star + mm.L_star;
  Eigen::LLT<Mat> llt_theta(0.5 * (mm.Theta_star + mm.Theta_star.transpose()));
  if (llt_theta.info() != Eigen::Success) {
    throw std::runtime_error("marginalize: Theta_star is not positive definite");
  }
  mm.Sigma_star = llt_theta.solve(Mat::Identity(p, p));
  mm.Sigma_star = 0.5 * (mm.Sigma_star + mm.Sigma_star.transpose());

  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (i != j && std::abs(mm.S_star(i, j)) > 1e-12) {
        mm.support_E.emplace_back(i, j);
      }
    }
  }
  return mm;
}

double energy_ratio(const MarginalModel& mm) {
  // Sigma* decomposes as G + S*^{-1} (matrix inversion lemma), so the global
  // factor's energy is the trace excess over the conditional covariance.
  Eigen::LLT<Mat> llt(mm.S_star);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("energy_ratio: S_star is not positive definite");
  }
  const int p = static_cast<int>(mm.S_star.rows());
  const double tr_local = llt.solve(Mat::Identity(p, p)).trace();
  const double tr_global = mm.Sigma_star.trace() - tr_local;
  return std::max(0.0, tr_global / tr_local);
}

JointModel scale_to_energy_ratio(const JointModel& jm, double target) {
  jm.validate();
  if (target <= 0.0) {
    throw std::invalid_argument("scale_to_energy_ratio: target must be positive");
  }
  if (jm.r == 0) {
    throw std::invalid_argument(
        "scale_to_energy_ratio: model has no latent block (ratio is fixed at 0)");
  }

  const Mat J_OL = jm.J_OL();
  Eigen::LLT<Mat> llt(jm.J_OO());
  const Mat M0 = J_OL.transpose() * llt.solve(J_OL);
  const double lam = coupling_limit_eig(M0, jm.J_LL());
  if (lam <= 0.0) {
    throw std::invalid_argument(
        "scale_to_energy_ratio: latent coupling is zero, ratio is fixed at 0");
  }
  // Largest coupling multiplier keeping the joint strictly PD.
  const double s_max = std::sqrt((1.0 - 1e-8) / lam);

  // Direct trace evaluation: Theta(s) = J_OO + s^2 L1 with L1 the low-rank
  // term at unit scale, so the probe never builds a full marginal model (the
  // boundary probe at s_max is too ill-conditioned for the model invariants).
  const int p = jm.p;
  Eigen::LLT<Mat> llt_LL(jm.J_LL());
  const Mat L1 = -J_OL * llt_LL.solve(J_OL.transpose());
  const double tr_local = llt.solve(Mat::Identity(p, p)).trace();
  auto ratio_at = [&](double s) {
    const Mat Theta = jm.J_OO() + (s * s) * L1;
    Eigen::LLT<Mat> llt_theta(0.5 * (Theta + Theta.transpose()));
    if (llt_theta.info() != Eigen::Success) {
      throw std::runtime_error(
          "scale_to_energy_ratio: probe lost positive definiteness");
    }
    const double tr_sigma = llt_theta.solve(Mat::Identity(p, p)).trace();
    return std::max(0.0, (tr_sigma - tr_local) / tr_local);
  };

  const double max_ratio = ratio_at(s_max);
  if (target > max_ratio) {
    std::ostringstream msg;
    msg << "scale_to_energy_ratio: target " << target
        << " unattainable; achievable range is (0, " << max_ratio << "]";
    throw std::domain_error(msg.str());
  }

  double lo = 0.0, hi = s_max;
  double s = s_max, achieved = max_ratio;
  for (int it = 0; it < 60; ++it) {
    s = 0.5 * (lo + hi);
    achieved = ratio_at(s);
    if (std::abs(achieved - target) <= 1e-6 * target) break;
    if (achieved < target) {
      lo = s;
    } else {
      hi = s;
    }
  }
  JointModel out = with_coupling_scaled(jm, s);
  out.validate();
  return out;
}

Mat sample(const Mat& Sigma, int n, std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("sample: n must be positive");
  }
  Eigen::LLT<Mat> llt(0.5 * (Sigma + Sigma.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("sample: Sigma is not positive definite");
  }
  const int p = static_cast<int>(Sigma.rows());
  auto engine = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat Z(p, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) {
      Z(i, j) = gauss(engine);
    }
  }
  return llt.matrixL() * Z;
}

}  // namespace lvggm::models
