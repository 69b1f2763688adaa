#include "core/theory.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "core/rng.hpp"

namespace lvggm::theory {

namespace {

Mat precision_inverse(const Mat& Theta_star) {
  Eigen::LLT<Mat> llt(0.5 * (Theta_star + Theta_star.transpose()));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("Theta_star must be positive definite");
  }
  const int p = static_cast<int>(Theta_star.rows());
  Mat W = llt.solve(Mat::Identity(p, p));
  return 0.5 * (W + W.transpose());
}

using MatMap = std::function<Mat(const Mat&)>;

// Largest singular value of a self-adjoint-composable linear map on
// symmetric matrices, via power iteration on T* T. All component maps here
// (Fisher operator, subspace projectors) are self-adjoint, so the adjoint is
// the reversed composition.
double operator_norm(const MatMap& forward, const MatMap& adjoint, int p,
                     std::uint64_t seed) {
  auto engine = make_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat X(p, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double g = gauss(engine);
      X(i, j) = g;
      X(j, i) = g;
    }
  }
  double norm_x = X.norm();
  if (norm_x == 0.0) return 0.0;
  X /= norm_x;

  double sigma_sq = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Mat Y = adjoint(forward(X));  // Y = T* T X
    // The maps are only self-adjoint (and norm-equivalent to the intended
    // operators) on the symmetric subspace; rounding leaks into the skew
    // subspace, where the transpose-based projectors can have larger norm
    // and would hijack the iteration. Project back every step.
    Y = 0.5 * (Y + Y.transpose()).eval();
    const double rayleigh = X.cwiseProduct(Y).sum();
    const double norm_y = Y.norm();
    if (norm_y < 1e-300) return 0.0;  // operator annihilates the iterate
    const double change = std::abs(rayleigh - sigma_sq);
    sigma_sq = rayleigh;
    X = Y / norm_y;
    if (it > 0 && change < 1e-13 * std::max(1.0, std::abs(sigma_sq))) break;
  }
  return std::sqrt(std::max(0.0, sigma_sq));
}

}  // namespace

void SubspaceSpec::validate() const {
  if (U_basis.cols() > 0) {
    const Mat gram = U_basis.transpose() * U_basis;
    const Mat eye = Mat::Identity(U_basis.cols(), U_basis.cols());
    if ((gram - eye).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("SubspaceSpec: U_basis columns must be orthonormal");
    }
  }
  for (const auto& [i, j] : E) {
    if (i == j) {
      throw std::invalid_argument("SubspaceSpec: E contains a diagonal index pair");
    }
  }
}

double fisher_norm_sq(const Mat& Theta_star, const Mat& Delta) {
  return fisher_inner(Theta_star, Delta, Delta);
}

double fisher_inner(const Mat& Theta_star, const Mat& Delta_A, const Mat& Delta_B) {
  const Mat W = precision_inverse(Theta_star);
  return (W * Delta_A * W * Delta_B).trace();
}

Mat project_sparse(const Mat& M, const models::SupportSet& E) {
  Mat out = Mat::Zero(M.rows(), M.cols());
  out.diagonal() = M.diagonal();
  for (const auto& [i, j] : E) {
    out(i, j) = M(i, j);
  }
  return out;
}

Mat project_lowrank(const Mat& M, const Mat& U_basis) {
  if (U_basis.cols() == 0) {
    return Mat::Zero(M.rows(), M.cols());
  }
  const Mat P = U_basis * U_basis.transpose();
  const Mat PM = P * M;
  return PM + PM.transpose() - P * M * P;
}

SfiReport sfi_singular_values(const Mat& Theta_star, const SubspaceSpec& spec,
                              double lambda, double mu, double M_const,
                              double kappa_min) {
  const int p = static_cast<int>(Theta_star.rows());
  if (p > 64) {
    throw std::invalid_argument(
        "sfi_singular_values: p is capped at 64 (iterative operator norms)");
  }
  spec.validate();
  const Mat W = precision_inverse(Theta_star);

  const auto fisher = [&W](const Mat& X) -> Mat { return W * X * W; };
  const auto proj_e = [&spec](const Mat& X) -> Mat {
    return project_sparse(X, spec.E);
  };
  const auto proj_e_perp = [&proj_e](const Mat& X) -> Mat { return X - proj_e(X); };
  const auto proj_u = [&spec](const Mat& X) -> Mat {
    return project_lowrank(X, spec.U_basis);
  };
  const auto proj_u_perp = [&proj_u](const Mat& X) -> Mat { return X - proj_u(X); };

  const std::array<MatMap, 2> row_proj = {MatMap(proj_e), MatMap(proj_e_perp)};
  const std::array<MatMap, 2> col_proj = {MatMap(proj_u), MatMap(proj_u_perp)};

  SfiReport report;
  // Order: (E,U), (E-perp,U), (E,U-perp), (E-perp,U-perp).
  const std::array<std::pair<int, int>, 4> blocks{
      {{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
  for (int b = 0; b < 4; ++b) {
    const MatMap& Pa = row_proj[blocks[b].first];
    const MatMap& Pb = col_proj[blocks[b].second];
    const auto forward = [&](const Mat& X) -> Mat { return Pa(fisher(Pb(X))); };
    const auto adjoint = [&](const Mat& X) -> Mat { return Pb(fisher(Pa(X))); };
    report.sigmas[b] =
        operator_norm(forward, adjoint, p, 0xC0FFEEull + 17 * b);
  }

  const double s = static_cast<double>(spec.E.size());
  const double r = static_cast<double>(spec.U_basis.cols());
  if (s > 0 && r > 0 && lambda > 0 && mu > 0) {
    const double a = lambda * std::sqrt(s) / (mu * std::sqrt(r));
    report.Lambda = 2.0 + 3.0 * std::max(a, 1.0 / a);
    report.lambda_defined = true;
    if (M_const <= 6.0) {
      throw std::invalid_argument("sfi_singular_values: M must exceed 6");
    }
    const double c1 = 16.0 * M_const / (M_const - 6.0);
    report.threshold = kappa_min / (c1 * report.Lambda * report.Lambda);
    const double worst =
        *std::max_element(report.sigmas.begin(), report.sigmas.end());
    report.satisfied = worst <= report.threshold;
  }
  return report;
}

double rfe_lower_bound(const Mat& Theta_star) {
  const double lam_min = eigh(Theta_star).values(0);
  if (lam_min <= 0.0) {
    throw std::invalid_argument("rfe_lower_bound: Theta_star must be positive definite");
  }
  return lam_min * lam_min;
}

std::pair<double, double> select_regularization(const Mat& Sigma, int n,
                                                Regime regime,
                                                const ScheduleConstants& c) {
  const int p = static_cast<int>(Sigma.rows());
  if (n < 2 || p < 2) {
    throw std::invalid_argument("select_regularization: need n >= 2 and p >= 2");
  }
  const double sigma_bar = Sigma.diagonal().maxCoeff();
  const double rho = matrix_norm(Sigma, NormKind::Spectral);
  const double log_p = std::log(static_cast<double>(p));
  const double nn = static_cast<double>(n);

  switch (regime) {
    case Regime::DimensionScaled:
      return {160.0 * c.C1 * sigma_bar * std::sqrt(log_p / nn),
              16.0 * c.C2 * rho * std::sqrt(static_cast<double>(p) / nn)};
    case Regime::EffRankScaled:
      return {160.0 * c.C1 * sigma_bar * std::sqrt(log_p / nn),
              c.C4 * rho * std::sqrt(effective_rank(Sigma) * log_p / nn)};
    case Regime::Practical:
      return {c.Ca * sigma_bar * std::sqrt(log_p / nn),
              c.Cb * rho * std::sqrt(effective_rank(Sigma) * log_p / nn)};
  }
  throw std::invalid_argument("select_regularization: unknown regime");
}

double error_bound(const TheoryParams& params, double lambda, double mu,
                  double s, double r) {
  const double kappa_L = params.kappa_L();
  if (kappa_L <= 0.0) {
    throw std::invalid_argument("error_bound: kappa_L must be positive (M > 6, kappa_min > 0)");
  }
  const double peak = std::max(lambda * std::sqrt(s), mu * std::sqrt(r));
  return 6.0 / kappa_L * peak + std::sqrt(8.0 * params.r_perp / kappa_L);
}

DeviationReport deviation_check(const Mat& Sigma_star, int n, int trials,
                                std::uint64_t seed, double C1, double C2) {
  DeviationReport report;
  report.trials = trials;
  if (trials == 0) return report;

  ScheduleConstants c;
  c.C1 = C1;
  c.C2 = C2;
  const auto [lambda, mu] =
      select_regularization(Sigma_star, n, Regime::DimensionScaled, c);

  int ok_elem = 0, ok_spec = 0;
  double sum_elem = 0.0, sum_spec = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat X = models::sample(Sigma_star, n, seed + static_cast<std::uint64_t>(t));
    const Mat dev = sample_covariance(X) - Sigma_star;
    const double d_elem = matrix_norm(dev, NormKind::ElementwiseMax);
    const double d_spec = matrix_norm(dev, NormKind::Spectral);
    sum_elem += d_elem;
    sum_spec += d_spec;
    if (d_elem <= 0.5 * lambda) ++ok_elem;
    if (d_spec <= 0.5 * mu) ++ok_spec;
  }
  report.rate_elementwise = static_cast<double>(ok_elem) / trials;
  report.rate_spectral = static_cast<double>(ok_spec) / trials;
  report.mean_dev_elementwise = sum_elem / trials;
  report.mean_dev_spectral = sum_spec / trials;
  return report;
}

}  // namespace lvggm::theory
