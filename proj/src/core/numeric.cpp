#include "core/numeric.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace lvggm {

EighResult eigh(const Mat& M) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("eigh: matrix must be square");
  }
  if (!M.allFinite()) {
    throw std::invalid_argument("eigh: matrix has non-finite entries");
  }
  Mat sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigh: eigendecomposition failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double matrix_norm(const Mat& M, NormKind kind) {
  if (!M.allFinite()) {
    throw std::invalid_argument("matrix_norm: matrix has non-finite entries");
  }
  switch (kind) {
    case NormKind::ElementwiseMax:
      return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
    case NormKind::Frobenius:
      return M.norm();
    case NormKind::ElementwiseL1:
      return M.cwiseAbs().sum();
    case NormKind::Spectral:
    case NormKind::Nuclear: {
      Eigen::BDCSVD<Mat> svd(M);
      const Vec& sv = svd.singularValues();
      if (sv.size() == 0) return 0.0;
      return kind == NormKind::Spectral ? sv(0) : sv.sum();
    }
  }
  throw std::invalid_argument("matrix_norm: unknown norm kind");
}

double effective_rank(const Mat& Sigma) {
  if (Sigma.rows() != Sigma.cols()) {
    throw std::invalid_argument("effective_rank: matrix must be square");
  }
  const double spectral = matrix_norm(Sigma, NormKind::Spectral);
  if (spectral == 0.0) return 0.0;
  return Sigma.trace() / spectral;
}

Mat soft_threshold(const Mat& M, double tau) {
  if (tau < 0.0) {
    throw std::invalid_argument("soft_threshold: tau must be nonnegative");
  }
  return M.unaryExpr([tau](double m) {
    const double shrunk = std::abs(m) - tau;
    return shrunk > 0.0 ? (m > 0.0 ? shrunk : -shrunk) : 0.0;
  });
}

Mat sample_covariance(const Mat& X, bool center) {
  if (X.cols() < 1) {
    throw std::invalid_argument("sample_covariance: need at least one sample");
  }
  const double n = static_cast<double>(X.cols());
  if (!center) {
    return (X * X.transpose()) / n;
  }
  Mat centered = X.colwise() - X.rowwise().mean();
  return (centered * centered.transpose()) / n;
}

}  // namespace lvggm
