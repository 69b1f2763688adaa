#pragma once

#include <Eigen/Dense>
#include <string>

namespace lvggm {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class NormKind {
  ElementwiseMax,  // max_ij |M_ij|
  Spectral,        // largest singular value
  Frobenius,
  Nuclear,         // sum of singular values
  ElementwiseL1    // sum_ij |M_ij|, diagonal included
};

struct EighResult {
  Vec values;   // ascending
  Mat vectors;  // orthonormal columns, M = V diag(values) V^T
};

// Symmetric eigendecomposition. The input is symmetrized as (M + M^T)/2
// first so that asymmetry accumulated by iterative updates is absorbed.
EighResult eigh(const Mat& M);

double matrix_norm(const Mat& M, NormKind kind);

// tr(Sigma) / ||Sigma||_2 for PSD Sigma; 0 for the zero matrix.
double effective_rank(const Mat& Sigma);

// Entrywise sign(m) * max(|m| - tau, 0), diagonal included.
Mat soft_threshold(const Mat& M, double tau);

// Sigma_hat = (1/n) sum_i x_i x_i^T from a p x n column-sample matrix.
// Data are treated as zero-mean unless center is set, in which case the
// empirical row means are subtracted first (for externally supplied data).
Mat sample_covariance(const Mat& X, bool center = false);

}  // namespace lvggm
