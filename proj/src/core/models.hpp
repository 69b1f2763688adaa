#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "core/numeric.hpp"

namespace lvggm::models {

// Symmetric set of off-diagonal index pairs: contains (i,j) and (j,i).
using SupportSet = std::vector<std::pair<int, int>>;

// Full (p+r)-dimensional precision matrix with observed/latent block
// structure:  J = [ J_OO  J_OL ; J_LO  J_LL ].
struct JointModel {
  int p = 0;  // observed variables
  int r = 0;  // latent variables
  Mat J;      // (p+r) x (p+r), symmetric positive definite
  // Factor actually applied to the latent coupling block relative to the
  // initially drawn entries (assembly margin cap and/or ratio scaling).
  double coupling_factor = 1.0;

  Mat J_OO() const { return J.topLeftCorner(p, p); }
  Mat J_OL() const { return J.topRightCorner(p, r); }
  Mat J_LL() const { return J.bottomRightCorner(r, r); }

  void validate() const;  // throws if not symmetric PD or shape-inconsistent
};

// Ground-truth marginal quantities of a latent-variable model.
struct MarginalModel {
  Mat S_star;      // conditional precision of the observed block
  Mat L_star;      // negative semidefinite low-rank term
  Mat Theta_star;  // S_star + L_star, the marginal precision
  Mat Sigma_star;  // Theta_star^{-1}
  SupportSet support_E;  // off-diagonal nonzeros of S_star, both orders
  int rank_r = 0;

  void validate() const;
};

// Tridiagonal chain precision: diagonal = diag, off-diagonals = 0.4 * diag.
Mat chain_precision(int p, double diag);

// Random sparse conditional precision. Each off-diagonal pair is nonzero
// independently with probability `density`, magnitudes uniform on
// [0.1, 0.5] with random sign; the diagonal is set to the row absolute sum
// plus 0.5, which makes the matrix strictly diagonally dominant (hence PD)
// without any eigenvalue surgery.
std::pair<Mat, SupportSet> random_sparse_precision(int p, double density,
                                                   std::uint64_t seed);

// Builds the joint model: J_OO = S_OO, J_LL = I_r, J_OL dense with entries
// latent_scale * Uniform[-1,1]. If the implied Schur complement
// J_LL - J_LO J_OO^{-1} J_OL would lose the 0.05 positive-definiteness
// margin, the coupling block is shrunk by the largest factor <= 1 that
// restores it; the applied factor is recorded.
JointModel assemble_joint(const Mat& S_OO, int r, double latent_scale,
                          std::uint64_t seed);

// Wraps an externally supplied joint precision (first p rows/cols observed).
JointModel joint_from_matrix(const Mat& J, int p_observed);

// Exact marginalization: S* = J_OO, L* = -J_OL J_LL^{-1} J_LO,
// Theta* = S* + L*, Sigma* = Theta*^{-1}.
MarginalModel marginalize(const JointModel& jm);

// Relative energy of the global (latent) factor versus the local one:
// tr(G) / tr(S*^{-1}) where Sigma* = G + S*^{-1}.
double energy_ratio(const MarginalModel& mm);

// Rescales the latent coupling by bisection (<= 60 iterations, relative
// tolerance 1e-6 on the achieved ratio) so the marginalized model attains
// the target energy ratio. Throws if the target exceeds what any PD joint
// can achieve; the message reports the achievable range.
JointModel scale_to_energy_ratio(const JointModel& jm, double target);

// Draws X = C Z with C the lower Cholesky factor of Sigma and Z a p x n
// standard normal matrix from a seeded generator. Columns are samples.
Mat sample(const Mat& Sigma, int n, std::uint64_t seed);

}  // namespace lvggm::models
