#pragma once

#include <array>
#include <cstdint>

#include "core/models.hpp"
#include "core/numeric.hpp"

namespace lvggm::theory {

// Model subspace pair: sparse support E (symmetric pair set, s = |E|) and an
// orthonormal basis of the low-rank column space U.
struct SubspaceSpec {
  models::SupportSet E;
  Mat U_basis;  // p x rank, orthonormal columns

  void validate() const;
};

struct TheoryParams {
  double kappa_min = 1.0;  // restricted Fisher eigenvalue (lower bound in practice)
  double M_const = 7.0;    // burn-in constant, must exceed 6
  double sigma_bar = 1.0;  // max diagonal of Sigma*
  double rho_star = 1.0;   // ||Sigma*||_2
  double r_eff = 1.0;
  double C1 = 1.0, C2 = 1.0, C3 = 1.0, C4 = 1.0;
  double Lambda_sfi = 0.0;
  double r_perp = 0.0;  // approximation error; 0 for exactly structured truths

  double kappa_L() const {
    return (M_const - 2.0) / (2.0 * (M_const - 1.0)) * kappa_min;
  }
};

// Tr(Theta*^{-1} Delta Theta*^{-1} Delta), computed by linear solves (no
// Kronecker products are formed).
double fisher_norm_sq(const Mat& Theta_star, const Mat& Delta);

// Tr(Theta*^{-1} Delta_A Theta*^{-1} Delta_B); symmetric in its two slots.
double fisher_inner(const Mat& Theta_star, const Mat& Delta_A, const Mat& Delta_B);

// Zeroes every entry outside E union the diagonal.
Mat project_sparse(const Mat& M, const models::SupportSet& E);

// P M + M P - P M P with P = U U^T: the projector onto the symmetric model
// subspace of the column space U (its complement is (I-P) M (I-P)).
Mat project_lowrank(const Mat& M, const Mat& U_basis);

struct SfiReport {
  // max singular values of P_a F* P_b for (a,b) in
  // (E,U), (E-perp,U), (E,U-perp), (E-perp,U-perp), in that order.
  std::array<double, 4> sigmas{};
  double Lambda = 0.0;      // 2 + 3 max{lam sqrt(s)/(mu sqrt(r)), inverse}
  double threshold = 0.0;   // kappa_min / (c1 Lambda^2), c1 = 16M/(M-6)
  bool lambda_defined = false;  // false when s = 0 or r = 0
  bool satisfied = false;       // max sigma <= threshold (when defined)
};

// Structured-Fisher-incoherence diagnostics. Operator norms are computed by
// power iteration on the composed map and its adjoint (2000 iterations or
// relative change < 1e-13); p is capped at 64.
SfiReport sfi_singular_values(const Mat& Theta_star, const SubspaceSpec& spec,
                              double lambda, double mu, double M_const,
                              double kappa_min);

// Trivial lower bound for the restricted Fisher eigenvalue: lambda_min(Theta*)^2.
double rfe_lower_bound(const Mat& Theta_star);

enum class Regime {
  DimensionScaled,  // lambda = 160 C1 sigma_bar sqrt(log p / n), mu = 16 C2 rho sqrt(p/n)
  EffRankScaled,    // same lambda, mu = C4 rho sqrt(r_eff log p / n)
  Practical         // lambda = Ca sigma_bar sqrt(log p / n), mu = Cb rho sqrt(r_eff log p / n)
};

struct ScheduleConstants {
  double C1 = 1.0, C2 = 1.0, C4 = 1.0;
  double Ca = 0.5, Cb = 1.0;
};

// Regularization schedule from a covariance matrix (true or sample version;
// both are accepted). sigma_bar = max diagonal, rho = spectral norm, r_eff
// from the same matrix. Natural logarithms throughout.
std::pair<double, double> select_regularization(const Mat& Sigma, int n,
                                                Regime regime,
                                                const ScheduleConstants& c);

// (6 / kappa_L) max{lambda sqrt(s), mu sqrt(r)} + sqrt(8 r_perp / kappa_L).
double error_bound(const TheoryParams& params, double lambda, double mu,
                  double s, double r);

struct DeviationReport {
  int trials = 0;
  double rate_elementwise = 0.0;  // fraction with ||Shat - S*||_max <= lambda/2
  double rate_spectral = 0.0;     // fraction with ||Shat - S*||_2  <= mu/2
  double mean_dev_elementwise = 0.0;
  double mean_dev_spectral = 0.0;
};

// Draws `trials` sample sets of size n from N(0, Sigma_star) and reports how
// often the sample covariance deviation stays within half the
// dimension-scaled schedule.
DeviationReport deviation_check(const Mat& Sigma_star, int n, int trials,
                                std::uint64_t seed, double C1, double C2);

}  // namespace lvggm::theory
