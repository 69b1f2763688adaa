#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "core/models.hpp"
#include "core/numeric.hpp"
#include "doctest.h"

using lvggm::Mat;
using lvggm::Vec;
namespace models = lvggm::models;

TEST_CASE("chain precision at small sizes") {
  const Mat C3 = models::chain_precision(3, 1.0);
  Mat expected(3, 3);
  expected << 1.0, 0.4, 0.0, 0.4, 1.0, 0.4, 0.0, 0.4, 1.0;
  CHECK((C3 - expected).cwiseAbs().maxCoeff() == 0.0);

  const Mat C2 = models::chain_precision(2, 2.0);
  Mat expected2(2, 2);
  expected2 << 2.0, 0.8, 0.8, 2.0;
  CHECK((C2 - expected2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("chain precision is PD with bounded spectrum") {
  const Mat C = models::chain_precision(50, 1.0);
  CHECK(lvggm::eigh(C).values.minCoeff() > 0.19);
  for (int p : {100, 500}) {
    const Mat Cp = models::chain_precision(p, 1.0);
    CHECK(lvggm::eigh(Cp).values.minCoeff() > 0.0);
    // Bandwidth 1: nothing beyond the first off-diagonal.
    for (int i = 0; i < p; ++i)
      for (int j = i + 2; j < p; ++j) CHECK(Cp(i, j) == 0.0);
  }
}

TEST_CASE("chain precision rejects bad arguments") {
  CHECK_THROWS_AS(models::chain_precision(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(models::chain_precision(5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(models::chain_precision(5, -1.0), std::invalid_argument);
}

TEST_CASE("random sparse precision with zero density is diagonal") {
  const auto [S, support] = models::random_sparse_precision(10, 0.0, 1);
  CHECK(support.empty());
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      if (i != j) CHECK(S(i, j) == 0.0);
  CHECK(lvggm::eigh(S).values.minCoeff() > 0.0);
}

TEST_CASE("random sparse precision hits the target density and is PD") {
  const auto [S, support] = models::random_sparse_precision(40, 0.05, 7);
  CHECK(lvggm::eigh(S).values.minCoeff() > 0.0);
  int nonzero_pairs = 0;
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j)
      if (i != j && S(i, j) != 0.0) ++nonzero_pairs;
  const double fraction = double(nonzero_pairs) / (40.0 * 39.0);
  CHECK(fraction >= 0.03);
  CHECK(fraction <= 0.07);
  CHECK(int(support.size()) == nonzero_pairs);
  // Support is symmetric and magnitudes stay inside [0.1, 0.5].
  for (const auto& [i, j] : support) {
    CHECK(std::find(support.begin(), support.end(), std::make_pair(j, i)) !=
          support.end());
    CHECK(std::abs(S(i, j)) >= 0.1);
    CHECK(std::abs(S(i, j)) <= 0.5);
  }
}

TEST_CASE("random sparse precision is deterministic in the seed") {
  const auto [S1, E1] = models::random_sparse_precision(25, 0.1, 99);
  const auto [S2, E2] = models::random_sparse_precision(25, 0.1, 99);
  CHECK((S1 - S2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(E1 == E2);
  const auto [S3, E3] = models::random_sparse_precision(25, 0.1, 100);
  CHECK((S1 - S3).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("assemble_joint with r = 0 is the plain model") {
  const Mat S = models::chain_precision(6, 1.0);
  const auto jm = models::assemble_joint(S, 0, 1.0, 3);
  CHECK(jm.p == 6);
  CHECK(jm.r == 0);
  CHECK((jm.J - S).cwiseAbs().maxCoeff() == 0.0);
  const auto mm = models::marginalize(jm);
  CHECK((mm.Theta_star - S).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mm.L_star.cwiseAbs().maxCoeff() == 0.0);
  CHECK(mm.rank_r == 0);
}

TEST_CASE("assembled joints are PD with capped coupling") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Mat S = models::chain_precision(20, 1.0);
    const auto jm = models::assemble_joint(S, 3, 1.0, seed);
    CHECK_NOTHROW(jm.validate());
    CHECK(lvggm::eigh(jm.J).values.minCoeff() > 0.0);
    CHECK(jm.coupling_factor <= 1.0);
    CHECK(jm.coupling_factor > 0.0);
    // The Schur complement keeps the promised margin.
    const Mat schur =
        jm.J_LL() - jm.J_OL().transpose() *
                        jm.J_OO().llt().solve(jm.J_OL());
    CHECK(lvggm::eigh(schur).values.minCoeff() >= 0.05 - 1e-9);
  }
}

TEST_CASE("hand-checked 3x3 joint marginalizes exactly") {
  Mat J(3, 3);
  J << 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 4.0;
  const auto jm = models::joint_from_matrix(J, 2);
  CHECK_NOTHROW(jm.validate());
  const auto mm = models::marginalize(jm);

  Mat theta_expected(2, 2);
  theta_expected << 0.75, -0.25, -0.25, 0.75;
  Mat l_expected(2, 2);
  l_expected << -0.25, -0.25, -0.25, -0.25;
  CHECK((mm.Theta_star - theta_expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((mm.L_star - l_expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((mm.S_star - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(mm.rank_r == 1);
  CHECK_NOTHROW(mm.validate());
}

TEST_CASE("marginalize matches the brute-force covariance-block oracle") {
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto [S, E] = models::random_sparse_precision(8, 0.2, seed);
    const auto jm = models::assemble_joint(S, 2, 0.5, seed + 7);
    const auto mm = models::marginalize(jm);
    // Invert the full joint, take the observed covariance block, invert back.
    const Mat Omega = jm.J.llt().solve(Mat::Identity(10, 10));
    const Mat Theta_oracle =
        Omega.topLeftCorner(8, 8).llt().solve(Mat::Identity(8, 8));
    CHECK((mm.Theta_star - Theta_oracle).norm() <= 1e-8);
  }
}

TEST_CASE("marginal invariants: L NSD with rank <= r, Theta PD") {
  for (std::uint64_t seed : {21, 22, 23, 24}) {
    const Mat S = models::chain_precision(15, 1.0);
    const auto jm = models::assemble_joint(S, 4, 0.8, seed);
    const auto mm = models::marginalize(jm);
    const Vec l_evals = lvggm::eigh(mm.L_star).values;
    CHECK(l_evals.maxCoeff() <= 1e-10);
    CHECK(mm.rank_r <= 4);
    CHECK(lvggm::eigh(mm.Theta_star).values.minCoeff() > 0.0);
    CHECK((mm.Theta_star - mm.S_star - mm.L_star).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK((mm.Sigma_star * mm.Theta_star - Mat::Identity(15, 15)).norm() <=
          1e-8 * std::sqrt(15.0));
    CHECK_NOTHROW(mm.validate());
  }
}

TEST_CASE("chain support contains exactly the 2(p-1) neighbor pairs") {
  const Mat S = models::chain_precision(12, 1.0);
  const auto jm = models::assemble_joint(S, 2, 0.5, 5);
  const auto mm = models::marginalize(jm);
  CHECK(int(mm.support_E.size()) == 2 * 11);
  for (const auto& [i, j] : mm.support_E) CHECK(std::abs(i - j) == 1);
}

TEST_CASE("energy ratio is zero without coupling") {
  const Mat S = models::chain_precision(8, 1.0);
  Mat J = Mat::Identity(10, 10);
  J.topLeftCorner(8, 8) = S;  // zero off-diagonal coupling blocks
  const auto mm = models::marginalize(models::joint_from_matrix(J, 8));
  CHECK(models::energy_ratio(mm) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy ratio matches the direct global-factor trace") {
  const auto [S, E] = models::random_sparse_precision(12, 0.1, 31);
  const auto jm = models::assemble_joint(S, 3, 0.7, 32);
  const auto mm = models::marginalize(jm);
  // Direct construction: Sigma = G + S^{-1} with G = -L at the covariance
  // level; recover G by subtraction and compare traces.
  const Mat S_inv = mm.S_star.llt().solve(Mat::Identity(12, 12));
  const Mat G = mm.Sigma_star - S_inv;
  const double direct = G.trace() / S_inv.trace();
  CHECK(models::energy_ratio(mm) == doctest::Approx(direct).epsilon(1e-10));
  CHECK(direct >= 0.0);
}

TEST_CASE("scale_to_energy_ratio hits its target") {
  const auto [S, E] = models::random_sparse_precision(15, 0.1, 41);
  const auto jm = models::assemble_joint(S, 3, 0.5, 42);
  for (double target : {0.2, 1.0, 5.0}) {
    const auto scaled = models::scale_to_energy_ratio(jm, target);
    const double achieved = models::energy_ratio(models::marginalize(scaled));
    CHECK(std::abs(achieved - target) <= 1e-5 * target);
    CHECK_NOTHROW(scaled.validate());
  }
}

TEST_CASE("energy ratio grows monotonically with the coupling scale") {
  const Mat S = models::chain_precision(20, 1.0);
  const auto jm = models::assemble_joint(S, 3, 1.0, 51);
  double prev = -1.0;
  for (double factor : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    models::JointModel scaled = jm;
    scaled.J.topRightCorner(20, 3) *= factor;
    scaled.J.bottomLeftCorner(3, 20) *= factor;
    const double ratio = models::energy_ratio(models::marginalize(scaled));
    CHECK(ratio > prev);
    prev = ratio;
  }
}

TEST_CASE("unattainable energy ratios report the achievable range") {
  const Mat S = models::chain_precision(10, 1.0);
  const auto jm = models::assemble_joint(S, 2, 0.5, 61);
  CHECK_THROWS_AS(models::scale_to_energy_ratio(jm, 1e18), std::domain_error);
  try {
    models::scale_to_energy_ratio(jm, 1e18);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("achievable range") != std::string::npos);
  }
}

TEST_CASE("sampling is deterministic and seed-sensitive") {
  const Mat Sigma = Mat::Identity(5, 5);
  const Mat X1 = models::sample(Sigma, 100, 7);
  const Mat X2 = models::sample(Sigma, 100, 7);
  const Mat X3 = models::sample(Sigma, 100, 8);
  CHECK((X1 - X2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((X1 - X3).cwiseAbs().maxCoeff() > 0.0);
  CHECK(X1.rows() == 5);
  CHECK(X1.cols() == 100);
}

TEST_CASE("sample covariance concentrates around the identity") {
  const int p = 5, n = 2000;
  const double tol = 5.0 / std::sqrt(double(n));
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Mat X = models::sample(Mat::Identity(p, p), n, seed);
    const Mat S = lvggm::sample_covariance(X);
    if ((S - Mat::Identity(p, p)).cwiseAbs().maxCoeff() <= tol) ++ok;
  }
  CHECK(ok >= 99);
}

TEST_CASE("sample variances follow the covariance diagonal") {
  Mat Sigma = Mat::Zero(2, 2);
  Sigma.diagonal() << 4.0, 1.0;
  const Mat X = models::sample(Sigma, 100000, 3);
  const Mat S = lvggm::sample_covariance(X);
  CHECK(S(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(S(1, 1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sample rejects non-PD input") {
  Mat bad = Mat::Zero(3, 3);
  bad(0, 0) = 1.0;  // PSD but singular
  bad(1, 1) = 1.0;
  CHECK_THROWS(models::sample(bad, 10, 1));
}
