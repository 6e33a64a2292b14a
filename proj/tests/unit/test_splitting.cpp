#include <gtest/gtest.h>

#include <random>

#include "blocksolve/app/oracles.hpp"
#include "blocksolve/errors.hpp"
#include "blocksolve/instances.hpp"
#include "blocksolve/splitting.hpp"

using namespace blocksolve;

namespace {

SplitProblemPtr zero_problem(std::size_t n, std::size_t p) {
  SplitProblem prob;
  prob.dim = p;
  prob.users.assign(n, ZeroMap{});
  prob.lipschitz = 1.0;
  prob.solution = Vector::Zero(static_cast<Eigen::Index>(p));
  return std::make_shared<const SplitProblem>(prob);
}

SplitProblemPtr affine_problem(std::size_t n, std::size_t p, std::uint64_t seed) {
  SplitInstanceOptions o;
  o.users = n;
  o.dim = p;
  return std::make_shared<const SplitProblem>(random_split_affine(o, seed));
}

}  // namespace

// ---------------------------------------------------------------- consensus

TEST(Consensus, MeanUnderIdentityResolvent) {
  Vector u(2);
  u << 1, 3;
  auto r = consensus_resolvent(u, 2, 0.7, ZeroMap{});
  EXPECT_DOUBLE_EQ(r.hat(0), 2.0);
  EXPECT_EQ(r.copies, Vector::Constant(2, 2.0));
}

TEST(Consensus, AgreementIsFixed) {
  Vector v(3);
  v << 1, -2, 0.5;
  auto r = consensus_resolvent(replicate(v, 4), 4, 1.3, ZeroMap{});
  EXPECT_LT((r.hat - v).norm(), 1e-15);
}

TEST(Consensus, MatchesBruteForceSystem) {
  std::mt19937_64 rng(77);
  const std::size_t n = 5, p = 6;
  const Matrix q = random_psd(rng, p, Spectrum::Wide);
  const Vector b = gaussian_vector(rng, p);
  for (int t = 0; t < 100; ++t) {
    const double beta = 0.2 + static_cast<double>(t % 7) * 0.3;
    const Vector u = gaussian_vector(rng, n * p);
    auto r = consensus_resolvent(u, n, beta, AffineMap{q, b});
    const Vector want = app::brute_force_consensus(u, n, beta, q, b);
    ASSERT_LE((r.hat - want).norm(), 1e-8 * (1 + want.norm()));
  }
}

// ---------------------------------------------------------------- lambda range

TEST(LambdaRange, MonotoneCase) {
  auto r = lambda_range(1.0, 0.0);
  EXPECT_DOUBLE_EQ(r.lo, 0.0);
  EXPECT_DOUBLE_EQ(r.hi, 1.0);
  EXPECT_FALSE(r.contains(0.0));
  EXPECT_TRUE(r.contains(0.5));
}

TEST(LambdaRange, DegenerateDiscriminant) {
  auto r = lambda_range(1.0, 0.125);
  EXPECT_NEAR(r.lo, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(r.hi, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(fbfs_lipschitz(r.lo, 1.0), 28.0 / 9.0, 1e-14);
}

TEST(LambdaRange, InfeasibleRho) {
  EXPECT_THROW(lambda_range(1.0, 1.01 / 8.0), InfeasibleParameters);
}

TEST(LambdaRange, RhoHatArithmetic) { EXPECT_NEAR(fbfs_rho_hat(0.5, 1.0, 0.0), 2.0 / 9.0, 1e-15); }

// ---------------------------------------------------------------- FBFS

TEST(Fbfs, VanishesAtSolution) {
  auto prob = affine_problem(4, 3, 5);
  const double lam = default_lambda(prob->lipschitz_constant(), prob->rho);
  const Vector xs = replicate(*prob->solution, 4);
  EXPECT_LE(fbfs_apply(xs, lam, prob).norm(), 1e-10);
}

TEST(Fbfs, ZeroOperatorsGiveDeviationFromMean) {
  auto prob = zero_problem(3, 2);
  Vector x(6);
  x << 1, 2, 3, 4, 8, 0;
  Vector want(6);
  want << -3, 0, -1, 2, 4, -2;
  EXPECT_LT((fbfs_apply(x, 0.5, prob) - want).norm(), 1e-14);
}

TEST(Fbfs, LipschitzOnSamples) {
  auto prob = affine_problem(4, 3, 6);
  const double l = prob->lipschitz_constant();
  const double lam = default_lambda(l, 0.0);
  FbfsOperator s(prob, lam);
  std::mt19937_64 rng(3);
  double worst = 0;
  for (int t = 0; t < 2000; ++t) {
    Vector x = gaussian_vector(rng, 12), y = gaussian_vector(rng, 12);
    worst = std::max(worst, (s(x) - s(y)).norm() / (x - y).norm());
  }
  EXPECT_LE(worst, fbfs_lipschitz(lam, l) * (1 + 1e-10));
}

TEST(Fbfs, BlockMatchesFull) {
  auto prob = affine_problem(5, 2, 8);
  FbfsOperator s(prob, 0.3 / prob->lipschitz_constant());
  std::mt19937_64 rng(4);
  Vector x = gaussian_vector(rng, 10);
  Vector full = s(x);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LT((s.block(x, i) - full.segment(2 * i, 2)).norm(), 1e-13);
}

TEST(Fbfs, LambdaOutsideRangeRejected) {
  auto prob = affine_problem(3, 2, 1);
  EXPECT_THROW(FbfsOperator(prob, 2.0 / prob->lipschitz_constant()), InfeasibleParameters);
  EXPECT_THROW(FbfsOperator(prob, 0.0), InfeasibleParameters);
}

TEST(FbfsStar, ZeroAtSolution) {
  auto prob = affine_problem(3, 2, 2);
  const Vector xs = *prob->solution;
  auto r = fbfs_star_check(replicate(xs, 3), 0.5 / prob->lipschitz_constant(), prob, xs);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.margin, 0.0, 1e-12);
}

TEST(FbfsStar, MonotoneSamplesPass) {
  auto prob = affine_problem(4, 3, 3);
  const double lam = 0.5 / prob->lipschitz_constant();
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    auto r = fbfs_star_check(gaussian_vector(rng, 12), lam, prob, *prob->solution);
    ASSERT_TRUE(r.passed) << r.margin;
    ASSERT_NEAR(r.rho_hat, 2.0 / 9.0, 1e-12);
  }
}

TEST(FbfsStar, OutsideRangeRejected) {
  auto prob = affine_problem(3, 2, 2);
  EXPECT_THROW(fbfs_star_check(Vector::Zero(6), 1.5 / prob->lipschitz_constant(), prob, *prob->solution),
               std::invalid_argument);
}

TEST(SplitProblem, AffineUsersAreResolventConsistent) {
  auto prob = affine_problem(4, 3, 9);
  std::mt19937_64 rng(1);
  for (const auto& a : prob->users) {
    for (int t = 0; t < 20; ++t) {
      Vector y = gaussian_vector(rng, 3);
      EXPECT_LT((resolvent(a, 0.7, y + 0.7 * forward(a, y)) - y).norm(), 1e-10);
    }
  }
}

// ---------------------------------------------------------------- DRS

TEST(Drs, ZeroOperatorsGiveScaledDeviation) {
  auto prob = zero_problem(2, 2);
  Vector u(4);
  u << 1, 2, 3, 6;
  Vector want(4);
  want << -1, -2, 1, 2;
  EXPECT_LT((drs_apply(u, 0.5, prob) - want / 0.5).norm(), 1e-14);
  EXPECT_LT(drs_apply(replicate(Vector::Ones(2), 2), 0.5, prob).norm(), 1e-15);
}

TEST(Drs, SolutionIsAZeroAndMapsToRoot) {
  auto prob = affine_problem(4, 3, 4);
  for (double beta : {0.3, 1.0, 2.5}) {
    DrsOperator g(prob, beta);
    const Vector us = drs_solution(*prob, beta);
    EXPECT_LE(g(us).norm(), 1e-10);
    EXPECT_LE((g.consensus_point(us) - *prob->solution).norm(), 1e-10);
  }
}

TEST(Drs, CocoerciveOnSamples) {
  auto prob = affine_problem(4, 3, 10);
  const double beta = 0.8;
  DrsOperator g(prob, beta);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10000; ++t) {
    Vector u = gaussian_vector(rng, 12), v = gaussian_vector(rng, 12);
    Vector d = g(u) - g(v);
    const double scale = 1 + (u - v).squaredNorm() + d.squaredNorm();
    ASSERT_GE(d.dot(u - v) - beta * d.squaredNorm(), -1e-10 * scale);
  }
}

// ---------------------------------------------------------------- certificates

TEST(CertificateA, ExactSolution) {
  auto prob = affine_problem(3, 2, 11);
  const Vector xs = *prob->solution;
  Vector v(6);
  for (std::size_t i = 0; i < 3; ++i) v.segment(2 * i, 2) = forward(prob->users[i], xs);
  auto c = solution_certificate_a(replicate(xs, 3), v, 3, 0.4, prob->central);
  EXPECT_LE(c.residual, 1e-20);
}

TEST(CertificateA, DistinctCopiesGivePositiveResidual) {
  Vector x(4);
  x << 0, 1, 2, 3;
  EXPECT_GT(solution_certificate_a(x, Vector::Zero(4), 2, 1.0, ZeroMap{}).residual, 0.0);
}

TEST(CertificateB, ZeroOfDrs) {
  auto prob = affine_problem(3, 2, 12);
  EXPECT_LE(solution_certificate_b(drs_solution(*prob, 0.6), 0.6, *prob).residual, 1e-20);
}

TEST(CertificateB, IdentityResolvents) {
  auto prob = zero_problem(3, 2);
  std::mt19937_64 rng(2);
  Vector u = gaussian_vector(rng, 6);
  const Vector mean = component_mean(u, 3);
  double want = 0;
  for (std::size_t i = 0; i < 3; ++i) want += (u.segment(2 * i, 2) - mean).squaredNorm();
  EXPECT_NEAR(solution_certificate_b(u, 1.0, *prob).residual, want, 1e-13 * (1 + want));
}

TEST(CertificateB, EqualsScaledDrsResidual) {
  auto prob = affine_problem(4, 3, 13);
  std::mt19937_64 rng(7);
  for (double beta : {0.5, 1.0, 1.7}) {
    for (int t = 0; t < 50; ++t) {
      Vector u = gaussian_vector(rng, 12);
      const double a = solution_certificate_b(u, beta, *prob).residual;
      const double b = beta * beta * drs_apply(u, beta, prob).squaredNorm();
      ASSERT_NEAR(a, b, 1e-12 * b);
    }
  }
}
