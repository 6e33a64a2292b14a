#include <gtest/gtest.h>

#include <random>

#include "blocksolve/errors.hpp"
#include "blocksolve/instances.hpp"
#include "blocksolve/operator.hpp"

using namespace blocksolve;

namespace {

PartitionPtr uniform_part(std::size_t n, std::size_t s) {
  return std::make_shared<const BlockPartition>(BlockPartition::uniform(n, s));
}

Vector random_point(std::mt19937_64& rng, std::size_t p) { return gaussian_vector(rng, p); }

}  // namespace

TEST(SeparableOperator, IdentityBlocks) {
  auto part = uniform_part(3, 2);
  Vector xs = Vector::LinSpaced(6, -1, 1);
  auto g = make_separable_cocoercive(part, std::vector<Matrix>(3, Matrix::Identity(2, 2)), xs);
  for (double b : g->cocoercivity()) EXPECT_DOUBLE_EQ(b, 1.0);
  Vector x = Vector::Constant(6, 0.7);
  EXPECT_LT(((*g)(x) - (x - xs)).norm(), 1e-15);
  EXPECT_LT((*g)(xs).norm(), 1e-15);
}

TEST(SeparableOperator, RejectsNonSymmetricBlock) {
  Matrix q(2, 2);
  q << 1, 0.5, 0, 1;
  EXPECT_THROW(make_separable_cocoercive(uniform_part(1, 2), {q}, Vector::Zero(2)), std::invalid_argument);
}

TEST(SeparableOperator, RejectsIndefiniteBlock) {
  Matrix q(2, 2);
  q << 1, 0, 0, -1;
  EXPECT_THROW(make_separable_cocoercive(uniform_part(1, 2), {q}, Vector::Zero(2)), std::invalid_argument);
}

TEST(SeparableOperator, RandomInstanceSatisfiesDeclaredCocoercivity) {
  auto g = random_separable_cocoercive(3, 4, 7, Spectrum::Wide);
  auto r = check_block_cocoercive(*g, g->cocoercivity(), 10000, 99);
  EXPECT_TRUE(r.passed) << "worst " << r.worst_margin;
  EXPECT_EQ(r.trials, 10000u);
}

TEST(SeparableOperator, CocoercivityCheckCatchesInflatedConstant) {
  auto g = random_separable_cocoercive(3, 4, 7, Spectrum::Uniform);
  std::vector<double> inflated = g->cocoercivity();
  for (auto& b : inflated) b *= 3.0;
  EXPECT_FALSE(check_block_cocoercive(*g, inflated, 2000, 5).passed);
}

TEST(Operator, BlockEvaluationMatchesFull) {
  std::mt19937_64 rng(3);
  std::vector<OperatorPtr> ops{random_separable_cocoercive(5, 3, 1), random_monotone_linear(4, 3, 2),
                               random_weak_minty_linear(3, 2, 3, 0.2)};
  for (const auto& g : ops) {
    for (int t = 0; t < 50; ++t) {
      Vector x = random_point(rng, g->dim());
      Vector full = (*g)(x);
      for (std::size_t i = 0; i < g->num_blocks(); ++i) {
        Vector bi = g->block(x, i);
        Vector want = g->partition().block(full, i);
        EXPECT_LE((bi - want).norm(), 1e-12 * (1.0 + want.norm()));
      }
    }
  }
}

TEST(Operator, EvaluationIsPure) {
  auto g = random_monotone_linear(4, 3, 11);
  std::mt19937_64 rng(1);
  Vector x = random_point(rng, g->dim());
  Vector a = (*g)(x);
  Vector b = (*g)(x);
  EXPECT_EQ(a, b);
}

TEST(Operator, DeclaredBlockLipschitzHoldsOnSamples) {
  for (OperatorPtr g : {OperatorPtr(random_separable_cocoercive(4, 3, 1)), OperatorPtr(random_monotone_linear(4, 3, 9))}) {
    auto r = check_block_lipschitz(*g, 2000, 17);
    EXPECT_TRUE(r.passed) << r.worst_margin;
  }
}

TEST(Operator, MissingSolutionThrows) {
  auto part = uniform_part(1, 2);
  LinearOperator g(part, Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_THROW(g.solution(), CertificateUnavailable);
  EXPECT_THROW(g.cocoercivity(), CertificateUnavailable);
  EXPECT_THROW(check_weak_minty(g, 0.0, {Vector::Zero(2)}), std::invalid_argument);
}

TEST(WeakMinty, RotationIsStarMonotone) {
  Matrix m(2, 2);
  m << 0, 1, -1, 0;
  EXPECT_NEAR(weak_minty_rho(m), 0.0, 1e-8);
  EXPECT_NEAR(max_eigenvalue(-(m + m.transpose())), 0.0, 1e-15);
}

TEST(WeakMinty, IdentityAndNegativeIdentity) {
  EXPECT_NEAR(weak_minty_rho(Matrix::Identity(3, 3)), 0.0, 1e-8);
  EXPECT_NEAR(weak_minty_rho(-Matrix::Identity(3, 3)), 1.0, 1e-7);
}

TEST(WeakMinty, NoFiniteRho) {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  EXPECT_THROW(weak_minty_rho(m), CertificateUnavailable);
  EXPECT_THROW(make_linear_weak_minty(uniform_part(1, 2), m, Vector::Zero(2)), CertificateUnavailable);
}

TEST(WeakMinty, CheckAtRootIsZero) {
  auto g = random_weak_minty_linear(2, 2, 4, 0.3);
  auto r = check_weak_minty(*g, *g->certificates().weak_minty_rho, {g->solution()});
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.worst_margin, 0.0, 1e-14);
}

TEST(WeakMinty, MonotoneLinearPassesWithZeroRho) {
  auto g = random_monotone_linear(3, 3, 21);
  std::mt19937_64 rng(8);
  std::vector<Vector> pts;
  for (int t = 0; t < 1000; ++t) pts.push_back(random_point(rng, g->dim()));
  EXPECT_TRUE(check_weak_minty(*g, 0.0, pts).passed);
}

TEST(WeakMinty, NegativeIdentityFailsWithHalfRho) {
  auto g = make_linear_weak_minty(uniform_part(1, 1), -Matrix::Identity(1, 1), Vector::Zero(1));
  std::vector<Vector> pts{Vector::Ones(1)};
  auto r = check_weak_minty(*g, 0.5, pts);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.worst_margin, -0.5, 1e-12);
}

TEST(WeakMinty, GeneratorHitsRequestedRho) {
  auto g = random_weak_minty_linear(3, 2, 5, 0.25);
  EXPECT_NEAR(*g->certificates().weak_minty_rho, 0.25, 1e-6);
  std::mt19937_64 rng(2);
  std::vector<Vector> pts;
  for (int t = 0; t < 500; ++t) pts.push_back(random_point(rng, g->dim()));
  EXPECT_TRUE(check_weak_minty(*g, 0.25 + 1e-6, pts).passed);
}
