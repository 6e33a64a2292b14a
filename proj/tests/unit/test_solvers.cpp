#include <gtest/gtest.h>

#include <cmath>

#include "blocksolve/errors.hpp"
#include "blocksolve/instances.hpp"
#include "blocksolve/solvers.hpp"

using namespace blocksolve;

namespace {

PartitionPtr uniform_part(std::size_t n, std::size_t s) {
  return std::make_shared<const BlockPartition>(BlockPartition::uniform(n, s));
}

// G(x) = x on R^1.
OperatorPtr scalar_identity() {
  return std::make_shared<LinearOperator>(uniform_part(1, 1), Matrix::Identity(1, 1), Vector::Zero(1));
}

double max_relative_deviation(const OperatorPtr& g, const BlockDistribution& dist, double nu, double omega,
                              long steps, std::uint64_t seed, double threshold, std::size_t* rebases) {
  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(g->dim()));
  ArcogDirectSolver direct(g, ArcogSchedule(nu), omega, dist, x0);
  ArcogPracticalSolver practical(g, ArcogSchedule(nu), omega, dist, x0, threshold);
  IndexStream idx(seed, dist);
  double worst = 0;
  for (long k = 0; k < steps; ++k) {
    const std::size_t i = idx.next();
    direct.step(i);
    practical.step(i);
    const Vector xd = direct.current();
    worst = std::max(worst, (xd - practical.current()).norm() / (1.0 + xd.norm()));
  }
  if (rebases) *rebases = practical.state().rebases;
  return worst;
}

}  // namespace

// ---------------------------------------------------------------- RCOG parameters

TEST(RcogParams, FourUniformBlocks) {
  auto p = derive_rcog_params(1.0, 0.0, {1, 1, 1, 1}, BlockDistribution::uniform(4));
  EXPECT_DOUBLE_EQ(p.rho_bar, 0.25);
  EXPECT_DOUBLE_EQ(p.gamma, 0.125);
  EXPECT_DOUBLE_EQ(p.eta, 0.1328125);
  EXPECT_NEAR(p.psi, 0.0009765625, 1e-18);
}

TEST(RcogParams, RhoBarTakesWorstBlock) {
  auto p = derive_rcog_params(1.0, 0.0, {1, 2}, BlockDistribution({0.5, 0.5}));
  EXPECT_NEAR(p.rho_bar, std::sqrt(0.5) / 4.0, 1e-15);
}

TEST(RcogParams, BoundaryRhoRejected) {
  const double rho_bar = 0.25;
  EXPECT_THROW(derive_rcog_params(1.0, rho_bar, {1, 1, 1, 1}, BlockDistribution::uniform(4)), InfeasibleParameters);
  EXPECT_THROW(derive_rcog_params(1.0, -rho_bar, {1, 1, 1, 1}, BlockDistribution::uniform(4)), InfeasibleParameters);
  EXPECT_NO_THROW(derive_rcog_params(1.0, 0.2, {1, 1, 1, 1}, BlockDistribution::uniform(4)));
}

TEST(RcogParams, DerivedParametersSatisfyConditions) {
  for (double rho : {-0.1, 0.0, 0.05, 0.13}) {
    for (double omega : {0.5, 1.0, 3.0}) {
      auto dist = BlockDistribution({0.1, 0.2, 0.3, 0.4});
      auto p = derive_rcog_params(omega, rho, {1, 0.5, 2, 1}, dist);
      EXPECT_NO_THROW(validate_rcog_params(p, dist));
      EXPECT_GT(p.psi, 0.0);
      EXPECT_GT(p.gamma, std::max(rho, 0.0) / omega);
      EXPECT_LE(p.gamma, p.rho_bar / omega * (1 + 1e-15));
      EXPECT_GT(p.eta, p.gamma);
      EXPECT_LT(p.eta, p.gamma + (omega * p.gamma - rho) * dist.p_min() / (2 * omega));
    }
  }
}

TEST(RcogParams, ValidateNamesViolation) {
  auto dist = BlockDistribution::uniform(4);
  auto p = derive_rcog_params(1.0, 0.0, {1, 1, 1, 1}, dist);
  p.eta = p.gamma;
  EXPECT_THROW(validate_rcog_params(p, dist), InfeasibleParameters);
}

// ---------------------------------------------------------------- RCOG step

TEST(RcogStep, FixedPoint) {
  auto g = random_monotone_linear(3, 2, 4);
  auto dist = BlockDistribution::uniform(3);
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  const Vector xs = g->solution();
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT((rcog_step(xs, xs, *g, p, dist, i) - xs).norm(), 1e-14);
}

TEST(RcogStep, SingleBlockIsOptimisticGradient) {
  Matrix m(2, 2);
  m << 1, 2, -2, 1;
  auto g = std::make_shared<LinearOperator>(uniform_part(1, 2), m, Vector::Ones(2));
  RcogParams p;
  p.omega = 0.7;
  p.eta = 0.3;
  p.gamma = 0.2;
  Vector x(2), xp(2);
  x << 1, -1;
  xp << 0.5, 2;
  const Vector og = x - p.omega * (p.eta * (*g)(x) - p.gamma * (*g)(xp));
  EXPECT_LT((rcog_step(x, xp, *g, p, BlockDistribution::uniform(1), 0) - og).norm(), 1e-15);
}

TEST(RcogStep, HandExample) {
  RcogParams p;
  p.omega = 1;
  p.eta = 0.2;
  p.gamma = 0.1;
  Vector x = Vector::Constant(1, 1.0), xp = Vector::Constant(1, 2.0);
  EXPECT_DOUBLE_EQ(rcog_step(x, xp, *scalar_identity(), p, BlockDistribution::uniform(1), 0)(0), 1.0);
}

TEST(RcogStep, OnlySampledBlockMoves) {
  auto g = random_monotone_linear(4, 2, 1);
  auto dist = BlockDistribution::uniform(4);
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  Vector x = Vector::Ones(8), xp = Vector::Zero(8);
  Vector nx = rcog_step(x, xp, *g, p, dist, 2);
  for (std::size_t b = 0; b < 4; ++b) {
    if (b == 2) continue;
    EXPECT_EQ(g->partition().block(nx, b), g->partition().block(x, b));
  }
}

TEST(RcogSolver, MatchesFunctionalKernel) {
  auto g = random_monotone_linear(4, 3, 2);
  auto dist = BlockDistribution({0.1, 0.2, 0.3, 0.4});
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  Vector x0 = Vector::Ones(12);
  RcogSolver s(g, p, dist, x0);
  Vector x = x0, xp = x0;
  IndexStream idx(3, dist);
  for (int k = 0; k < 300; ++k) {
    const std::size_t i = idx.next();
    Vector nx = rcog_step(x, xp, *g, p, dist, i);
    xp = x;
    x = nx;
    s.step(i);
    ASSERT_LT((s.current() - x).norm(), 1e-13);
    ASSERT_LT((s.previous() - xp).norm(), 1e-13);
  }
}

// ---------------------------------------------------------------- schedule

TEST(ArcogSchedule, FirstStep) {
  ArcogSchedule s(4.0);
  auto st = s.at(0);
  EXPECT_DOUBLE_EQ(st.t, 2.25);
  EXPECT_DOUBLE_EQ(st.t_next, 2.5);
  EXPECT_DOUBLE_EQ(st.theta, 0.1);
  EXPECT_DOUBLE_EQ(st.gamma, 0.1);
  EXPECT_DOUBLE_EQ(st.eta, 0.5);
}

TEST(ArcogSchedule, CoefficientsTendToOne) {
  auto st = ArcogSchedule(4.0).at(1000000);
  EXPECT_NEAR(st.theta, 1.0, 1e-4);
  EXPECT_NEAR(st.eta, 1.0, 1e-4);
}

TEST(ArcogSchedule, LemmaConditionsHold) {
  ArcogSchedule s(4.0);
  double worst = 0;
  for (long k = 0; k <= 10000; ++k) {
    worst = std::max(worst, s.lemma_condition_violation(k));
    auto st = s.at(k);
    ASSERT_EQ(st.gamma, st.theta);
    ASSERT_GT(st.theta, 0.0);
    ASSERT_LT(st.theta, 1.0);
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_GT(s.t(0), 2.0);
}

TEST(ArcogSchedule, RejectsSmallNu) {
  EXPECT_THROW(ArcogSchedule(3.0), InfeasibleParameters);
  EXPECT_THROW(ArcogSchedule(1.0), InfeasibleParameters);
  EXPECT_NO_THROW(ArcogSchedule(3.5));
}

// ---------------------------------------------------------------- direct ARCOG

TEST(ArcogDirect, FixedPoint) {
  auto g = random_separable_cocoercive(4, 2, 3);
  const Vector xs = g->solution();
  auto dist = BlockDistribution::uniform(4);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_LT((arcog_step_direct(xs, xs, *g, ArcogSchedule(4), 0.1, dist, i, 7) - xs).norm(), 1e-14);
}

TEST(ArcogDirect, ZeroMomentumIsRcog) {
  auto g = random_monotone_linear(3, 2, 5);
  auto dist = BlockDistribution::uniform(3);
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  Vector x = Vector::LinSpaced(6, -1, 2), xp = Vector::Ones(6);
  for (std::size_t i = 0; i < 3; ++i) {
    Vector a = arcog_step_direct(x, xp, *g, ArcogCoefficients{0.0, p.eta, p.gamma}, p.omega, dist, i);
    EXPECT_EQ(a, rcog_step(x, xp, *g, p, dist, i));
  }
}

TEST(ArcogDirect, HandExample) {
  Vector x = Vector::Constant(1, 1.0), xp = Vector::Constant(1, 0.5);
  Vector nx = arcog_step_direct(x, xp, *scalar_identity(), ArcogCoefficients{0.1, 0.5, 0.1}, 1.0,
                                BlockDistribution::uniform(1), 0);
  EXPECT_NEAR(nx(0), 0.6, 1e-15);
}

// ---------------------------------------------------------------- practical ARCOG

TEST(ArcogPractical, FirstStepMatchesDirect) {
  auto g = random_separable_cocoercive(4, 3, 8);
  auto dist = BlockDistribution::uniform(4);
  const double omega = 0.05;
  ArcogSchedule sched(4.0);
  Vector x0 = Vector::LinSpaced(12, 0, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    auto st = arcog_step_practical(PracticalState::start(x0), *g, sched, omega, dist, i, 0);
    Vector direct = arcog_step_direct(x0, x0, *g, sched, omega, dist, i, 0);
    EXPECT_LT((reconstruct_iterate(st) - direct).norm(), 1e-14);
    EXPECT_DOUBLE_EQ(st.c, sched.at(0).theta);
    EXPECT_DOUBLE_EQ(st.tau, sched.at(0).theta);
  }
}

TEST(ArcogPractical, StepIndexMustMatchState) {
  auto g = random_separable_cocoercive(2, 1, 1);
  auto st = PracticalState::start(Vector::Zero(2));
  EXPECT_THROW(arcog_step_practical(st, *g, ArcogSchedule(4), 0.1, BlockDistribution::uniform(2), 0, 3),
               std::invalid_argument);
}

TEST(ArcogPractical, ZeroOperatorLeavesStateStatic) {
  auto g = std::make_shared<LinearOperator>(uniform_part(3, 2), Matrix::Zero(6, 6), Vector::Zero(6));
  auto dist = BlockDistribution::uniform(3);
  Vector x0 = Vector::LinSpaced(6, 1, 6);
  auto st = PracticalState::start(x0, 0.0);
  IndexStream idx(1, dist);
  for (long k = 0; k < 200; ++k) {
    arcog_advance_practical(st, *g, ArcogSchedule(4), 0.2, dist, idx.next());
    ASSERT_EQ(st.z, x0);
    ASSERT_TRUE(st.w.isZero(0));
    ASSERT_EQ(reconstruct_iterate(st), x0);
  }
}

TEST(ArcogPractical, TauDecreasesAndCGrows) {
  auto g = random_separable_cocoercive(3, 2, 2);
  auto dist = BlockDistribution::uniform(3);
  auto st = PracticalState::start(Vector::Zero(6), 0.0);
  IndexStream idx(9, dist);
  double tau = st.tau, c = st.c;
  for (long k = 0; k < 100; ++k) {
    arcog_advance_practical(st, *g, ArcogSchedule(4), 0.1, dist, idx.next());
    ASSERT_GT(st.tau, 0.0);
    ASSERT_LT(st.tau, tau);
    ASSERT_GE(st.c, c);
    tau = st.tau;
    c = st.c;
  }
}

TEST(ArcogPractical, ReconstructionAtStartAndWithZeroW) {
  Vector x0 = Vector::LinSpaced(4, -2, 2);
  auto st = PracticalState::start(x0);
  EXPECT_EQ(reconstruct_iterate(st), x0);
  EXPECT_EQ(reconstruct_previous(st), x0);
  st.c = 3.7;
  EXPECT_EQ(reconstruct_iterate(st), x0);
}

TEST(ArcogPractical, RebasePreservesIterates) {
  auto g = random_separable_cocoercive(4, 2, 6);
  auto dist = BlockDistribution::uniform(4);
  auto st = PracticalState::start(Vector::Ones(8), 0.0);
  IndexStream idx(4, dist);
  for (long k = 0; k < 40; ++k) arcog_advance_practical(st, *g, ArcogSchedule(4), 0.1, dist, idx.next());
  const Vector cur = reconstruct_iterate(st), prev = reconstruct_previous(st);
  rebase(st);
  EXPECT_LT((reconstruct_iterate(st) - cur).norm(), 1e-9 * (1 + cur.norm()));
  EXPECT_LT((reconstruct_previous(st) - prev).norm(), 1e-9 * (1 + prev.norm()));
  EXPECT_EQ(st.c, 0.0);
  EXPECT_EQ(st.tau, 1.0);
}

TEST(ArcogPractical, MatchesDirectOverLongRun) {
  auto g = random_separable_cocoercive(8, 5, 1);
  auto dist = BlockDistribution::uniform(8);
  auto beta = default_beta(g->cocoercivity());
  std::size_t rebases = 0;
  const double dev = max_relative_deviation(g, dist, 4.0, default_arcog_omega(beta, dist), 5000, 1, 1e-4, &rebases);
  EXPECT_LE(dev, 1e-6);
  EXPECT_GT(rebases, 0u);
}

TEST(ArcogPractical, MatchesDirectOnCoupledOperator) {
  auto g = random_monotone_linear(4, 2, 3);
  auto dist = BlockDistribution({0.1, 0.2, 0.3, 0.4});
  EXPECT_LE(max_relative_deviation(g, dist, 5.0, 0.02, 2000, 2, 1e-4, nullptr), 1e-6);
}

TEST(ArcogPractical, WithoutRebasingThePrecisionDrifts) {
  auto g = random_separable_cocoercive(8, 5, 1);
  auto dist = BlockDistribution::uniform(8);
  auto beta = default_beta(g->cocoercivity());
  const double dev = max_relative_deviation(g, dist, 4.0, default_arcog_omega(beta, dist), 5000, 1, 0.0, nullptr);
  EXPECT_GT(dev, 1e-6);
}

TEST(ArcogPractical, TauFloorRaises) {
  auto g = random_separable_cocoercive(2, 1, 1);
  auto st = PracticalState::start(Vector::Zero(2), 0.0);
  st.tau = 2e-250;
  EXPECT_THROW(arcog_advance_practical(st, *g, ArcogSchedule(4), 0.1, BlockDistribution::uniform(2), 0),
               RenormalizationNeeded);
}

// ---------------------------------------------------------------- constants

TEST(ArcogConstants, EqualBlocksClosedForm) {
  for (std::size_t n : {2u, 5u, 10u}) {
    const double beta = 0.7;
    std::vector<double> b(n, beta);
    auto c = arcog_constants(4.0, beta / n, b, b, BlockDistribution::uniform(n));
    EXPECT_NEAR(c.lambda0_bar, 1.0 / beta, 1e-12);
    EXPECT_NEAR(c.lambda1, beta, 1e-12);
    EXPECT_NEAR(c.lambda2, (n - 1.0) / beta, 1e-12);
    EXPECT_NEAR(c.lambda3, n / beta, 1e-12);
  }
}

TEST(ArcogConstants, TwoBlockArithmetic) {
  auto c = arcog_constants(4.0, 0.5, {1, 1}, {1, 1}, BlockDistribution::uniform(2));
  EXPECT_DOUBLE_EQ(c.lambda0_bar, 1.0);
  EXPECT_DOUBLE_EQ(c.lambda1, 1.0);
  EXPECT_DOUBLE_EQ(c.lambda2, 1.0);
  EXPECT_DOUBLE_EQ(c.lambda3, 2.0);
  EXPECT_NEAR(c.c0, 96.5625, 1e-12);
  EXPECT_NEAR(c.c1, 3186.0, 1e-9);
  EXPECT_NEAR(c.c2, 1605.0, 1e-9);
  EXPECT_NEAR(c.envelope(0), 8 * (96.5625 + 1605.0) / (0.25 * 16), 1e-9);
}

TEST(ArcogConstants, OmegaCeilingRejected) {
  EXPECT_THROW(arcog_constants(4.0, 1.0, {1, 1}, {1, 1}, BlockDistribution::uniform(2)), InfeasibleParameters);
  EXPECT_THROW(arcog_constants(4.0, 0.0, {1, 1}, {1, 1}, BlockDistribution::uniform(2)), InfeasibleParameters);
  EXPECT_THROW(arcog_constants(3.0, 0.5, {1, 1}, {1, 1}, BlockDistribution::uniform(2)), InfeasibleParameters);
}

TEST(ArcogConstants, DefaultsAreAdmissible) {
  auto g = random_separable_cocoercive(6, 2, 4);
  auto dist = BlockDistribution({0.1, 0.1, 0.2, 0.2, 0.2, 0.2});
  auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  auto c = arcog_constants(4.0, omega, beta, g->cocoercivity(), dist);
  EXPECT_GT(c.lambda1, 0.0);
  EXPECT_TRUE(std::isfinite(c.c0));
  EXPECT_GT(c.c2, 0.0);
}
