#include <gtest/gtest.h>

#include <random>

#include "blocksolve/diagnostics.hpp"
#include "blocksolve/errors.hpp"
#include "blocksolve/fedsim.hpp"
#include "blocksolve/instances.hpp"

using namespace blocksolve;

namespace {

SplitProblemPtr affine_problem(std::size_t n, std::size_t p, std::uint64_t seed) {
  SplitInstanceOptions o;
  o.users = n;
  o.dim = p;
  return std::make_shared<const SplitProblem>(random_split_affine(o, seed));
}

RcogParams fedog_params(const SplitProblem& prob, double lambda, const BlockDistribution& dist) {
  const double ls = fbfs_lipschitz(lambda, prob.lipschitz_constant());
  return derive_rcog_params(1.0, 0.0, std::vector<double>(prob.num_users(), ls), dist);
}

}  // namespace

TEST(FedOg, SolutionIsStatic) {
  auto prob = affine_problem(4, 3, 1);
  auto dist = BlockDistribution::uniform(4);
  const double lam = default_lambda(prob->lipschitz_constant(), 0.0);
  FedOgSimulation sim(prob, lam, fedog_params(*prob, lam, dist), dist, *prob->solution);
  const Vector x0 = sim.global_iterate();
  IndexStream idx(2, dist);
  for (int k = 0; k < 50; ++k) sim.round(idx.next());
  EXPECT_LT((sim.global_iterate() - x0).norm(), 1e-12);
  EXPECT_LT(sim.certificate(), 1e-20);
}

TEST(FedOg, MatchesRcogOnFbfsOperator) {
  auto prob = affine_problem(6, 3, 2);
  auto dist = BlockDistribution::uniform(6);
  const double lam = default_lambda(prob->lipschitz_constant(), 0.0);
  const RcogParams prm = fedog_params(*prob, lam, dist);
  Vector x0 = Vector::LinSpaced(3, -1, 1);
  FedOgSimulation sim(prob, lam, prm, dist, x0);
  auto s = std::make_shared<const FbfsOperator>(prob, lam);
  RcogSolver ref(s, prm, dist, replicate(x0, 6));
  IndexStream idx(7, dist);
  double worst_iter = 0, worst_mean = 0, worst_shift = 0;
  for (int k = 0; k < 2000; ++k) {
    const std::size_t i = idx.next();
    sim.round(i);
    ref.step(i);
    const Vector xr = ref.current();
    worst_iter = std::max(worst_iter, (sim.global_iterate() - xr).norm() / (1 + xr.norm()));
    const Vector m = sim.recomputed_mean();
    worst_mean = std::max(worst_mean, (sim.server_mean() - m).norm() / (1 + m.norm()));
    const Vector xi = sim.global_iterate().segment(static_cast<Eigen::Index>(3 * i), 3);
    worst_shift = std::max(worst_shift, (s->user_shift(xi, i) - (xi - lam * forward(prob->users[i], xi))).norm());
  }
  EXPECT_LE(worst_iter, 1e-10);
  EXPECT_LE(worst_mean, 1e-12);
  EXPECT_LE(worst_shift, 1e-12);
}

TEST(FedOg, LedgerSizes) {
  auto prob = affine_problem(3, 5, 3);
  auto dist = BlockDistribution::uniform(3);
  const double lam = default_lambda(prob->lipschitz_constant(), 0.0);
  FedOgSimulation sim(prob, lam, fedog_params(*prob, lam, dist), dist, Vector::Zero(5));
  auto msgs = sim.round(1);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].direction, Direction::ServerToUser);
  EXPECT_EQ(msgs[0].doubles, 10u);
  EXPECT_EQ(msgs[1].direction, Direction::UserToServer);
  EXPECT_EQ(msgs[1].bytes, 40u);
  EXPECT_THROW(sim.round(3), DimensionError);
}

TEST(FedOg, CertificateDecreasesAlongRun) {
  FederatedConfig cfg;
  cfg.problem = affine_problem(4, 3, 4);
  cfg.rounds = 4000;
  cfg.seed = 3;
  cfg.x0 = Vector::Constant(3, 2.0);
  auto tr = run_federated(cfg);
  std::vector<double> y;
  for (const auto& r : tr.rows) y.push_back(r.certificate);
  EXPECT_TRUE(trend_surrogate(y, 0.0).decreasing);
  EXPECT_LT(y.back(), y.front());
}

TEST(AcFedDr, ConsensusZeroIsStatic) {
  SplitProblem prob;
  prob.dim = 2;
  prob.users.assign(3, ZeroMap{});
  auto pp = std::make_shared<const SplitProblem>(prob);
  auto dist = BlockDistribution::uniform(3);
  Vector u0(2);
  u0 << 0.5, -1.5;
  AcFedDrSimulation sim(pp, 1.0, ArcogSchedule(4), 1.0 / 3.0, dist, u0);
  IndexStream idx(1, dist);
  for (int k = 0; k < 100; ++k) sim.round(idx.next());
  EXPECT_LT((sim.reconstructed_u() - replicate(u0, 3)).norm(), 1e-14);
}

TEST(AcFedDr, MatchesDirectArcogOnDrsOperator) {
  auto prob = affine_problem(5, 3, 5);
  auto dist = BlockDistribution::uniform(5);
  const double beta = 1.0, omega = beta * dist.p_min();
  Vector u0 = Vector::LinSpaced(3, 1, -1);
  AcFedDrSimulation sim(prob, beta, ArcogSchedule(4), omega, dist, u0);
  auto g = std::make_shared<const DrsOperator>(prob, beta);
  ArcogDirectSolver ref(g, ArcogSchedule(4), omega, dist, replicate(u0, 5));
  IndexStream idx(11, dist);
  double worst = 0, worst_hat = 0, worst_z = 0, worst_w = 0;
  for (int k = 0; k < 2000; ++k) {
    const std::size_t i = idx.next();
    sim.round(i);
    ref.step(i);
    const Vector ur = ref.current();
    const Vector us = sim.reconstructed_u();
    worst = std::max(worst, (us - ur).norm() / (1 + ur.norm()));
    const Vector hat = consensus_resolvent(us, 5, beta, prob->central).hat;
    worst_hat = std::max(worst_hat, (sim.consensus_point() - hat).norm() / (1 + hat.norm()));
    const Vector zm = sim.recomputed_z_mean(), wm = sim.recomputed_w_mean();
    worst_z = std::max(worst_z, (sim.server_z_mean() - zm).norm() / (1 + zm.norm()));
    worst_w = std::max(worst_w, (sim.server_w_mean() - wm).norm() / (1 + wm.norm()));
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_LE(worst_hat, 1e-12);
  EXPECT_LE(worst_z, 1e-12);
  EXPECT_LE(worst_w, 1e-12);
  EXPECT_GT(sim.rebases(), 0u);
}

TEST(AcFedDr, OmegaCeiling) {
  auto prob = affine_problem(4, 2, 6);
  EXPECT_THROW(AcFedDrSimulation(prob, 1.0, ArcogSchedule(4), 0.5, BlockDistribution::uniform(4), Vector::Zero(2)),
               InfeasibleParameters);
}

TEST(RunFederated, ZeroRoundsGivesInitialRow) {
  for (auto alg : {FederatedAlgorithm::FedOG, FederatedAlgorithm::AcFedDR}) {
    FederatedConfig cfg;
    cfg.algorithm = alg;
    cfg.problem = affine_problem(3, 2, 7);
    cfg.rounds = 0;
    auto tr = run_federated(cfg);
    ASSERT_EQ(tr.rows.size(), 1u);
    EXPECT_FALSE(tr.rows[0].sampled_user.has_value());
    EXPECT_EQ(tr.rows[0].cumulative_bytes, 0u);
    EXPECT_TRUE(tr.ledger.empty());
  }
}

TEST(RunFederated, Deterministic) {
  for (auto alg : {FederatedAlgorithm::FedOG, FederatedAlgorithm::AcFedDR}) {
    FederatedConfig cfg;
    cfg.algorithm = alg;
    cfg.problem = affine_problem(4, 3, 8);
    cfg.rounds = 300;
    cfg.seed = 99;
    cfg.lyapunov = true;
    auto a = run_federated(cfg);
    auto b = run_federated(cfg);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      ASSERT_EQ(a.rows[k].certificate, b.rows[k].certificate);
      ASSERT_EQ(a.rows[k].sampled_user, b.rows[k].sampled_user);
      ASSERT_EQ(a.rows[k].lyapunov, b.rows[k].lyapunov);
    }
  }
}

TEST(RunFederated, AcFedDrRate) {
  SplitInstanceOptions o;
  o.users = 6;
  o.dim = 4;
  FederatedConfig cfg;
  cfg.algorithm = FederatedAlgorithm::AcFedDR;
  cfg.problem = std::make_shared<const SplitProblem>(random_split_affine(o, 1));
  cfg.rounds = 10000;
  cfg.seed = 5;
  cfg.keep_ledger = false;
  cfg.x0 = Vector::Ones(4);
  auto tr = run_federated(cfg);
  std::vector<double> y;
  for (const auto& r : tr.rows) y.push_back(r.certificate);
  EXPECT_LE(fit_rate_slope(y, 100, 10000).slope, -1.7);
}

TEST(RunFederated, LyapunovTracked) {
  FederatedConfig cfg;
  cfg.problem = affine_problem(3, 2, 9);
  cfg.rounds = 20;
  cfg.lyapunov = true;
  auto tr = run_federated(cfg);
  for (const auto& r : tr.rows) ASSERT_TRUE(r.lyapunov.has_value());
  cfg.lyapunov = false;
  EXPECT_FALSE(run_federated(cfg).rows[5].lyapunov.has_value());
}

TEST(RunFederated, AlgorithmNames) {
  EXPECT_EQ(federated_algorithm_from_string("fedog"), FederatedAlgorithm::FedOG);
  EXPECT_EQ(to_string(FederatedAlgorithm::AcFedDR), "acfeddr");
  EXPECT_THROW(federated_algorithm_from_string("fedavg"), std::invalid_argument);
}
